#pragma once

#include <string>
#include <vector>

#include "ddss/expr.hpp"
#include "ddss/quadrature.hpp"
#include "ddss/tensor.hpp"

namespace ddss {

// Functions spanning one delay segment [a, b]: f (d entries, C^1) and phi
// (delta entries, L^2), with df/dtau = M * fhat where fhat = [phi; f].
struct KernelBasis {
    std::vector<Expr> f;
    std::vector<Expr> phi;
    Mat m;  // d x (delta + d)
    double a = 0.0;
    double b = 0.0;

    int d() const { return static_cast<int>(f.size()); }
    int delta() const { return static_cast<int>(phi.size()); }
    int kappa() const { return d() + delta(); }
    bool empty() const { return kappa() == 0; }

    Vec f_at(double tau) const;
    Vec phi_at(double tau) const;
    Vec fhat_at(double tau) const;
};

struct BasisGeometry {
    Mat g;       // Gram of fhat, kappa x kappa
    Mat f_gram;  // Gram of f, d x d
    Mat sqrt_g, sqrt_g_inv, sqrt_f, sqrt_f_inv;
    // Smallest over largest eigenvalue of g. Below the SPD tolerance the
    // square root is taken on the PSD cone and sqrt_g_inv is a pseudo-inverse.
    double g_eig_ratio = 1.0;
    bool g_numerically_singular = false;
};

BasisGeometry compute_geometry(const KernelBasis& basis, const QuadConfig& cfg = {});

struct CheckReport {
    std::string name;
    bool pass = true;
    double worst = 0.0;     // largest deviation seen
    double worst_at = 0.0;  // tau of the largest deviation
    std::string detail;
};

CheckReport check_ode_closure(const KernelBasis& basis, int samples = 101, double tol = 1e-6);

// Compares kernel(tau) with coeff * (fhat(tau) kron I_c) at equispaced samples,
// where c is the column count of the kernel grid.
CheckReport check_decomposition(const std::vector<std::vector<Expr>>& kernel, const Mat& coeff,
                                const KernelBasis& basis, int width, int samples = 101,
                                double tol = 1e-9);

Mat eval_grid(const std::vector<std::vector<Expr>>& grid, double t);

}  // namespace ddss
