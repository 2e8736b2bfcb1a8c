#include "ddss/basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ddss/error.hpp"

namespace ddss {

namespace {

Vec eval_list(const std::vector<Expr>& list, double tau) {
    Vec v(static_cast<Eigen::Index>(list.size()));
    for (std::size_t i = 0; i < list.size(); ++i) v(static_cast<Eigen::Index>(i)) = list[i].eval(tau);
    return v;
}

}  // namespace

Vec KernelBasis::f_at(double tau) const { return eval_list(f, tau); }

Vec KernelBasis::phi_at(double tau) const { return eval_list(phi, tau); }

Vec KernelBasis::fhat_at(double tau) const {
    Vec v(kappa());
    v << phi_at(tau), f_at(tau);
    return v;
}

BasisGeometry compute_geometry(const KernelBasis& basis, const QuadConfig& cfg) {
    BasisGeometry geo;
    if (basis.empty()) {
        geo.g = geo.f_gram = geo.sqrt_g = geo.sqrt_g_inv = geo.sqrt_f = geo.sqrt_f_inv = Mat(0, 0);
        return geo;
    }
    if (!(basis.b > basis.a))
        throw Error(ErrorKind::Input, "compute_geometry: basis interval is degenerate");
    geo.g = symmetrize(quad_matrix(
        [&](double t) {
            Vec v = basis.fhat_at(t);
            return Mat(v * v.transpose());
        },
        basis.a, basis.b, cfg));
    geo.f_gram = symmetrize(quad_matrix(
        [&](double t) {
            Vec v = basis.f_at(t);
            return Mat(v * v.transpose());
        },
        basis.a, basis.b, cfg));

    if (basis.d() > 0) {
        try {
            geo.sqrt_f = sqrt_spd(geo.f_gram);
            geo.sqrt_f_inv = inv_sqrt_spd(geo.f_gram);
        } catch (const Error&) {
            throw Error(ErrorKind::NotPositiveDefinite,
                        "compute_geometry: Gram matrix of f is not positive definite on [" +
                            std::to_string(basis.a) + ", " + std::to_string(basis.b) +
                            "]; the f functions are linearly dependent");
        }
    } else {
        geo.sqrt_f = geo.sqrt_f_inv = Mat(0, 0);
    }

    Eigen::SelfAdjointEigenSolver<Mat> es(geo.g);
    const Vec& lam = es.eigenvalues();
    const double top = std::max(1.0, lam.cwiseAbs().maxCoeff());
    geo.g_eig_ratio = lam.minCoeff() / lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() > 1e-10 * top) {
        geo.sqrt_g = sqrt_spd(geo.g);
        geo.sqrt_g_inv = inv_sqrt_spd(geo.g);
        return geo;
    }
    // Round-off level: eigenvalues this small cannot be resolved in double
    // precision, so only a sign violation beyond it counts.
    const double noise = 64.0 * basis.kappa() * std::numeric_limits<double>::epsilon() * top;
    if (lam.minCoeff() < -noise)
        throw Error(ErrorKind::NotPositiveDefinite,
                    "compute_geometry: Gram matrix of [phi; f] is indefinite");
    geo.g_numerically_singular = true;
    geo.sqrt_g = sqrt_psd(geo.g);
    Vec inv_root(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        inv_root(i) = lam(i) > 1e-10 * top ? 1.0 / std::sqrt(lam(i)) : 0.0;
    geo.sqrt_g_inv = symmetrize(es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose());
    return geo;
}

CheckReport check_ode_closure(const KernelBasis& basis, int samples, double tol) {
    CheckReport rep;
    rep.name = "ode_closure";
    if (basis.d() == 0) {
        rep.detail = "no f functions";
        return rep;
    }
    if (samples < 2) throw Error(ErrorKind::Input, "check_ode_closure: need at least 2 samples");
    if (basis.m.rows() != basis.d() || basis.m.cols() != basis.kappa())
        throw Error(ErrorKind::Dimension, "check_ode_closure: M has wrong shape");
    const double len = basis.b - basis.a;
    const double h = len / 1e6;
    for (int i = 0; i < samples; ++i) {
        double tau = basis.a + len * i / (samples - 1);
        tau = std::clamp(tau, basis.a + h, basis.b - h);
        Vec fd = (basis.f_at(tau + h) - basis.f_at(tau - h)) / (2.0 * h);
        Vec rhs = basis.m * basis.fhat_at(tau);
        double dev = (fd - rhs).cwiseAbs().maxCoeff();
        if (dev > rep.worst) {
            rep.worst = dev;
            rep.worst_at = tau;
        }
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

Mat eval_grid(const std::vector<std::vector<Expr>>& grid, double t) {
    const auto rows = static_cast<Eigen::Index>(grid.size());
    const auto cols = rows ? static_cast<Eigen::Index>(grid[0].size()) : 0;
    Mat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(grid[i].size()) != cols)
            throw Error(ErrorKind::Dimension, "eval_grid: ragged expression grid");
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = grid[i][j].eval(t);
    }
    return out;
}

CheckReport check_decomposition(const std::vector<std::vector<Expr>>& kernel, const Mat& coeff,
                                const KernelBasis& basis, int width, int samples, double tol) {
    CheckReport rep;
    rep.name = "decomposition";
    const int rows = static_cast<int>(kernel.size());
    const int cols = rows ? static_cast<int>(kernel[0].size()) : 0;
    if (rows != width || coeff.rows() != width || coeff.cols() != basis.kappa() * cols)
        throw Error(ErrorKind::Dimension,
                    "check_decomposition: coefficient is " + std::to_string(coeff.rows()) + "x" +
                        std::to_string(coeff.cols()) + ", expected " + std::to_string(width) + "x" +
                        std::to_string(basis.kappa() * cols));
    if (samples < 2) samples = 2;
    const Mat ic = eye(cols);
    for (int i = 0; i < samples; ++i) {
        double tau = basis.a + (basis.b - basis.a) * i / (samples - 1);
        Mat k = eval_grid(kernel, tau);
        Mat rebuilt = coeff * kron(basis.fhat_at(tau), ic);
        double dev = (k - rebuilt).cwiseAbs().maxCoeff();
        if (dev > rep.worst) {
            rep.worst = dev;
            rep.worst_at = tau;
        }
    }
    rep.pass = rep.worst <= tol;
    return rep;
}

}  // namespace ddss
