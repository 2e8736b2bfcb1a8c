#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ddss/basis.hpp"
#include "ddss/simulator.hpp"
#include "ddss/synthesis.hpp"

namespace ddss {

// x'(t) = a0 x(t) + int_{-r}^0 kernel(tau) x(t + tau) dtau + sum_i a_i x(t - tau_i).
struct DelayGenerator {
    int n = 0;
    Mat a0;
    double r = 0.0;
    std::vector<double> breakpoints;  // kernel discontinuities inside (-r, 0)
    std::function<Mat(double)> kernel;
    std::vector<std::pair<double, Mat>> discrete;
};

struct SpectrumOptions {
    int n_start = 16;
    int n_max = 512;
    double tol = 1e-6;
    int leading = 6;
};

struct SpectrumResult {
    double abscissa = 0.0;
    std::vector<std::complex<double>> leading;  // sorted by decreasing real part
    int n = 0;                                  // Chebyshev degree reported
    double change = 0.0;                        // |abscissa(N) - abscissa(N/2)|
};

// Eigenvalues of the collocated generator at one degree, no refinement.
std::vector<std::complex<double>> collocated_spectrum(const DelayGenerator& gen, int degree);

SpectrumResult spectral_abscissa(const DelayGenerator& gen, const SpectrumOptions& opts = {});

// Closed loop with r(t) held at r_const.
DelayGenerator closed_loop_generator(const DelaySystem& sys, const Mat& k, double r_const);
SpectrumResult spectral_abscissa(const DelaySystem& sys, const Mat& k, double r_const, const SpectrumOptions& opts = {});

// The certificate's Krasovskii functional on history segments.
struct FunctionalEvaluator {
    DelaySystem sys;
    Certificate cert;
    Mat sqrt_f1_inv, sqrt_f2_inv;
    QuadConfig quad;

    static FunctionalEvaluator make(const SynthesisContext& ctx, const Certificate& cert, const QuadConfig& quad = {});

    Vec eta(const std::function<Vec(double)>& x, double t) const;
    double operator()(const std::function<Vec(double)>& x, double t) const;
};

// Linear interpolation of a recorded trajectory, falling back to the initial
// functions before t0.
std::function<Vec(double)> trajectory_lookup(const Trajectory& traj, const std::vector<Expr>& history, double t0);

struct SupplyCheck {
    bool pass = true;
    double max_increment = 0.0;  // largest increase of v - int s between samples
    double at = 0.0;
    double slack = 0.0;
    double peak_v = 0.0;
    Vec t, v, supply_integral;
};

// d(t) = v(x_t) - int_{t0}^t s(z, w) on every `stride`-th recorded sample.
SupplyCheck empirical_supply_check(const Trajectory& traj, const SupplyRate& supply, double gamma,
                                   const FunctionalEvaluator& ev, const std::vector<Expr>& history, int stride);

struct InequalityReport {
    int trials = 0;
    std::uint64_t seed = 0;
    double b2_worst = 0.0;         // min over trials of (LHS - RHS) / scale
    double b5_worst = 0.0;
    double forms_max_diff = 0.0;   // the two stated forms of the split bound
    int b2_fail = 0, b5_fail = 0, forms_fail = 0;
    bool pass() const { return b2_fail == 0 && b5_fail == 0 && forms_fail == 0; }
};

InequalityReport check_integral_inequalities(int trials, std::uint64_t seed);

// Closed-form instance: n = 1, U = 1, Y = 0, f = 1 on [0, 1], x = tau, split at 0.5.
struct SplitExample {
    double lhs, single_bound, split_first, split_second;
};
SplitExample split_bound_example();

struct IdentityReport {
    int trials = 0;
    double worst = 0.0;
    bool pass = true;
    std::vector<std::pair<std::string, double>> per_identity;
};

IdentityReport check_kronecker_identities(int trials, std::uint64_t seed, double tol = 1e-12);

// Gram of fhat by composite Simpson at `panels` and 2 * `panels`, Richardson
// extrapolated; independent of the Gauss-Legendre path in compute_geometry.
Mat gram_oracle(const KernelBasis& basis, int panels = 2000);

// compute_geometry against gram_oracle, entrywise.
CheckReport check_geometry(const KernelBasis& basis, const QuadConfig& quad = {}, double tol = 1e-9);

struct CrossCheck {
    bool applicable = true;
    bool feasible = false;
    SolveStatus status = SolveStatus::SolverError;
    double thm1_gamma = 0.0, thm2_gamma = 0.0;
    bool gamma_consistent = false;  // Theorem 1 gamma <= Theorem 2 gamma (within 1e-6 relative)
    std::string message;
};

CrossCheck cross_check_thm2(const SynthesisContext& ctx, const Thm2Solution& sol, const AnalysisOptions& opts = {});

// Deterministic 64-bit stream used by the randomized checks.
class SplitMix {
public:
    explicit SplitMix(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    double uniform();                // [0, 1)
    double uniform(double a, double b);
    double normal();
    int integer(int lo, int hi);     // inclusive

private:
    std::uint64_t state_;
};

}  // namespace ddss
