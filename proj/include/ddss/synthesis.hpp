#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddss/lmi.hpp"
#include "ddss/model.hpp"

namespace ddss {

// Constant data shared by every Theorem 1 / Theorem 2 / Algorithm 1 program.
struct SynthesisContext {
    DelaySystem sys;
    SupplyRate supply;
    BasisGeometry geo1, geo2;
    BoldMatrices bold;
    Regime regime;
    int n = 0, m = 0, p = 0, q = 0;
    int l0 = 0;      // length of chi
    int l = 0;       // l0 + m
    int varrho = 0;
    Mat e_bar;  // (n + varrho) x l: chi -> [x(t); I_hat zeta], zero on the trailing m
    Mat f_bar;  // varrho x l: [F_hat kron I_n, O]
    Mat w_bar;  // l x m: [O; -J2^T; J_tilde]

    static SynthesisContext make(const DelaySystem& sys, const SupplyRate& supply, const QuadConfig& quad = {});

    // Sigma = C + B2 K_hat.
    Mat sigma(const Mat& k) const;
    // A + B1 K_hat.
    Mat closed_a(const Mat& k) const;
};

struct Certificate {
    Mat p1, p2, p3, q1, q2, r1m, r2m, y, k;
    std::optional<double> gamma;
};

// Handles to the certificate variables of one program. Blocks forced to zero
// by the regime are constant zero expressions.
struct CertVars {
    AffineMatExpr p1, p2, p3, q1, q2, r1m, r2m, y, gamma;
    bool gamma_var = false;
};

CertVars declare_certificate(LmiProblem& prob, const SynthesisContext& ctx, const std::string& suffix);

// [P1 P2; * P3].
AffineMatExpr p_big(const CertVars& v);
// L0 x L0 lower-bound matrix, including J3 in its w block.
AffineMatExpr xi_matrix(const SynthesisContext& ctx, const CertVars& v);
// l x l: Sy(E^T [P2; P3] F_bar + W_bar [Sigma O]) - (Xi dsum (-J1)).
AffineMatExpr phi_matrix(const SynthesisContext& ctx, const CertVars& v, const AffineMatExpr& sigma);
// Positivity conditions on the functional: the [P] + Q block condition and
// the PSD conditions on Q1, Q2, R1 and [R2 Y; * R2].
void add_functional_positivity(LmiProblem& prob, const SynthesisContext& ctx, const CertVars& v,
                               const std::string& suffix);

// Direct numeric evaluation of the conditions for a certificate.
struct Thm1Matrices {
    Mat positivity;  // must be > 0
    Mat q1, q2, r1m, r2y;  // must be >= 0
    Mat dissipation;  // l x l, must be < 0
};
Thm1Matrices thm1_matrices(const SynthesisContext& ctx, const Certificate& cert);

struct Thm1Slacks {
    double positivity = 0.0;   // min eig
    double psd = 0.0;          // min over the PSD blocks
    double dissipation = 0.0;  // -max eig
    bool holds(double tol) const { return positivity > -tol && psd > -tol && dissipation > -tol; }
};
Thm1Slacks thm1_slacks(const SynthesisContext& ctx, const Certificate& cert);

struct AnalysisOptions {
    bool min_gamma = true;          // gamma-mode supplies only
    std::optional<double> gamma;    // fixed gamma for an L2 supply
    SolverConfig solver;
};

struct AnalysisResult {
    SolveStatus status = SolveStatus::SolverError;
    Certificate cert;
    Thm1Slacks slacks;
    SolveOutcome outcome;
    int constraint_size = 0;  // side of the dissipation LMI
};

// Theorem 1 with a numeric gain.
LmiProblem build_thm1(const SynthesisContext& ctx, const Mat& k, const AnalysisOptions& opts, CertVars* vars_out = nullptr);
AnalysisResult analyze(const SynthesisContext& ctx, const Mat& k, const AnalysisOptions& opts = {});

struct Thm2Solution {
    SolveStatus status = SolveStatus::SolverError;
    Mat x, v, k;
    std::map<std::string, Mat> acute;  // P1, P2, P3, Q1, Q2, R1, R2, Y
    std::optional<double> gamma;
    std::vector<double> alphas;
    SolveOutcome outcome;
    int constraint_size = 0;
};

// Defaults to zeros of length three_hat + kappa; `overrides` maps 1-based
// positions to values.
std::vector<double> make_alphas(const SynthesisContext& ctx, const std::map<int, double>& overrides);

Thm2Solution synthesize_thm2(const SynthesisContext& ctx, const std::vector<double>& alphas,
                             const AnalysisOptions& opts = {});

// U(H, K) of the bilinear condition, evaluated numerically.
Mat u_matrix(const SynthesisContext& ctx, const Certificate& cert);

struct OverestimateVars {
    CertVars cert;
    AffineMatExpr k;  // p x n
    AffineMatExpr z;  // n x n symmetric
};

// Convex inner approximation of U(H, K) < 0 around the anchors (H~, K~):
// a square block of side l + 2n, affine in every decision variable.
AffineMatExpr overestimate_lmi(const SynthesisContext& ctx, const OverestimateVars& v, const Mat& h_tilde,
                               const Mat& k_tilde);

struct Alg1Options {
    std::vector<double> alphas;
    double rho1 = 1.0, rho2 = 1.0;
    double eps = 1e-3;
    int max_iters = 50;
    AnalysisOptions analysis;
    bool verbose = false;
};

struct Alg1Iterate {
    int iter = 0;
    double gamma = 0.0;   // NaN without a gamma supply
    double change = 0.0;  // relative infinity-norm change of (H, K)
    double u_max_eig = 0.0;
    Mat k;
    SolveStatus status = SolveStatus::Optimal;
    double seconds = 0.0;
};

struct Alg1State {
    Mat h, k, h_tilde, k_tilde, z;
    double rho1 = 1.0, rho2 = 1.0, eps = 1e-3;
    std::vector<Alg1Iterate> trace;  // entry 0 is the initialization
    Thm2Solution init;
    bool converged = false;
    std::string stop_reason;
};

struct Alg1Result {
    Certificate cert;
    Alg1State state;
};

// Relative change ||vec(H,K) - vec(H~,K~)||_inf / (||vec(H~,K~)||_inf + 1).
double relative_change(const Mat& h, const Mat& k, const Mat& h_tilde, const Mat& k_tilde);

Alg1Result algorithm1(const SynthesisContext& ctx, const Alg1Options& opts);

}  // namespace ddss
