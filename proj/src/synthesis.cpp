#include "ddss/synthesis.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ddss/error.hpp"

namespace ddss {

SynthesisContext SynthesisContext::make(const DelaySystem& sys, const SupplyRate& supply, const QuadConfig& quad) {
    sys.validate();
    if (supply.m() != sys.m || supply.q() != sys.q)
        throw Error(ErrorKind::Dimension, "supply rate dimensions do not match the system outputs/disturbances");
    SynthesisContext ctx;
    ctx.sys = sys;
    ctx.supply = supply;
    ctx.geo1 = compute_geometry(sys.basis1, quad);
    ctx.geo2 = compute_geometry(sys.basis2, quad);
    ctx.bold = assemble_bold(sys, ctx.geo1, ctx.geo2);
    ctx.regime = sys.regime();
    ctx.n = sys.n;
    ctx.m = sys.m;
    ctx.p = sys.p;
    ctx.q = sys.q;
    ctx.l0 = ctx.bold.chi.total;
    ctx.l = ctx.l0 + ctx.m;
    ctx.varrho = sys.varrho();

    const ChiLayout& chi = ctx.bold.chi;
    const int n = ctx.n, r = ctx.varrho;
    ctx.e_bar = Mat::Zero(n + r, ctx.l);
    ctx.e_bar.block(0, chi.offset_of(ChiBlock::X), n, n) = eye(n);
    ctx.e_bar.block(n, chi.offset_of(ChiBlock::Zeta1), r, ctx.bold.i_hat.cols()) = ctx.bold.i_hat;
    ctx.f_bar = Mat::Zero(r, ctx.l);
    ctx.f_bar.leftCols(ctx.l0 - ctx.q) = kron(ctx.bold.f_hat, eye(n));
    ctx.w_bar = Mat::Zero(ctx.l, ctx.m);
    ctx.w_bar.block(chi.offset_of(ChiBlock::W), 0, ctx.q, ctx.m) = -supply.j2.transpose();
    ctx.w_bar.block(ctx.l0, 0, ctx.m, ctx.m) = supply.j_tilde;
    return ctx;
}

Mat SynthesisContext::sigma(const Mat& k) const { return bold.c + bold.b2 * k_hat(sys, k); }

Mat SynthesisContext::closed_a(const Mat& k) const { return bold.a + bold.b1 * k_hat(sys, k); }

namespace {


AffineMatExpr zero_expr(int r, int c) { return AffineMatExpr::zero(r, c); }

AffineMatExpr cexpr(const Mat& m) { return AffineMatExpr(m); }

CertVars declare_with_gamma(LmiProblem& prob, const SynthesisContext& ctx, const std::string& suffix,
                            std::optional<double> fixed_gamma) {
    const int n = ctx.n, r = ctx.varrho;
    CertVars v;
    v.p1 = prob.ref(prob.sym("P1" + suffix, n));
    v.p2 = prob.ref(prob.rect("P2" + suffix, n, r));
    v.p3 = prob.ref(prob.sym("P3" + suffix, r));
    if (ctx.regime.has_x_r1) {
        v.q1 = prob.ref(prob.sym("Q1" + suffix, n));
        v.r1m = prob.ref(prob.sym("R1" + suffix, n));
    } else {
        v.q1 = v.r1m = zero_expr(n, n);
    }
    if (ctx.regime.has_x_r2) {
        v.q2 = prob.ref(prob.sym("Q2" + suffix, n));
        v.r2m = prob.ref(prob.sym("R2" + suffix, n));
        v.y = prob.ref(prob.rect("Y" + suffix, n, n));
    } else {
        v.q2 = v.r2m = v.y = zero_expr(n, n);
    }
    if (ctx.supply.gamma_mode) {
        if (fixed_gamma) {
            v.gamma = cexpr(Mat::Constant(1, 1, *fixed_gamma));
        } else {
            v.gamma = prob.ref(prob.scalar("gamma"));
            v.gamma_var = true;
        }
    } else {
        v.gamma = zero_expr(1, 1);
    }
    return v;
}

AffineMatExpr scaled_identity(const AffineMatExpr& s, int k) { return kron(eye(k), s); }

AffineMatExpr j1_expr(const SynthesisContext& ctx, const CertVars& v) {
    if (ctx.supply.gamma_mode) return -scaled_identity(v.gamma, ctx.m);
    return cexpr(ctx.supply.j1);
}

AffineMatExpr j3_expr(const SynthesisContext& ctx, const CertVars& v) {
    if (ctx.supply.gamma_mode) return scaled_identity(v.gamma, ctx.q);
    return cexpr(ctx.supply.j3);
}

Mat commutation_pair(int k2, int n, bool left) {
    Mat k = left ? commutation_matrix(k2, n) : commutation_matrix(n, k2);
    return dsum(k, k);
}

Mat h_of(const Certificate& c) {
    Mat h(c.p1.rows(), c.p1.cols() + c.p2.cols());
    h << c.p1, c.p2;
    return h;
}

}  // namespace

CertVars declare_certificate(LmiProblem& prob, const SynthesisContext& ctx, const std::string& suffix) {
    return declare_with_gamma(prob, ctx, suffix, std::nullopt);
}

AffineMatExpr p_big(const CertVars& v) { return blocks({{v.p1, v.p2}, {v.p2.transpose(), v.p3}}); }

AffineMatExpr xi_matrix(const SynthesisContext& ctx, const CertVars& v) {
    const int n = ctx.n, k1 = ctx.sys.kappa1(), k2 = ctx.sys.kappa2();
    const double r1 = ctx.sys.r1, r3 = ctx.sys.r3();
    AffineMatExpr w = blocks({{v.r2m, v.y}, {v.y.transpose(), v.r2m}});
    AffineMatExpr zeta23 = commutation_pair(k2, n, true) * kron(w, eye(k2)) * commutation_pair(k2, n, false);
    AffineMatExpr interior = dsum({v.q1 - v.q2 - r3 * v.r2m, v.q2, -v.q1 - r1 * v.r1m, kron(eye(k1), v.r1m),
                                   zeta23, j3_expr(ctx, v)});
    const Mat t = regime_merge(ctx.sys, n, ctx.q);
    return t.transpose() * interior * t;
}

AffineMatExpr phi_matrix(const SynthesisContext& ctx, const CertVars& v, const AffineMatExpr& sigma) {
    AffineMatExpr p23 = blocks({{v.p2}, {v.p3}});
    AffineMatExpr sigma_bar = blocks({{sigma, zero_expr(ctx.m, ctx.m)}});
    AffineMatExpr inner = ctx.e_bar.transpose() * p23 * ctx.f_bar + ctx.w_bar * sigma_bar;
    return sy(inner) - dsum({xi_matrix(ctx, v), -j1_expr(ctx, v)});
}

void add_functional_positivity(LmiProblem& prob, const SynthesisContext& ctx, const CertVars& v,
                               const std::string& suffix) {
    const int n = ctx.n, d1 = ctx.sys.d1n(), d2 = ctx.sys.d2n();
    AffineMatExpr pos = p_big(v) + dsum({zero_expr(n, n), kron(eye(d1), v.q1), kron(eye(d2), v.q2)});
    prob.add("positivity" + suffix, pos, Sense::PosDef);
    if (ctx.regime.has_x_r1) {
        prob.add("Q1" + suffix + ">=0", v.q1, Sense::PosSemi);
        prob.add("R1" + suffix + ">=0", v.r1m, Sense::PosSemi);
    }
    if (ctx.regime.has_x_r2) {
        prob.add("Q2" + suffix + ">=0", v.q2, Sense::PosSemi);
        prob.add("[R2 Y]" + suffix + ">=0", blocks({{v.r2m, v.y}, {v.y.transpose(), v.r2m}}), Sense::PosSemi);
    }
}

Thm1Matrices thm1_matrices(const SynthesisContext& ctx, const Certificate& c) {
    const int n = ctx.n, m = ctx.m, q = ctx.q;
    const int k1 = ctx.sys.kappa1(), k2 = ctx.sys.kappa2(), d1 = ctx.sys.d1n(), d2 = ctx.sys.d2n();
    const double r1 = ctx.sys.r1, r3 = ctx.sys.r3();
    const double g = c.gamma.value_or(0.0);
    const Mat j1 = ctx.supply.gamma_mode ? Mat(-g * eye(m)) : ctx.supply.j1;
    const Mat j3 = ctx.supply.gamma_mode ? Mat(g * eye(q)) : ctx.supply.j3;
    Thm1Matrices out;
    Mat pbig(n + ctx.varrho, n + ctx.varrho);
    pbig << c.p1, c.p2, c.p2.transpose(), c.p3;
    out.positivity = pbig + dsum({zeros(n, n), kron(eye(d1), c.q1), kron(eye(d2), c.q2)});
    out.q1 = c.q1;
    out.q2 = c.q2;
    out.r1m = c.r1m;
    out.r2y.resize(2 * n, 2 * n);
    out.r2y << c.r2m, c.y, c.y.transpose(), c.r2m;

    Mat w = out.r2y;
    Mat zeta23 = commutation_pair(k2, n, true) * kron(w, eye(k2)) * commutation_pair(k2, n, false);
    Mat interior = dsum({Mat(c.q1 - c.q2 - r3 * c.r2m), c.q2, Mat(-c.q1 - r1 * c.r1m), kron(eye(k1), c.r1m), zeta23, j3});
    const Mat t = regime_merge(ctx.sys, n, q);
    Mat xi = t.transpose() * interior * t;

    Mat p23(n + ctx.varrho, ctx.varrho);
    p23 << c.p2, c.p3;
    Mat sigma_bar = Mat::Zero(m, ctx.l);
    sigma_bar.leftCols(ctx.l0) = ctx.sigma(c.k);
    Mat phi = sy(Mat(ctx.e_bar.transpose() * p23 * ctx.f_bar + ctx.w_bar * sigma_bar)) - dsum(xi, Mat(-j1));
    Mat p_bold = h_of(c) * ctx.e_bar;
    Mat pi = Mat::Zero(n, ctx.l);
    pi.leftCols(ctx.l0) = ctx.closed_a(c.k);
    out.dissipation = sy(Mat(p_bold.transpose() * pi)) + phi;
    return out;
}

Thm1Slacks thm1_slacks(const SynthesisContext& ctx, const Certificate& cert) {
    Thm1Matrices mm = thm1_matrices(ctx, cert);
    Thm1Slacks s;
    s.positivity = min_eig(mm.positivity);
    s.psd = std::min({min_eig(mm.q1), min_eig(mm.q2), min_eig(mm.r1m), min_eig(mm.r2y)});
    s.dissipation = -max_eig(mm.dissipation);
    return s;
}

namespace {

// Spectral norm of the certificate-free part of U(H, K).
double u_constant_norm(const SynthesisContext& ctx, const Mat& k) {
    Mat sigma_bar = Mat::Zero(ctx.m, ctx.l);
    sigma_bar.leftCols(ctx.l0) = ctx.sigma(k);
    Mat c = sy(Mat(ctx.w_bar * sigma_bar));
    if (!ctx.supply.gamma_mode) {
        c -= dsum(dsum(zeros(ctx.l0 - ctx.q, ctx.l0 - ctx.q), ctx.supply.j3), Mat(-ctx.supply.j1));
    }
    return c.size() ? Eigen::SelfAdjointEigenSolver<Mat>(c, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff() : 0.0;
}

}  // namespace

Mat u_matrix(const SynthesisContext& ctx, const Certificate& cert) { return thm1_matrices(ctx, cert).dissipation; }

namespace {

Certificate read_certificate(const SynthesisContext& ctx, const SolveOutcome& out, const std::string& suffix,
                             const Mat& k) {
    const int n = ctx.n;
    auto get = [&](const std::string& name) -> Mat {
        auto it = out.values.find(name + suffix);
        return it == out.values.end() ? zeros(n, n) : it->second;
    };
    Certificate c;
    c.p1 = get("P1");
    c.p2 = out.values.at("P2" + suffix);
    c.p3 = out.values.at("P3" + suffix);
    c.q1 = get("Q1");
    c.q2 = get("Q2");
    c.r1m = get("R1");
    c.r2m = get("R2");
    c.y = get("Y");
    c.k = k;
    if (auto it = out.values.find("gamma"); it != out.values.end()) c.gamma = it->second(0, 0);
    return c;
}

std::optional<double> fixed_gamma_of(const SynthesisContext& ctx, const AnalysisOptions& opts) {
    if (!ctx.supply.gamma_mode) return std::nullopt;
    if (opts.gamma) {
        if (!(*opts.gamma > 0.0)) throw Error(ErrorKind::NonPositiveGamma, "gamma must be positive");
        return opts.gamma;
    }
    return std::nullopt;
}

}  // namespace

LmiProblem build_thm1(const SynthesisContext& ctx, const Mat& k, const AnalysisOptions& opts, CertVars* vars_out) {
    if (k.rows() != ctx.p || k.cols() != ctx.n) throw Error(ErrorKind::Dimension, "build_thm1: gain must be p x n");
    LmiProblem prob;
    CertVars v = declare_with_gamma(prob, ctx, "", fixed_gamma_of(ctx, opts));
    add_functional_positivity(prob, ctx, v, "");
    AffineMatExpr p_bold = blocks({{v.p1, v.p2}}) * ctx.e_bar;
    Mat pi = Mat::Zero(ctx.n, ctx.l);
    pi.leftCols(ctx.l0) = ctx.closed_a(k);
    AffineMatExpr diss = sy(p_bold.transpose() * pi) + phi_matrix(ctx, v, cexpr(ctx.sigma(k)));
    prob.add("dissipation", diss, Sense::NegDef);
    if (v.gamma_var && opts.min_gamma) prob.minimize(v.gamma);
    if (vars_out) *vars_out = v;
    return prob;
}

AnalysisResult analyze(const SynthesisContext& ctx, const Mat& k, const AnalysisOptions& opts) {
    LmiProblem prob = build_thm1(ctx, k, opts);
    AnalysisResult res;
    res.constraint_size = ctx.l;
    res.outcome = prob.solve(opts.solver);
    res.status = res.outcome.status;
    if (res.outcome.x.size() == prob.num_scalars()) {
        res.cert = read_certificate(ctx, res.outcome, "", k);
        if (ctx.supply.gamma_mode && !res.cert.gamma) res.cert.gamma = fixed_gamma_of(ctx, opts);
        res.slacks = thm1_slacks(ctx, res.cert);
    }
    return res;
}

std::vector<double> make_alphas(const SynthesisContext& ctx, const std::map<int, double>& overrides) {
    const int len = ctx.regime.three_hat + ctx.sys.kappa();
    std::vector<double> a(len, 0.0);
    for (const auto& [pos, val] : overrides) {
        if (pos < 1 || pos > len)
            throw Error(ErrorKind::Input, "alpha index " + std::to_string(pos) + " outside 1.." + std::to_string(len));
        a[pos - 1] = val;
    }
    return a;
}

Thm2Solution synthesize_thm2(const SynthesisContext& ctx, const std::vector<double>& alphas, const AnalysisOptions& opts) {
    const int n = ctx.n, p = ctx.p, q = ctx.q, m = ctx.m;
    const int blocks_x = ctx.regime.three_hat + ctx.sys.kappa();
    if (static_cast<int>(alphas.size()) != blocks_x)
        throw Error(ErrorKind::Dimension, "synthesize_thm2: need " + std::to_string(blocks_x) + " alphas");
    if (p == 0) throw Error(ErrorKind::Input, "synthesize_thm2: the system has no inputs; use analyze instead");

    LmiProblem prob;
    const std::string sfx = "_acute";
    CertVars v = declare_with_gamma(prob, ctx, sfx, fixed_gamma_of(ctx, opts));
    AffineMatExpr x = prob.ref(prob.sym("X", n));
    AffineMatExpr vg = prob.ref(prob.rect("V", p, n));
    add_functional_positivity(prob, ctx, v, sfx);

    AffineMatExpr x_hat = dsum({kron(eye(blocks_x), x), cexpr(eye(q))});
    AffineMatExpr v_hat = dsum({kron(eye(blocks_x), vg), zero_expr(q, q)});
    AffineMatExpr pi_acute = blocks({{ctx.bold.a * x_hat + ctx.bold.b1 * v_hat, zero_expr(n, m)}});
    AffineMatExpr sigma_acute = ctx.bold.c * x_hat + ctx.bold.b2 * v_hat;
    AffineMatExpr p_acute = blocks({{v.p1, v.p2}}) * ctx.e_bar;
    AffineMatExpr phi_acute = phi_matrix(ctx, v, sigma_acute);

    Vec col = Eigen::Map<const Vec>(alphas.data(), blocks_x);
    Mat stack = Mat::Zero(n + ctx.l, n);
    stack.topRows(n) = eye(n);
    stack.block(n, 0, blocks_x * n, n) = kron(Mat(col), eye(n));
    AffineMatExpr left = blocks({{-x, pi_acute}});
    AffineMatExpr right = blocks({{zero_expr(n, n), p_acute}, {p_acute.transpose(), phi_acute}});
    prob.add("synthesis", sy(stack * left) + right, Sense::NegDef);
    if (v.gamma_var && opts.min_gamma) prob.minimize(v.gamma);

    Thm2Solution sol;
    sol.alphas = alphas;
    sol.constraint_size = n + ctx.l;
    sol.outcome = prob.solve(opts.solver);
    sol.status = sol.outcome.status;
    if (!sol.outcome.feasible()) return sol;
    sol.x = sol.outcome.at("X");
    sol.v = sol.outcome.at("V");
    for (const char* name : {"P1", "P2", "P3", "Q1", "Q2", "R1", "R2", "Y"}) {
        auto it = sol.outcome.values.find(std::string(name) + sfx);
        sol.acute[name] = it == sol.outcome.values.end() ? zeros(n, n) : it->second;
    }
    if (auto it = sol.outcome.values.find("gamma"); it != sol.outcome.values.end()) sol.gamma = it->second(0, 0);
    else if (ctx.supply.gamma_mode) sol.gamma = fixed_gamma_of(ctx, opts);
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(sol.x));
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * std::max(1.0, lmax))
        throw Error(ErrorKind::SingularX, "synthesize_thm2: X is numerically singular");
    sol.k = sol.v * symmetrize(sol.x).inverse();
    return sol;
}

AffineMatExpr overestimate_lmi(const SynthesisContext& ctx, const OverestimateVars& v, const Mat& h_tilde,
                               const Mat& k_tilde) {
    const int n = ctx.n, m = ctx.m, q = ctx.q;
    const int blocks_x = ctx.regime.three_hat + ctx.sys.kappa();
    AffineMatExpr k_hat_e = dsum({kron(eye(blocks_x), v.k), zero_expr(q, q)});
    AffineMatExpr gamma_e = blocks({{ctx.bold.b1 * k_hat_e, zero_expr(n, m)}});
    Mat gamma_t = Mat::Zero(n, ctx.l);
    gamma_t.leftCols(ctx.l0) = ctx.bold.b1 * k_hat(ctx.sys, k_tilde);
    AffineMatExpr p_bold = blocks({{v.cert.p1, v.cert.p2}}) * ctx.e_bar;
    Mat p_t = h_tilde * ctx.e_bar;

    Mat a_bar = Mat::Zero(n, ctx.l);
    a_bar.leftCols(ctx.l0) = ctx.bold.a;
    AffineMatExpr sigma = cexpr(ctx.bold.c) + ctx.bold.b2 * k_hat_e;
    AffineMatExpr phi_hat = sy(p_bold.transpose() * a_bar) + phi_matrix(ctx, v.cert, sigma);

    AffineMatExpr lin = p_t.transpose() * gamma_e + p_bold.transpose() * gamma_t - cexpr(Mat(p_t.transpose() * gamma_t));
    AffineMatExpr tl = phi_hat + sy(lin);
    AffineMatExpr dg = p_bold - cexpr(p_t);
    AffineMatExpr dgam = gamma_e - cexpr(gamma_t);
    return blocks({{tl, dg.transpose(), dgam.transpose()},
                   {dg, -v.z, zero_expr(n, n)},
                   {dgam, zero_expr(n, n), v.z - cexpr(eye(n))}});
}

double relative_change(const Mat& h, const Mat& k, const Mat& h_tilde, const Mat& k_tilde) {
    double num = std::max((h - h_tilde).cwiseAbs().maxCoeff(), (k - k_tilde).cwiseAbs().maxCoeff());
    double den = std::max(h_tilde.cwiseAbs().maxCoeff(), k_tilde.cwiseAbs().maxCoeff());
    return num / (den + 1.0);
}

Alg1Result algorithm1(const SynthesisContext& ctx, const Alg1Options& opts) {
    if (!(opts.rho1 > 0.0) || !(opts.rho2 > 0.0))
        throw Error(ErrorKind::Input, "algorithm1: rho1 and rho2 must be positive");
    if (!(opts.eps > 0.0)) throw Error(ErrorKind::Input, "algorithm1: eps must be positive");
    using clock = std::chrono::steady_clock;
    const int n = ctx.n, p = ctx.p;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    Alg1Result res;
    Alg1State& st = res.state;
    st.rho1 = opts.rho1;
    st.rho2 = opts.rho2;
    st.eps = opts.eps;

    auto t0 = clock::now();
    st.init = synthesize_thm2(ctx, opts.alphas, opts.analysis);
    if (!st.init.outcome.feasible())
        throw Error(ErrorKind::InitializationFailed,
                    std::string("algorithm1: Theorem 2 initialization is ") + status_name(st.init.status));
    AnalysisResult a0 = analyze(ctx, st.init.k, opts.analysis);
    if (!a0.outcome.feasible())
        throw Error(ErrorKind::InitializationFailed,
                    std::string("algorithm1: Theorem 1 with the initial gain is ") + status_name(a0.status));
    res.cert = a0.cert;
    st.h = h_of(res.cert);
    st.k = res.cert.k;
    st.z = 0.5 * eye(n);
    {
        Alg1Iterate it0;
        it0.gamma = res.cert.gamma.value_or(nan);
        it0.change = nan;
        it0.u_max_eig = max_eig(u_matrix(ctx, res.cert));
        it0.k = st.k;
        it0.status = a0.status;
        it0.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        st.trace.push_back(it0);
        if (opts.verbose)
            std::fprintf(stderr, "alg1 init gamma %.6f K %s\n", it0.gamma,
                         [&] { std::string s; for (int i = 0; i < st.k.size(); ++i) s += std::to_string(st.k(i)) + " "; return s; }().c_str());
    }
    st.stop_reason = "max_iters";

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        auto ti = clock::now();
        st.h_tilde = st.h;
        st.k_tilde = st.k;

        LmiProblem prob;
        OverestimateVars ov;
        ov.cert = declare_certificate(prob, ctx, "");
        ov.k = prob.ref(prob.rect("K", p, n));
        ov.z = prob.ref(prob.sym("Z", n));
        AffineMatExpr t = prob.ref(prob.scalar("t"));
        add_functional_positivity(prob, ctx, ov.cert, "");
        // The anchors enter the constant term; the margin stays that of U at the anchor gain.
        const double u_margin_ref = u_constant_norm(ctx, st.k_tilde);
        prob.add("overestimate", overestimate_lmi(ctx, ov, st.h_tilde, st.k_tilde), Sense::NegDef, u_margin_ref);
        prob.add("Z>0", ov.z, Sense::PosDef);
        prob.add("I-Z>0", cexpr(eye(n)) - ov.z, Sense::PosDef);

        AffineMatExpr h = blocks({{ov.cert.p1, ov.cert.p2}});
        AffineMatExpr dv = blocks({{std::sqrt(opts.rho1) * vec(h - cexpr(st.h_tilde))},
                                  {std::sqrt(opts.rho2) * vec(ov.k - cexpr(st.k_tilde))}});
        const int len = dv.rows();
        prob.add("trace_epigraph", blocks({{t, dv.transpose()}, {dv, cexpr(eye(len))}}), Sense::PosSemi);
        prob.minimize(ov.cert.gamma_var ? t + ov.cert.gamma : t);

        SolveOutcome out = prob.solve(opts.analysis.solver);
        if (!out.feasible()) {
            st.stop_reason = std::string("iteration ") + std::to_string(iter) + " " + status_name(out.status);
            if (opts.verbose) std::fprintf(stderr, "alg1 iter %d: %s (%s)\n", iter, status_name(out.status), out.message.c_str());
            break;
        }
        Mat k_new = out.at("K");
        Certificate c = read_certificate(ctx, out, "", k_new);
        // The anchor itself is feasible for the subproblem, so a higher gamma
        // is solver inexactness; keep the anchor and stop.
        const double prev_gamma = st.trace.back().gamma;
        if (c.gamma && std::isfinite(prev_gamma) && *c.gamma > prev_gamma) {
            Alg1Iterate rec = st.trace.back();
            rec.iter = iter;
            rec.change = 0.0;
            rec.seconds = std::chrono::duration<double>(clock::now() - ti).count();
            st.trace.push_back(rec);
            st.converged = true;
            st.stop_reason = "no descent";
            if (opts.verbose)
                std::fprintf(stderr, "alg1 iter %d: gamma %.9f above the anchor %.9f, anchor kept\n", iter, *c.gamma, prev_gamma);
            break;
        }
        Alg1Iterate rec;
        rec.iter = iter;
        rec.gamma = c.gamma.value_or(nan);
        rec.u_max_eig = max_eig(u_matrix(ctx, c));
        rec.k = k_new;
        rec.status = out.status;
        Mat h_new = h_of(c);
        rec.change = relative_change(h_new, k_new, st.h_tilde, st.k_tilde);
        rec.seconds = std::chrono::duration<double>(clock::now() - ti).count();
        st.trace.push_back(rec);
        st.h = h_new;
        st.k = k_new;
        st.z = out.at("Z");
        res.cert = c;
        if (opts.verbose)
            std::fprintf(stderr, "alg1 iter %d gamma %.6f change %.3e Umax %.3e K [%s] %.1fs\n", iter, rec.gamma,
                         rec.change, rec.u_max_eig,
                         [&] { std::string s; for (int i = 0; i < k_new.size(); ++i) s += std::to_string(k_new(i)) + " "; return s; }().c_str(),
                         rec.seconds);
        if (rec.change < opts.eps) {
            st.converged = true;
            st.stop_reason = "converged";
            break;
        }
    }
    return res;
}

}  // namespace ddss
