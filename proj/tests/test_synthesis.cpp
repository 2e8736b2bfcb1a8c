#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "ddss/error.hpp"
#include "ddss/problem.hpp"
#include "ddss/synthesis.hpp"
#include "ddss/verifier.hpp"
#include "support.hpp"

using namespace ddss;
using test::max_abs;

namespace {

const char* kToyPoint = R"(
[system]
n = 2
m = 1
p = 2
q = 1
r1 = 0.5
r2 = 0.5
A1 = [[-1.0, 0.0], [0.0, -1.0]]
B1 = [[1.0, 0.0], [0.0, 1.0]]
D1 = [[1.0], [0.0]]
C1 = [[1.0, 0.0]]
[basis]
f1 = ["1"]
M1 = [[0]]
[supply]
type = "l2gain"
)";

const char* kStableNoInput = R"(
[system]
n = 2
m = 1
p = 0
q = 1
r1 = 0.5
r2 = 1.0
A1 = [[-1.0, 0.0], [0.0, -1.0]]
D1 = [[1.0], [0.0]]
C1 = [[1.0, 0.0]]
[basis]
f1 = ["1"]
M1 = [[0]]
f2 = ["1"]
M2 = [[0]]
[supply]
type = "l2gain"
gamma = 1e6
)";

// Decision vector that reproduces the named values.
Vec vector_for(const LmiProblem& prob, const std::map<std::string, Mat>& values) {
    Vec x = Vec::Zero(prob.num_scalars());
    for (const MatVar& v : prob.vars()) {
        auto it = values.find(v.name);
        REQUIRE(it != values.end());
        AffineMatExpr e = prob.ref(v);
        for (int i = v.offset; i < v.offset + v.count; ++i) {
            Vec unit = Vec::Zero(prob.num_scalars());
            unit(i) = 1.0;
            Mat b = e.eval(unit);
            x(i) = (b.array() * it->second.array()).sum() / b.squaredNorm();
        }
    }
    return x;
}

std::map<std::string, Mat> values_of(const Certificate& c) {
    std::map<std::string, Mat> v{{"P1", c.p1}, {"P2", c.p2}, {"P3", c.p3}, {"Q1", c.q1},
                                 {"Q2", c.q2}, {"R1", c.r1m}, {"R2", c.r2m}, {"Y", c.y}};
    if (c.gamma) v["gamma"] = Mat::Constant(1, 1, *c.gamma);
    return v;
}

struct Fixture42 {
    ProblemFile pf = load_problem(test::fixture("stabilization.toml"));
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
};

Fixture42& fixture42() {
    static Fixture42 f;
    return f;
}

}  // namespace

TEST_CASE("Theorem 1 on the analysis fixture") {
    ProblemFile pf = load_problem(test::fixture("l2gain_analysis.toml"));
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    CHECK(ctx.l0 == 49);
    CHECK(ctx.l == 51);
    AnalysisOptions opts;
    opts.solver = pf.solver;
    AnalysisResult a = analyze(ctx, Mat::Zero(1, 2), opts);
    CHECK(a.constraint_size == 51);
    REQUIRE(a.outcome.feasible());
    CHECK(*a.cert.gamma == doctest::Approx(0.5511).epsilon(0.03));
    CHECK(a.slacks.holds(1e-7));
}

TEST_CASE("stable delay-free plant passes with a huge fixed gamma") {
    ProblemFile pf = parse_problem(kStableNoInput);
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    AnalysisResult a = analyze(ctx, Mat(0, 2));
    CHECK(a.outcome.feasible());
    CHECK_FALSE(a.cert.gamma.has_value());

    Thm2Solution s;
    s.outcome.status = SolveStatus::Optimal;
    CrossCheck cc = cross_check_thm2(ctx, s);
    CHECK_FALSE(cc.applicable);
    CHECK(cc.message.find("analyze") != std::string::npos);
    try {
        synthesize_thm2(ctx, make_alphas(ctx, {}));
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Input);
    }
}

TEST_CASE("non-positive fixed gamma is rejected") {
    ProblemFile pf = load_problem(test::fixture("l2gain_analysis.toml"));
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    AnalysisOptions opts;
    opts.min_gamma = false;
    opts.gamma = -1.0;
    try {
        analyze(ctx, Mat::Zero(1, 2), opts);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonPositiveGamma);
    }
}

TEST_CASE("Theorem 2 on a delay-free point-regime toy") {
    ProblemFile pf = parse_problem(kToyPoint);
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    Thm2Solution s = synthesize_thm2(ctx, make_alphas(ctx, {{1, 0.5}}));
    REQUIRE(s.outcome.feasible());
    Mat acl = pf.sys.a1 + pf.sys.b1 * s.k;
    Eigen::EigenSolver<Mat> es(acl);
    CHECK(es.eigenvalues().real().maxCoeff() < 0.0);
    CrossCheck cc = cross_check_thm2(ctx, s);
    CHECK(cc.feasible);
    CHECK(cc.gamma_consistent);
}

TEST_CASE("Theorem 2 initialization of the stabilization fixture") {
    Fixture42& f = fixture42();
    std::vector<double> alphas = make_alphas(f.ctx, {{3, 0.5}});
    CHECK(alphas.size() == 22);
    CHECK(alphas[2] == 0.5);
    CHECK_THROWS_AS(make_alphas(f.ctx, {{23, 1.0}}), Error);
    AnalysisOptions opts;
    opts.solver = f.pf.solver;
    Thm2Solution s = synthesize_thm2(f.ctx, alphas, opts);
    REQUIRE(s.outcome.feasible());
    CHECK(s.k(0, 0) > 0.0);
    CHECK(s.k(0, 1) < 0.0);
    CrossCheck cc = cross_check_thm2(f.ctx, s, opts);
    CHECK(cc.feasible);
    CHECK(cc.gamma_consistent);

    Thm2Solution zero = synthesize_thm2(f.ctx, make_alphas(f.ctx, {}), opts);
    MESSAGE("all-zero alphas: " << std::string(status_name(zero.status)));
}

TEST_CASE("a destabilizing gain makes Theorem 1 infeasible") {
    Fixture42& f = fixture42();
    Mat k(1, 2);
    k << 5.0, 20.0;
    SpectrumResult sp = spectral_abscissa(f.pf.sys, k, 0.75);
    CHECK(sp.abscissa > 0.0);
    AnalysisOptions opts;
    opts.solver = f.pf.solver;
    AnalysisResult a = analyze(f.ctx, k, opts);
    CHECK(a.status == SolveStatus::Infeasible);
}

TEST_CASE("overestimate is tight at the anchor and an upper bound elsewhere") {
    Fixture42& f = fixture42();
    Mat k_t(1, 2);
    k_t << 0.6505, -2.6021;
    AnalysisOptions opts;
    opts.solver = f.pf.solver;
    AnalysisResult a = analyze(f.ctx, k_t, opts);
    REQUIRE(a.outcome.feasible());
    const Certificate& c = a.cert;
    Mat h_t(c.p1.rows(), c.p1.cols() + c.p2.cols());
    h_t << c.p1, c.p2;
    CHECK(f.ctx.l0 == 45);
    CHECK(f.ctx.l + 2 * f.ctx.n == 51);

    LmiProblem prob;
    OverestimateVars ov;
    ov.cert = declare_certificate(prob, f.ctx, "");
    ov.k = prob.ref(prob.rect("Kvar", f.ctx.p, f.ctx.n));
    ov.z = prob.ref(prob.sym("Zvar", f.ctx.n));
    AffineMatExpr block = overestimate_lmi(f.ctx, ov, h_t, k_t);
    CHECK(block.rows() == f.ctx.l + 2 * f.ctx.n);

    const int l = f.ctx.l, n = f.ctx.n;
    auto schur = [&](const Mat& b) {
        Mat tl = b.topLeftCorner(l, l), off = b.block(0, l, l, 2 * n), d = b.bottomRightCorner(2 * n, 2 * n);
        return Mat(tl - off * d.inverse() * off.transpose());
    };

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 4; ++trial) {
        Certificate cc = c;
        Mat k = k_t;
        if (trial > 0) {
            cc.p1 += 0.05 * sy(test::random_mat(rng, n, n));
            cc.p2 += 0.05 * test::random_mat(rng, n, c.p2.cols());
            k += 0.1 * test::random_mat(rng, 1, n);
        }
        cc.k = k;
        Mat zr = test::random_mat(rng, n, n);
        Eigen::SelfAdjointEigenSolver<Mat> es(Mat(zr * zr.transpose()));
        Vec lam = Vec::LinSpaced(n, 0.3, 0.7);
        Mat z = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();

        auto vals = values_of(cc);
        vals["Kvar"] = k;
        vals["Zvar"] = z;
        Vec x = vector_for(prob, vals);
        Mat s = schur(block.eval(x));
        Mat u = u_matrix(f.ctx, cc);
        const double scale = std::max(1.0, max_abs(u));
        if (trial == 0) CHECK(max_abs(s - u) < 1e-8 * scale);
        CHECK(min_eig(Mat(s - u)) > -1e-8 * scale);
        CHECK(max_eig(u) <= max_eig(s) + 1e-8);
    }
}

TEST_CASE("Algorithm 1 stops after one step with an infinite tolerance") {
    Fixture42& f = fixture42();
    Alg1Options o;
    o.alphas = make_alphas(f.ctx, {{3, 0.5}});
    o.eps = std::numeric_limits<double>::infinity();
    o.max_iters = 10;
    o.analysis.solver = f.pf.solver;
    Alg1Result r = algorithm1(f.ctx, o);
    CHECK(r.state.trace.size() == 2);
    CHECK(r.state.converged);
    Thm1Slacks sl = thm1_slacks(f.ctx, r.cert);
    CHECK(sl.positivity > 0.0);
    CHECK(sl.psd > -1e-9);
    CHECK(sl.dissipation > 0.0);
    for (const Alg1Iterate& it : r.state.trace) CHECK(it.u_max_eig < 1e-6);
}
