#include <cmath>

#include <doctest.h>

#include "ddss/error.hpp"
#include "ddss/problem.hpp"
#include "ddss/simulator.hpp"
#include "ddss/synthesis.hpp"
#include "ddss/verifier.hpp"
#include "support.hpp"

using namespace ddss;

namespace {

const char* kDecay = R"(
[system]
n = 2
m = 1
p = 0
q = 1
r1 = 0.5
r2 = 1.0
A1 = [[-1.0, 0.0], [0.0, -1.0]]
D1 = [[0.0], [0.0]]
C1 = [[1.0, 0.0]]
[basis]
f1 = ["1"]
M1 = [[0]]
f2 = ["1"]
M2 = [[0]]
[supply]
type = "l2gain"
[sim]
t_end = 1.0
dt = 1e-3
history = ["1", "1"]
)";

KernelTable ones(double r2, int nodes) {
    return tabulate([](double) { return Mat::Ones(1, 1); }, r2, nodes);
}

}  // namespace

TEST_CASE("masked trapezoid kernel quadrature") {
    auto one = [](double) { return Vec::Ones(1); };
    for (int nodes : {1, 3, 50}) CHECK(kernel_quadrature(ones(0.8, nodes), 0.8, one, 0.0)(0) == doctest::Approx(0.8).epsilon(1e-14));

    auto ramp = [](double s) { return Vec::Constant(1, s); };
    CHECK(std::abs(kernel_quadrature(ones(1.0, 10000), 1.0, ramp, 0.0)(0) + 0.5) < 1e-6);

    const double half = kernel_quadrature(ones(1.0, 10000), 0.5, one, 0.0)(0);
    CHECK(std::abs(half - 0.5) <= 1.0 / 10000);

    try {
        kernel_quadrature(ones(1.0, 10), 1.5, one, 0.0);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DelayOutOfBounds);
    }
}

TEST_CASE("history buffer") {
    History h(1, 0.0, 0.1, 0.3, {parse_expr("t")});
    CHECK(h.at(-0.25)(0) == doctest::Approx(-0.25));
    for (int i = 0; i <= 10; ++i) h.push(Vec::Constant(1, i));
    CHECK(h.at(0.95)(0) == doctest::Approx(9.5));
    CHECK(h.latest_time() == doctest::Approx(1.0));
    CHECK_THROWS_AS(h.at(0.1), Error);
}

TEST_CASE("delay-free decay matches the exponential") {
    ProblemFile pf = parse_problem(kDecay);
    Trajectory tr = simulate(pf.sys, Mat(0, 2), *pf.sim);
    const int last = tr.samples() - 1;
    CHECK(tr.t(last) == doctest::Approx(1.0));
    CHECK(std::abs(tr.x(0, last) - std::exp(-1.0)) < 1e-8);
    CHECK(std::abs(tr.x(1, last) - std::exp(-1.0)) < 1e-8);
}

TEST_CASE("delay outside its bounds stops the run") {
    ProblemFile pf = parse_problem(kDecay);
    SimConfig cfg = *pf.sim;
    cfg.delay_expr = parse_expr("1.5");
    try {
        simulate(pf.sys, Mat(0, 2), cfg);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DelayOutOfBounds);
    }
}

TEST_CASE("stabilization fixture: decay, step convergence and dissipation") {
    ProblemFile pf = load_problem(test::fixture("stabilization.toml"));
    Mat k(1, 2);
    k << 0.6505, -2.6021;

    SimConfig cfg = *pf.sim;
    cfg.t_end = 2.0;
    cfg.record_every = 1;
    Vec ends[3];
    const double dts[3] = {2e-3, 1e-3, 5e-4};
    for (int i = 0; i < 3; ++i) {
        cfg.dt = dts[i];
        Trajectory tr = simulate(pf.sys, k, cfg);
        ends[i] = tr.x.col(tr.samples() - 1);
    }
    const double d1 = (ends[0] - ends[1]).norm(), d2 = (ends[1] - ends[2]).norm();
    MESSAGE("step differences " << d1 << " " << d2);
    CHECK(d2 < 0.75 * d1 + 1e-9);
    CHECK(d2 < 10.0 * dts[1] * ends[2].norm() + 1e-6);

    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    AnalysisOptions opts;
    opts.solver = pf.solver;
    AnalysisResult a = analyze(ctx, k, opts);
    REQUIRE(a.outcome.feasible());
    const double gamma = *a.cert.gamma;

    // Zero disturbance: the storage alone must decrease.
    SimConfig quiet = *pf.sim;
    quiet.t_end = 6.0;
    quiet.disturbance_exprs.clear();
    Trajectory tq = simulate(pf.sys, k, quiet);
    FunctionalEvaluator ev = FunctionalEvaluator::make(ctx, a.cert, pf.quad);
    SupplyCheck good = empirical_supply_check(tq, pf.supply, gamma, ev, quiet.history_exprs, 10);
    CHECK(good.pass);

    Certificate bad_cert = a.cert;
    bad_cert.q1 = -bad_cert.q1;
    bad_cert.p1 = -bad_cert.p1;
    FunctionalEvaluator bad = FunctionalEvaluator::make(ctx, bad_cert, pf.quad);
    CHECK_FALSE(empirical_supply_check(tq, pf.supply, gamma, bad, quiet.history_exprs, 10).pass);

    // Zero initial state: output energy over gamma stays below gamma times input energy.
    SimConfig forced = *pf.sim;
    forced.t_end = 8.0;
    forced.history_exprs = {parse_expr("0"), parse_expr("0")};
    Trajectory tf = simulate(pf.sys, k, forced);
    double ez = 0.0, ew = 0.0;
    for (int j = 1; j < tf.samples(); ++j) {
        const double h = tf.t(j) - tf.t(j - 1);
        ez += 0.5 * h * (tf.z.col(j).squaredNorm() + tf.z.col(j - 1).squaredNorm());
        ew += 0.5 * h * (tf.w.col(j).squaredNorm() + tf.w.col(j - 1).squaredNorm());
    }
    CHECK(ez / gamma <= gamma * ew * (1.0 + 1e-3));
}

TEST_CASE("trajectory CSV columns") {
    ProblemFile pf = parse_problem(kDecay);
    SimConfig cfg = *pf.sim;
    cfg.t_end = 0.002;
    Trajectory tr = simulate(pf.sys, Mat(0, 2), cfg);
    std::ostringstream os;
    write_csv(tr, os);
    CHECK(os.str().rfind("t,x1,x2,z1,w1,r\n", 0) == 0);
}
