// One PASS/FAIL line per acceptance criterion, with the numbers behind it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <map>
#include <functional>
#include <string>
#include <vector>

#include "ddss/basis.hpp"
#include "ddss/problem.hpp"
#include "ddss/simulator.hpp"
#include "ddss/synthesis.hpp"
#include "ddss/verifier.hpp"

#ifndef DDSS_SOURCE_DIR
#define DDSS_SOURCE_DIR "."
#endif

using namespace ddss;

namespace {

using clock_type = std::chrono::steady_clock;

std::string fixture(const std::string& name) { return std::string(DDSS_SOURCE_DIR) + "/problems/" + name; }

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string format(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        pass = false;
        note(why);
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

AnalysisOptions options_of(const ProblemFile& pf) {
    AnalysisOptions o;
    o.solver = pf.solver;
    return o;
}

// Shared between criteria 3 and 6.
struct Alg1Run {
    bool ran = false;
    std::string error;
    Alg1Result result;
    double seconds_max = 0.0;
};

Alg1Run& alg1_run() {
    static Alg1Run run;
    if (run.ran) return run;
    run.ran = true;
    try {
        ProblemFile pf = load_problem(fixture("stabilization.toml"));
        SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
        Alg1Options o;
        o.alphas = make_alphas(ctx, pf.alg1.alpha_overrides);
        o.rho1 = pf.alg1.rho1;
        o.rho2 = pf.alg1.rho2;
        o.eps = pf.alg1.eps;
        o.max_iters = 40;
        o.analysis = options_of(pf);
        run.result = algorithm1(ctx, o);
        for (const Alg1Iterate& it : run.result.state.trace) run.seconds_max = std::max(run.seconds_max, it.seconds);
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

Outcome table_rows(const std::vector<std::pair<double, double>>& intervals, const std::vector<double>& expect,
                   bool last_near_singular) {
    Outcome o;
    ProblemFile pf = load_problem(fixture("l2gain_analysis.toml"));
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto [r1, r2] = intervals[i];
        SynthesisContext ctx = SynthesisContext::make(pf.sys.with_delays(r1, r2), pf.supply, pf.quad);
        auto t0 = clock_type::now();
        AnalysisResult a = analyze(ctx, Mat::Zero(pf.sys.p, pf.sys.n), options_of(pf));
        const double secs = seconds_since(t0);
        if (!a.outcome.feasible()) {
            o.fail(format("[%g,%g] %s", r1, r2, status_name(a.status)));
            continue;
        }
        const double g = *a.cert.gamma, rel = std::abs(g - expect[i]) / expect[i];
        const bool near = last_near_singular && i + 1 == intervals.size();
        bool ok = rel <= 0.03;
        if (near) ok = rel <= 0.25 || (a.status == SolveStatus::Marginal && g > 10.0);
        o.note(format("[%g,%g] %.6f vs %g (%+.2f%%, %s, %.1fs)", r1, r2, g, expect[i], 100.0 * (g - expect[i]) / expect[i],
                      status_name(a.status), secs));
        if (!ok) o.fail(format("[%g,%g] outside tolerance", r1, r2));
        if (secs >= 60.0) o.fail(format("[%g,%g] took %.1fs", r1, r2, secs));
    }
    return o;
}

Outcome criterion1() {
    return table_rows({{0.98, 1.25}, {1.0, 1.23}, {1.02, 1.21}, {1.04, 1.19}}, {0.5511, 0.51356, 0.48277, 0.45692}, false);
}

Outcome criterion2() {
    return table_rows({{0.8, 1.07}, {1.0, 1.27}, {1.2, 1.47}, {1.32, 1.59}}, {0.35556, 0.59179, 1.7935, 25.9774}, true);
}

Outcome criterion3() {
    Outcome o;
    Alg1Run& run = alg1_run();
    if (!run.error.empty()) {
        o.fail(run.error);
        return o;
    }
    const auto& trace = run.result.state.trace;
    auto best_by = [&](int iter) {
        double best = INFINITY;
        for (const Alg1Iterate& it : trace)
            if (it.iter <= iter) best = std::min(best, it.gamma);
        return best;
    };
    const double g10 = best_by(10), g40 = best_by(40);
    o.note(format("initial gamma %.6f, %zu iterates, stop '%s'", trace.front().gamma, trace.size() - 1,
                  run.result.state.stop_reason.c_str()));
    o.note(format("gamma by iteration 10: %.6f (<= 0.40), by 40: %.6f (<= 0.36)", g10, g40));
    if (!(g10 <= 0.40)) o.fail("iteration-10 bound missed");
    if (!(g40 <= 0.36)) o.fail("iteration-40 bound missed");
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i) worst_rise = std::max(worst_rise, trace[i].gamma - trace[i - 1].gamma);
    o.note(format("largest gamma rise %.2e", worst_rise));
    if (worst_rise > 1e-6) o.fail("gamma trace increases");
    for (const Alg1Iterate& it : trace)
        if (!(it.k(0, 0) > 0.0 && it.k(0, 1) < 0.0)) o.fail(format("iteration %d breaks the K sign pattern", it.iter));
    o.note(format("K = [%.4f, %.4f], slowest step %.1fs", run.result.cert.k(0, 0), run.result.cert.k(0, 1), run.seconds_max));
    if (run.seconds_max >= 60.0) o.fail("an iteration took over 60 s");
    return o;
}

Outcome criterion4() {
    Outcome o;
    std::uint64_t seed = 7;
    if (const char* s = std::getenv("DDSS_SEED")) seed = std::strtoull(s, nullptr, 10);
    InequalityReport ir = check_integral_inequalities(500, seed);
    IdentityReport id = check_kronecker_identities(500, seed, 1e-12);
    o.note(format("seed %llu: single-interval worst %.2e, split worst %.2e, forms diff %.2e, identities worst %.2e",
                  static_cast<unsigned long long>(seed), ir.b2_worst, ir.b5_worst, ir.forms_max_diff, id.worst));
    if (!ir.pass()) o.fail(format("failures %d/%d/%d", ir.b2_fail, ir.b5_fail, ir.forms_fail));
    if (!id.pass) o.fail("identity suite");
    return o;
}

Outcome criterion5() {
    Outcome o;
    for (const char* f : {"l2gain_analysis.toml", "stabilization.toml"}) {
        ProblemFile pf = load_problem(fixture(f));
        int idx = 0;
        for (const KernelBasis* b : {&pf.sys.basis1, &pf.sys.basis2}) {
            ++idx;
            CheckReport g = check_geometry(*b, pf.quad, 1e-9);
            CheckReport c = check_ode_closure(*b, 101, 1e-6);
            o.note(format("%s basis%d: Gram %.1e, closure %.1e", f, idx, g.worst, c.worst));
            if (!g.pass) o.fail("Gram mismatch");
            if (!c.pass) o.fail("closure");
        }
    }
    return o;
}

Outcome criterion6() {
    Outcome o;
    struct Case { const char* file; std::map<int, double> alphas; };
    const Case cases[] = {{"stabilization.toml", {{3, 0.5}}},
                          {"point_regime.toml", {{1, 0.5}}},
                          {"lower_zero_regime.toml", {{1, 0.5}}}};
    for (const Case& c : cases) {
        ProblemFile pf = load_problem(fixture(c.file));
        SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
        Thm2Solution s = synthesize_thm2(ctx, make_alphas(ctx, c.alphas), options_of(pf));
        if (!s.outcome.feasible()) {
            o.fail(format("%s: Theorem 2 %s", c.file, status_name(s.status)));
            continue;
        }
        CrossCheck cc = cross_check_thm2(ctx, s, options_of(pf));
        o.note(format("%s: Thm2 %.5f -> Thm1 %s %.5f", c.file, cc.thm2_gamma, status_name(cc.status), cc.thm1_gamma));
        if (!cc.feasible) o.fail(format("%s: recovered gain fails Theorem 1", c.file));
    }
    Alg1Run& run = alg1_run();
    if (!run.error.empty()) {
        o.fail(run.error);
        return o;
    }
    double worst = -INFINITY;
    for (const Alg1Iterate& it : run.result.state.trace) worst = std::max(worst, it.u_max_eig);
    o.note(format("Algorithm 1 iterates: max eig of U %.3e", worst));
    if (!(worst < 1e-6)) o.fail("an iterate violates U < 0");
    return o;
}

Outcome criterion7() {
    Outcome o;
    ProblemFile p1 = load_problem(fixture("l2gain_analysis.toml"));
    DelaySystem wide = p1.sys.with_delays(0.6, 1.7);
    std::string line = "open loop:";
    for (double r : {0.7, 1.0, 1.5}) {
        SpectrumResult s = spectral_abscissa(wide, Mat::Zero(1, 2), r);
        line += format(" r=%g %.5f (N=%d)", r, s.abscissa, s.n);
        if (!(s.abscissa < 0.0)) o.fail(format("open loop unstable at %g", r));
        if (s.change > 1e-6) o.fail("not converged");
    }
    o.note(line);
    ProblemFile p2 = load_problem(fixture("stabilization.toml"));
    const double gains[4][2] = {{0.4182, -2.7551}, {0.5011, -2.7108}, {0.5787, -2.6595}, {0.6505, -2.6021}};
    double worst = -INFINITY;
    for (const auto& g : gains) {
        Mat k(1, 2);
        k << g[0], g[1];
        for (double r : {0.5, 0.75, 1.0}) {
            SpectrumResult s = spectral_abscissa(p2.sys, k, r);
            worst = std::max(worst, s.abscissa);
            if (s.change > 1e-6) o.fail("not converged");
        }
    }
    o.note(format("closed loops: largest abscissa %.5f over 4 gains x 3 delays", worst));
    if (!(worst < 0.0)) o.fail("a closed loop is unstable");
    return o;
}

Outcome criterion8() {
    Outcome o;
    ProblemFile pf = load_problem(fixture("stabilization.toml"));
    Mat k(1, 2);
    k << 0.6505, -2.6021;
    Trajectory tr = simulate(pf.sys, k, *pf.sim);
    double peak = 0.0;
    bool finite = true;
    for (int j = 0; j < tr.samples(); ++j) {
        finite = finite && tr.x.col(j).allFinite();
        peak = std::max(peak, tr.x.col(j).norm());
    }
    const double final_norm = tr.x.col(tr.samples() - 1).norm();
    // Decay after the disturbance: the norm envelope over successive seconds shrinks.
    double prev = INFINITY;
    bool decays = true;
    for (double a = 5.0; a < 20.0; a += 1.0) {
        double env = 0.0;
        for (int j = 0; j < tr.samples(); ++j)
            if (tr.t(j) >= a && tr.t(j) < a + 1.0) env = std::max(env, tr.x.col(j).norm());
        decays = decays && env < prev;
        prev = env;
    }
    o.note(format("peak %.3f, |x(20)| %.2e (%.1e of peak)", peak, final_norm, final_norm / peak));
    if (!finite) o.fail("non-finite state");
    if (!(final_norm < 0.01 * peak)) o.fail("no decay to 1% of peak");
    if (!decays) o.fail("envelope not shrinking after t = 5");

    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    AnalysisResult a = analyze(ctx, k, options_of(pf));
    if (!a.outcome.feasible()) {
        o.fail(std::string("no certificate for the gain: ") + status_name(a.status));
        return o;
    }
    FunctionalEvaluator ev = FunctionalEvaluator::make(ctx, a.cert, pf.quad);
    SupplyCheck sc = empirical_supply_check(tr, pf.supply, *a.cert.gamma, ev, pf.sim->history_exprs, 10);
    o.note(format("gamma %.5f, largest increase of v - int s %.2e (slack %.2e, peak v %.2e)", *a.cert.gamma,
                  sc.max_increment, sc.slack, sc.peak_v));
    if (!sc.pass) o.fail("dissipation inequality violated");
    return o;
}

Outcome criterion9() {
    Outcome o;
    for (const char* f : {"point_regime.toml", "lower_zero_regime.toml"}) {
        ProblemFile pf = load_problem(fixture(f));
        SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
        Thm2Solution s = synthesize_thm2(ctx, make_alphas(ctx, pf.alg1.alpha_overrides), options_of(pf));
        if (!s.outcome.feasible()) {
            o.fail(format("%s: %s", f, status_name(s.status)));
            continue;
        }
        double worst = -INFINITY;
        std::vector<double> rs{pf.sys.r1};
        if (pf.sys.r2 > pf.sys.r1)
            for (int i = 1; i <= 4; ++i) rs.push_back(pf.sys.r1 + (pf.sys.r2 - pf.sys.r1) * i / 4.0);
        for (double r : rs) worst = std::max(worst, spectral_abscissa(pf.sys, s.k, r).abscissa);
        o.note(format("%s (%s): LMI %d, K = [%.3f, %.3f], gamma %.4f, largest abscissa %.4f", f,
                      regime_name(ctx.regime.kind), s.constraint_size, s.k(0, 0), s.k(0, 1), s.gamma.value_or(NAN), worst));
        if (!(worst < 0.0)) o.fail(format("%s: closed loop unstable", f));
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 delay-interval sweep, first set (3%)", criterion1},
        {"2 delay-interval sweep, second set (3%; last 25% or marginal > 10)", criterion2},
        {"3 Algorithm 1 trace", criterion3},
        {"4 integral inequalities and Kronecker identities", criterion4},
        {"5 Gram oracle and ODE closure", criterion5},
        {"6 cross-theorem soundness", criterion6},
        {"7 spectral abscissa", criterion7},
        {"8 simulation and dissipation", criterion8},
        {"9 degenerate regimes", criterion9},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        auto t0 = clock_type::now();
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s  %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", name, seconds_since(t0), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
