#include "ddss/cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddss/basis.hpp"
#include "ddss/problem.hpp"
#include "ddss/simulator.hpp"
#include "ddss/synthesis.hpp"
#include "ddss/verifier.hpp"

namespace ddss {

using json = nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Infeasible:
        case ErrorKind::IterationInfeasible:
        case ErrorKind::InitializationFailed:
            return exit_code::infeasible;
        case ErrorKind::SolverFailure:
        case ErrorKind::NonConvergent:
        case ErrorKind::SingularX:
        case ErrorKind::NonFiniteState:
            return exit_code::solver_error;
        default:
            return exit_code::input_error;
    }
}

namespace {

// Checks that ran and failed, as opposed to bad input or a failed solve.
constexpr int kCheckFailed = 1;

struct Globals {
    std::optional<double> solver_tol, margin;
    std::optional<int> quad_order, quad_panels;
};

struct Common {
    std::string file;
    std::optional<double> r1, r2;
    std::string k;
    bool from_synthesis = false;
    std::vector<std::string> alpha;
    std::string csv;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

json mat_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

void write_file(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Input, "cannot write '" + path + "'");
    f << text;
}

// Rows separated by ';', entries by ',' or blanks.
Mat parse_gain(const std::string& text, int p, int n) {
    std::vector<std::vector<double>> rows;
    std::stringstream rs(text);
    std::string row;
    while (std::getline(rs, row, ';')) {
        for (char& c : row)
            if (c == ',') c = ' ';
        std::stringstream es(row);
        std::vector<double> vals;
        std::string tok;
        while (es >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') throw Error(ErrorKind::Input, "--k: bad number '" + tok + "'");
            vals.push_back(v);
        }
        if (!vals.empty()) rows.push_back(vals);
    }
    // A single row of p * n entries is read row-major.
    if (rows.size() == 1 && p > 1 && static_cast<int>(rows[0].size()) == p * n) {
        std::vector<std::vector<double>> split(p);
        for (int i = 0; i < p; ++i) split[i].assign(rows[0].begin() + i * n, rows[0].begin() + (i + 1) * n);
        rows = split;
    }
    if (static_cast<int>(rows.size()) != p)
        throw Error(ErrorKind::Input, "--k: expected " + std::to_string(p) + " rows, got " + std::to_string(rows.size()));
    Mat k(p, n);
    for (int i = 0; i < p; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw Error(ErrorKind::Input, "--k: row " + std::to_string(i + 1) + " needs " + std::to_string(n) + " entries");
        for (int j = 0; j < n; ++j) k(i, j) = rows[i][j];
    }
    return k;
}

std::map<int, double> parse_alphas(const std::vector<std::string>& items) {
    std::map<int, double> out;
    for (const std::string& item : items) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Input, "--alpha: expected i=v, got '" + item + "'");
        char* end = nullptr;
        const std::string is = item.substr(0, eq), vs = item.substr(eq + 1);
        long idx = std::strtol(is.c_str(), &end, 10);
        if (end == is.c_str() || *end != '\0') throw Error(ErrorKind::Input, "--alpha: bad index '" + is + "'");
        double v = std::strtod(vs.c_str(), &end);
        if (end == vs.c_str() || *end != '\0') throw Error(ErrorKind::Input, "--alpha: bad value '" + vs + "'");
        out[static_cast<int>(idx)] = v;
    }
    return out;
}

ProblemFile load(const Common& c, const Globals& g) {
    ProblemFile pf = load_problem(c.file);
    if (c.r1 || c.r2) {
        pf.sys = pf.sys.with_delays(c.r1.value_or(pf.sys.r1), c.r2.value_or(pf.sys.r2));
        pf.sys.validate();
    }
    if (g.solver_tol) pf.solver.gap_tol = pf.solver.feas_tol = *g.solver_tol;
    if (g.margin) pf.solver.strict_margin = *g.margin;
    if (g.quad_order) pf.quad.order = *g.quad_order;
    if (g.quad_panels) pf.quad.panels = *g.quad_panels;
    return pf;
}

std::vector<double> alphas_for(const ProblemFile& pf, const SynthesisContext& ctx, const Common& c) {
    std::map<int, double> cli = parse_alphas(c.alpha);
    if (pf.alg1.alphas) {
        std::vector<double> a = *pf.alg1.alphas;
        std::map<int, double> ov;
        for (std::size_t i = 0; i < a.size(); ++i) ov[static_cast<int>(i) + 1] = a[i];
        for (const auto& [i, v] : cli) ov[i] = v;
        return make_alphas(ctx, ov);
    }
    std::map<int, double> ov = pf.alg1.alpha_overrides;
    for (const auto& [i, v] : cli) ov[i] = v;
    return make_alphas(ctx, ov);
}

AnalysisOptions analysis_options(const ProblemFile& pf) {
    AnalysisOptions o;
    o.solver = pf.solver;
    return o;
}

int status_exit(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal:
        case SolveStatus::Marginal: return exit_code::ok;
        case SolveStatus::Infeasible: return exit_code::infeasible;
        default: return exit_code::solver_error;
    }
}

// Worst-first merge: solver error, infeasible, check failure, ok.
int merge_exit(int a, int b) {
    auto rank = [](int c) {
        switch (c) {
            case exit_code::solver_error: return 4;
            case exit_code::input_error: return 3;
            case exit_code::infeasible: return 2;
            case kCheckFailed: return 1;
            default: return 0;
        }
    };
    return rank(a) >= rank(b) ? a : b;
}

Thm2Solution run_thm2(const ProblemFile& pf, const SynthesisContext& ctx, const Common& c) {
    Thm2Solution s = synthesize_thm2(ctx, alphas_for(pf, ctx, c), analysis_options(pf));
    if (!s.outcome.feasible())
        throw Error(ErrorKind::Infeasible, std::string("Theorem 2 is ") + status_name(s.status) + ": " + s.outcome.message);
    return s;
}

Mat gain_for(const ProblemFile& pf, const SynthesisContext& ctx, const Common& c) {
    if (!c.k.empty() && c.from_synthesis) throw Error(ErrorKind::Input, "--k and --from-synthesis are exclusive");
    if (c.from_synthesis) return run_thm2(pf, ctx, c).k;
    if (!c.k.empty()) return parse_gain(c.k, pf.sys.p, pf.sys.n);
    return Mat::Zero(pf.sys.p, pf.sys.n);
}

json report_json(const CheckReport& r) {
    json j;
    j["check"] = r.name;
    j["pass"] = r.pass;
    j["worst"] = r.worst;
    j["worst_at"] = r.worst_at;
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

json slack_json(const Thm1Slacks& s) {
    return json{{"positivity", s.positivity}, {"psd", s.psd}, {"dissipation", s.dissipation}};
}

// ------------------------------------------------------------------ validate

int cmd_validate(const Common& c, const Globals& g, std::ostream& out) {
    ProblemFile pf = load(c, g);
    const DelaySystem& sys = pf.sys;
    json checks = json::array();
    bool pass = true;
    auto record = [&](json j, const std::string& where) {
        j["where"] = where;
        pass = pass && j["pass"].get<bool>();
        checks.push_back(j);
    };
    const KernelBasis* bases[] = {&sys.basis1, &sys.basis2};
    for (int i = 0; i < 2; ++i) {
        const KernelBasis& b = *bases[i];
        const std::string where = "basis" + std::to_string(i + 1);
        if (b.empty()) continue;
        record(report_json(check_ode_closure(b)), where);
        json spd;
        spd["check"] = "gram_spd";
        try {
            BasisGeometry geo = compute_geometry(b, pf.quad);
            spd["pass"] = true;
            spd["f_min_eig"] = geo.f_gram.size() ? min_eig(geo.f_gram) : 0.0;
            spd["g_eig_ratio"] = geo.g_eig_ratio;
            if (geo.g_numerically_singular) spd["warning"] = "Gram of fhat numerically singular; PSD root used";
        } catch (const Error& e) {
            spd["pass"] = false;
            spd["detail"] = e.what();
        }
        record(spd, where);
        record(report_json(check_geometry(b, pf.quad)), where);
    }
    struct Slot { const char* key; const Mat* coeff; const KernelBasis* basis; };
    const Slot slots[] = {{"a2", &sys.a2, &sys.basis1}, {"a3", &sys.a3, &sys.basis2},   {"b2k", &sys.b2k, &sys.basis1},
                          {"b3k", &sys.b3k, &sys.basis2}, {"c2", &sys.c2, &sys.basis1}, {"c3", &sys.c3, &sys.basis2},
                          {"b5k", &sys.b5k, &sys.basis1}, {"b6k", &sys.b6k, &sys.basis2}};
    for (const Slot& s : slots) {
        auto it = sys.raw_kernels.find(s.key);
        if (it == sys.raw_kernels.end()) continue;
        if (s.basis->empty() || !(s.basis->b > s.basis->a)) continue;
        record(report_json(check_decomposition(it->second, *s.coeff, *s.basis, static_cast<int>(it->second.size()))),
               std::string("kernel ") + s.key);
    }
    json rep;
    rep["command"] = "validate";
    rep["problem"] = pf.name;
    rep["regime"] = regime_name(sys.regime().kind);
    rep["pass"] = pass;
    rep["checks"] = checks;
    out << rep.dump(2) << "\n";
    return pass ? exit_code::ok : exit_code::input_error;
}

// ------------------------------------------------------------------- analyze

struct AnalyzeFlags {
    bool min_gamma = false;
    std::optional<double> gamma;
    std::vector<double> r1s, r2s;
};

int cmd_analyze(const Common& c, const AnalyzeFlags& af, const Globals& g, std::ostream& out, std::ostream& err) {
    ProblemFile base = load(c, g);
    if (af.r1s.size() != af.r2s.size())
        throw Error(ErrorKind::Input, "--r1 and --r2 must be given the same number of times");
    std::vector<std::pair<double, double>> cases;
    for (std::size_t i = 0; i < af.r1s.size(); ++i) cases.emplace_back(af.r1s[i], af.r2s[i]);
    if (cases.empty()) cases.emplace_back(base.sys.r1, base.sys.r2);
    if (af.gamma && af.min_gamma) throw Error(ErrorKind::Input, "--gamma and --min-gamma are exclusive");
    if (af.gamma && !base.supply.gamma_mode) throw Error(ErrorKind::Input, "--gamma needs an l2gain supply without a fixed gamma");

    std::string csv = "r1,r2,r3,min_gamma,status\n";
    json rows = json::array();
    int code = exit_code::ok;
    for (const auto& [r1, r2] : cases) {
        ProblemFile pf = base;
        pf.sys = base.sys.with_delays(r1, r2);
        pf.sys.validate();
        SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
        Mat k = gain_for(pf, ctx, c);
        AnalysisOptions opts = analysis_options(pf);
        if (af.gamma) {
            opts.gamma = *af.gamma;
            opts.min_gamma = false;
        }
        AnalysisResult a = analyze(ctx, k, opts);
        const double gamma = a.cert.gamma.value_or(std::numeric_limits<double>::quiet_NaN());
        json row;
        row["r1"] = r1;
        row["r2"] = r2;
        row["r3"] = r2 - r1;
        row["regime"] = regime_name(ctx.regime.kind);
        row["status"] = status_name(a.status);
        row["gamma"] = a.outcome.feasible() ? num(gamma) : json(nullptr);
        row["message"] = a.outcome.message;
        row["iterations"] = a.outcome.iterations;
        row["lmi_size"] = a.constraint_size;
        if (a.outcome.feasible()) row["slacks"] = slack_json(a.slacks);
        if (pf.sys.p > 0) row["k"] = mat_json(k);
        rows.push_back(row);
        csv += fmt(r1) + "," + fmt(r2) + "," + fmt(r2 - r1) + "," + (a.outcome.feasible() ? fmt(gamma) : "") + "," +
               status_name(a.status) + "\n";
        err << "analyze [" << fmt(r1) << ", " << fmt(r2) << "]: " << status_name(a.status) << "\n";
        code = merge_exit(code, status_exit(a.status));
    }
    if (!c.csv.empty()) write_file(c.csv, csv, out);
    json rep;
    rep["command"] = "analyze";
    rep["problem"] = base.name;
    rep["supply"] = base.supply.kind;
    rep["results"] = rows;
    if (c.csv != "-") out << rep.dump(2) << "\n";
    return code;
}

// ---------------------------------------------------------------- synthesize

int cmd_synthesize(const Common& c, const Globals& g, std::ostream& out) {
    ProblemFile pf = load(c, g);
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    if (ctx.p == 0)
        throw Error(ErrorKind::Input, "synthesize: the system has no inputs; use analyze (Theorem 1) instead");
    std::vector<double> alphas = alphas_for(pf, ctx, c);
    Thm2Solution s = synthesize_thm2(ctx, alphas, analysis_options(pf));
    json rep;
    rep["command"] = "synthesize";
    rep["problem"] = pf.name;
    rep["status"] = status_name(s.status);
    rep["message"] = s.outcome.message;
    rep["alphas"] = alphas;
    rep["lmi_size"] = s.constraint_size;
    int code = status_exit(s.status);
    std::string csv;
    if (s.outcome.feasible()) {
        rep["gamma"] = s.gamma ? num(*s.gamma) : json(nullptr);
        rep["k"] = mat_json(s.k);
        rep["x"] = mat_json(s.x);
        CrossCheck cc = cross_check_thm2(ctx, s, analysis_options(pf));
        rep["cross_check"] = json{{"theorem1_status", status_name(cc.status)},
                                  {"feasible", cc.feasible},
                                  {"theorem1_gamma", cc.feasible ? num(cc.thm1_gamma) : json(nullptr)},
                                  {"gamma_consistent", cc.gamma_consistent},
                                  {"message", cc.message}};
        if (!cc.feasible) code = merge_exit(code, kCheckFailed);
        for (int i = 0; i < s.k.rows(); ++i)
            for (int j = 0; j < s.k.cols(); ++j) csv += "k" + std::to_string(i + 1) + std::to_string(j + 1) + ",";
        csv += "gamma\n";
        for (int i = 0; i < s.k.rows(); ++i)
            for (int j = 0; j < s.k.cols(); ++j) csv += fmt(s.k(i, j)) + ",";
        csv += (s.gamma ? fmt(*s.gamma) : std::string()) + "\n";
    }
    if (!c.csv.empty()) write_file(c.csv, csv, out);
    if (c.csv != "-") out << rep.dump(2) << "\n";
    return code;
}

// ------------------------------------------------------------------- iterate

struct IterateFlags {
    std::optional<int> iters;
    std::optional<double> rho1, rho2, eps;
    bool verbose = false;
};

int cmd_iterate(const Common& c, const IterateFlags& itf, const Globals& g, std::ostream& out) {
    ProblemFile pf = load(c, g);
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    if (ctx.p == 0) throw Error(ErrorKind::Input, "iterate: the system has no inputs; use analyze (Theorem 1) instead");
    Alg1Options o;
    o.alphas = alphas_for(pf, ctx, c);
    o.rho1 = itf.rho1.value_or(pf.alg1.rho1);
    o.rho2 = itf.rho2.value_or(pf.alg1.rho2);
    o.eps = itf.eps.value_or(pf.alg1.eps);
    o.max_iters = itf.iters.value_or(pf.alg1.max_iters);
    if (o.max_iters < 0) throw Error(ErrorKind::Input, "--iters must be non-negative");
    o.analysis = analysis_options(pf);
    o.verbose = itf.verbose;
    Alg1Result r = algorithm1(ctx, o);
    const Alg1State& st = r.state;

    json trace = json::array();
    std::string csv = "iter,gamma,change,u_max_eig,status";
    for (int i = 0; i < ctx.p; ++i)
        for (int j = 0; j < ctx.n; ++j) csv += ",k" + std::to_string(i + 1) + std::to_string(j + 1);
    csv += "\n";
    for (const Alg1Iterate& it : st.trace) {
        trace.push_back(json{{"iter", it.iter},
                             {"status", status_name(it.status)},
                             {"gamma", num(it.gamma)},
                             {"change", num(it.change)},
                             {"u_max_eig", num(it.u_max_eig)},
                             {"k", mat_json(it.k)}});
        csv += std::to_string(it.iter) + "," + fmt(it.gamma) + "," + fmt(it.change) + "," + fmt(it.u_max_eig) + "," +
               status_name(it.status);
        for (int i = 0; i < it.k.rows(); ++i)
            for (int j = 0; j < it.k.cols(); ++j) csv += "," + fmt(it.k(i, j));
        csv += "\n";
    }
    json rep;
    rep["command"] = "iterate";
    rep["problem"] = pf.name;
    rep["alphas"] = o.alphas;
    rep["initialization"] = json{{"theorem2_status", status_name(st.init.status)},
                                 {"theorem2_gamma", st.init.gamma ? num(*st.init.gamma) : json(nullptr)},
                                 {"k", mat_json(st.init.k)}};
    rep["trace"] = trace;
    rep["converged"] = st.converged;
    rep["stop_reason"] = st.stop_reason;
    rep["k"] = mat_json(r.cert.k);
    rep["gamma"] = r.cert.gamma ? num(*r.cert.gamma) : json(nullptr);
    if (!c.csv.empty()) write_file(c.csv, csv, out);
    if (c.csv != "-") out << rep.dump(2) << "\n";
    // A failed step after a feasible start still leaves a valid certificate.
    return exit_code::ok;
}

// ------------------------------------------------------------------ simulate

struct SimulateFlags {
    std::string out_path;
    std::optional<double> t_end, dt;
    bool no_supply_check = false;
};

int cmd_simulate(const Common& c, const SimulateFlags& sf, const Globals& g, std::ostream& out, std::ostream& err) {
    ProblemFile pf = load(c, g);
    if (!pf.sim) throw Error(ErrorKind::Input, "simulate: the problem file has no [sim] section");
    SimConfig cfg = *pf.sim;
    if (sf.t_end) cfg.t_end = *sf.t_end;
    if (sf.dt) cfg.dt = *sf.dt;
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    Mat k = gain_for(pf, ctx, c);
    Trajectory tr = simulate(pf.sys, k, cfg);

    double peak = 0.0, peak_after = 0.0;
    const double w_end = cfg.disturbance_until.value_or(cfg.t0);
    for (int j = 0; j < tr.samples(); ++j) {
        const double nx = tr.x.col(j).norm();
        peak = std::max(peak, nx);
        if (tr.t(j) >= w_end) peak_after = std::max(peak_after, nx);
    }
    const double final_norm = tr.samples() ? tr.x.col(tr.samples() - 1).norm() : 0.0;
    json rep;
    rep["command"] = "simulate";
    rep["problem"] = pf.name;
    rep["k"] = mat_json(k);
    rep["samples"] = tr.samples();
    rep["t_end"] = tr.samples() ? tr.t(tr.samples() - 1) : cfg.t0;
    rep["peak_norm"] = peak;
    rep["peak_norm_after_disturbance"] = peak_after;
    rep["final_norm"] = final_norm;
    rep["final_over_peak"] = peak > 0.0 ? final_norm / peak : 0.0;
    int code = exit_code::ok;

    if (!sf.no_supply_check) {
        AnalysisResult a = analyze(ctx, k, analysis_options(pf));
        json sc;
        sc["theorem1_status"] = status_name(a.status);
        if (a.outcome.feasible()) {
            FunctionalEvaluator ev = FunctionalEvaluator::make(ctx, a.cert, pf.quad);
            SupplyCheck chk = empirical_supply_check(tr, pf.supply, a.cert.gamma.value_or(0.0), ev, cfg.history_exprs, 10);
            sc["gamma"] = a.cert.gamma ? num(*a.cert.gamma) : json(nullptr);
            sc["pass"] = chk.pass;
            sc["max_increment"] = chk.max_increment;
            sc["at"] = chk.at;
            sc["slack"] = chk.slack;
            sc["peak_v"] = chk.peak_v;
            if (!chk.pass) code = kCheckFailed;
        } else {
            sc["detail"] = "no certificate for this gain; dissipation not checked";
        }
        rep["supply_check"] = sc;
    }
    if (!sf.out_path.empty()) {
        std::ostringstream os;
        write_csv(tr, os);
        write_file(sf.out_path, os.str(), out);
        err << "simulate: wrote " << tr.samples() << " samples\n";
    }
    if (sf.out_path != "-") out << rep.dump(2) << "\n";
    return code;
}

// ------------------------------------------------------------------ spectrum

struct SpectrumFlags {
    std::vector<double> r;
    int n_max = 512;
    double tol = 1e-6;
};

int cmd_spectrum(const Common& c, const SpectrumFlags& spf, const Globals& g, std::ostream& out) {
    ProblemFile pf = load(c, g);
    SynthesisContext ctx = SynthesisContext::make(pf.sys, pf.supply, pf.quad);
    Mat k = gain_for(pf, ctx, c);
    std::vector<double> rs = spf.r;
    if (rs.empty()) {
        rs = {pf.sys.r1};
        if (pf.sys.r2 > pf.sys.r1) rs.insert(rs.end(), {0.5 * (pf.sys.r1 + pf.sys.r2), pf.sys.r2});
    }
    SpectrumOptions opts;
    opts.n_max = spf.n_max;
    opts.tol = spf.tol;
    json rows = json::array();
    bool stable = true;
    for (double r : rs) {
        SpectrumResult s = spectral_abscissa(pf.sys, k, r, opts);
        json lead = json::array();
        for (const auto& z : s.leading) lead.push_back(json::array({z.real(), z.imag()}));
        rows.push_back(json{{"r", r}, {"abscissa", s.abscissa}, {"stable", s.abscissa < 0.0}, {"n", s.n},
                            {"change", s.change}, {"leading", lead}});
        stable = stable && s.abscissa < 0.0;
    }
    json rep;
    rep["command"] = "spectrum";
    rep["problem"] = pf.name;
    if (pf.sys.p > 0) rep["k"] = mat_json(k);
    rep["stable"] = stable;
    rep["results"] = rows;
    out << rep.dump(2) << "\n";
    return exit_code::ok;
}

// --------------------------------------------------------------------- check

int cmd_check(const Common& c, int trials, std::uint64_t seed, const Globals& g, std::ostream& out) {
    json rep;
    rep["command"] = "check";
    rep["seed"] = seed;
    bool pass = true;

    InequalityReport ir = check_integral_inequalities(trials, seed);
    rep["integral_inequalities"] = json{{"trials", ir.trials},
                                        {"pass", ir.pass()},
                                        {"single_interval_worst", ir.b2_worst},
                                        {"split_worst", ir.b5_worst},
                                        {"split_forms_max_diff", ir.forms_max_diff},
                                        {"single_interval_failures", ir.b2_fail},
                                        {"split_failures", ir.b5_fail},
                                        {"split_form_failures", ir.forms_fail}};
    pass = pass && ir.pass();

    IdentityReport id = check_kronecker_identities(trials, seed);
    json per;
    for (const auto& [name, w] : id.per_identity) per[name] = w;
    rep["kronecker_identities"] = json{{"trials", id.trials}, {"pass", id.pass}, {"worst", id.worst}, {"per_identity", per}};
    pass = pass && id.pass;

    SplitExample ex = split_bound_example();
    const bool ex_pass = ex.lhs >= ex.split_first + ex.split_second && ex.lhs >= ex.single_bound;
    rep["closed_form_example"] = json{{"lhs", ex.lhs},
                                      {"single_bound", ex.single_bound},
                                      {"split_bound", json::array({ex.split_first, ex.split_second})},
                                      {"pass", ex_pass}};
    pass = pass && ex_pass;

    if (!c.file.empty()) {
        ProblemFile pf = load(c, g);
        json geo = json::array();
        const KernelBasis* bases[] = {&pf.sys.basis1, &pf.sys.basis2};
        for (int i = 0; i < 2; ++i) {
            if (bases[i]->empty()) continue;
            CheckReport r = check_geometry(*bases[i], pf.quad);
            json j = report_json(r);
            j["where"] = "basis" + std::to_string(i + 1);
            geo.push_back(j);
            pass = pass && r.pass;
        }
        rep["problem"] = pf.name;
        rep["geometry"] = geo;
    }
    rep["pass"] = pass;
    out << rep.dump(2) << "\n";
    return pass ? exit_code::ok : kCheckFailed;
}

std::uint64_t default_seed() {
    if (const char* s = std::getenv("DDSS_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(s, &end, 10);
        if (end != s && *end == '\0') return v;
        throw Error(ErrorKind::Input, std::string("DDSS_SEED is not an unsigned integer: '") + s + "'");
    }
    return 7;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dissipative synthesis for systems with distributed time-varying delays", "ddss"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--solver-tol", g.solver_tol, "SDP gap and feasibility tolerance")->check(CLI::PositiveNumber);
    app.add_option("--margin", g.margin, "strict-inequality margin, relative to the constant term")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--quad-order", g.quad_order, "Gauss-Legendre points per panel")->check(CLI::PositiveNumber);
    app.add_option("--quad-panels", g.quad_panels, "quadrature panels per interval")->check(CLI::PositiveNumber);

    Common c;
    auto file_arg = [&](CLI::App* sub, bool required = true) {
        auto* o = sub->add_option("problem", c.file, "problem file (TOML)");
        if (required) o->required();
        sub->fallthrough();
    };
    auto gain_args = [&](CLI::App* sub) {
        sub->add_option("--k", c.k, "state-feedback gain, rows separated by ';'");
        sub->add_flag("--from-synthesis", c.from_synthesis, "use the Theorem 2 gain");
        sub->add_option("--alpha", c.alpha, "Theorem 2 multiplier entry i=v (1-based)");
    };
    auto delay_args = [&](CLI::App* sub) {
        sub->add_option("--r1", c.r1, "lower delay bound override");
        sub->add_option("--r2", c.r2, "upper delay bound override");
    };

    CLI::App* validate = app.add_subcommand("validate", "check basis closure, Gram matrices and kernel decompositions");
    file_arg(validate);
    delay_args(validate);

    AnalyzeFlags af;
    CLI::App* analyze_cmd = app.add_subcommand("analyze", "Theorem 1 with a fixed gain");
    file_arg(analyze_cmd);
    analyze_cmd->add_flag("--min-gamma", af.min_gamma, "minimize gamma (default for l2gain)");
    analyze_cmd->add_option("--gamma", af.gamma, "fixed gamma")->check(CLI::PositiveNumber);
    analyze_cmd->add_option("--r1", af.r1s, "lower delay bound; repeat with --r2 for a sweep");
    analyze_cmd->add_option("--r2", af.r2s, "upper delay bound");
    analyze_cmd->add_option("--k", c.k, "state-feedback gain, rows separated by ';'");
    analyze_cmd->add_flag("--from-synthesis", c.from_synthesis, "use the Theorem 2 gain");
    analyze_cmd->add_option("--alpha", c.alpha, "Theorem 2 multiplier entry i=v (1-based)");
    analyze_cmd->add_option("--csv", c.csv, "write r1,r2,r3,min_gamma rows ('-' for stdout)");

    CLI::App* synth = app.add_subcommand("synthesize", "Theorem 2 convex synthesis");
    file_arg(synth);
    delay_args(synth);
    synth->add_option("--alpha", c.alpha, "multiplier entry i=v (1-based)");
    synth->add_option("--csv", c.csv, "write the gain and gamma ('-' for stdout)");

    IterateFlags itf;
    CLI::App* iterate = app.add_subcommand("iterate", "Algorithm 1 from a Theorem 2 start");
    file_arg(iterate);
    delay_args(iterate);
    iterate->add_option("--alpha", c.alpha, "initialization multiplier entry i=v (1-based)");
    iterate->add_option("--iters", itf.iters, "iteration cap (0: initialization only)");
    iterate->add_option("--rho1", itf.rho1, "proximal weight on H");
    iterate->add_option("--rho2", itf.rho2, "proximal weight on K");
    iterate->add_option("--eps", itf.eps, "stopping tolerance on the relative change");
    iterate->add_flag("--verbose", itf.verbose, "per-iteration progress on stderr");
    iterate->add_option("--csv", c.csv, "write the trace ('-' for stdout)");

    SimulateFlags sf;
    CLI::App* sim = app.add_subcommand("simulate", "integrate the closed loop");
    file_arg(sim);
    gain_args(sim);
    sim->add_option("--out", sf.out_path, "trajectory CSV ('-' for stdout)");
    sim->add_option("--t-end", sf.t_end, "final time override");
    sim->add_option("--dt", sf.dt, "step override")->check(CLI::PositiveNumber);
    sim->add_flag("--no-supply-check", sf.no_supply_check, "skip the dissipation check");

    SpectrumFlags spf;
    CLI::App* spectrum = app.add_subcommand("spectrum", "constant-delay spectral abscissa");
    file_arg(spectrum);
    gain_args(spectrum);
    delay_args(spectrum);
    spectrum->add_option("--r", spf.r, "constant delay values (repeatable)");
    spectrum->add_option("--n-max", spf.n_max, "largest Chebyshev degree")->check(CLI::PositiveNumber);
    spectrum->add_option("--tol", spf.tol, "N-doubling tolerance")->check(CLI::PositiveNumber);

    int trials = 500;
    std::optional<std::uint64_t> seed;
    CLI::App* check = app.add_subcommand("check", "integral-inequality and identity property suites");
    file_arg(check, false);
    check->add_option("--trials", trials, "randomized trials")->check(CLI::PositiveNumber);
    check->add_option("--seed", seed, "master seed (default DDSS_SEED, else 7)");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? exit_code::ok : exit_code::input_error;
    }

    try {
        if (*validate) return cmd_validate(c, g, out);
        if (*analyze_cmd) return cmd_analyze(c, af, g, out, err);
        if (*synth) return cmd_synthesize(c, g, out);
        if (*iterate) return cmd_iterate(c, itf, g, out);
        if (*sim) return cmd_simulate(c, sf, g, out, err);
        if (*spectrum) return cmd_spectrum(c, spf, g, out);
        if (*check) return cmd_check(c, trials, seed ? *seed : default_seed(), g, out);
    } catch (const Error& e) {
        err << "ddss: " << kind_name(e.kind()) << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "ddss: " << e.what() << "\n";
        return exit_code::solver_error;
    }
    return exit_code::input_error;
}

}  // namespace ddss
