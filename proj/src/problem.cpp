#include "ddss/problem.hpp"

#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "ddss/error.hpp"

namespace ddss {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::Input, path + ": " + what);
}

std::string join(const std::string& section, const std::string& key) { return "[" + section + "]." + key; }

std::optional<double> number_of(const toml::node& node) {
    if (auto v = node.value<double>()) return *v;
    return std::nullopt;
}

double get_number(const toml::table& sec, const std::string& section, const std::string& key, double fallback,
                  bool required = false) {
    const toml::node* node = sec.get(key);
    if (!node) {
        if (required) fail(join(section, key), "missing");
        return fallback;
    }
    auto v = number_of(*node);
    if (!v) fail(join(section, key), "expected a number");
    return *v;
}

int get_int(const toml::table& sec, const std::string& section, const std::string& key, int fallback,
            bool required = false) {
    const toml::node* node = sec.get(key);
    if (!node) {
        if (required) fail(join(section, key), "missing");
        return fallback;
    }
    auto v = node->value<int64_t>();
    if (!v || !node->is_integer()) fail(join(section, key), "expected an integer");
    return static_cast<int>(*v);
}

Mat get_matrix(const toml::table& sec, const std::string& section, const std::string& key, int rows, int cols,
               bool required = false) {
    const std::string path = join(section, key);
    const toml::node* node = sec.get(key);
    if (!node) {
        if (required) fail(path, "missing");
        return Mat::Zero(rows, cols);
    }
    const toml::array* arr = node->as_array();
    if (!arr) fail(path, "expected an array of rows");
    const int got_rows = static_cast<int>(arr->size());
    if (got_rows == 0 && (rows == 0 || cols == 0)) return Mat::Zero(rows, cols);
    int got_cols = -1;
    Mat out;
    for (int i = 0; i < got_rows; ++i) {
        const toml::array* row = (*arr)[i].as_array();
        if (!row) fail(path + "[" + std::to_string(i) + "]", "expected a row array");
        if (got_cols < 0) {
            got_cols = static_cast<int>(row->size());
            if (got_rows != rows || got_cols != cols)
                fail(path, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                               std::to_string(got_rows) + "x" + std::to_string(got_cols));
            out.resize(rows, cols);
        }
        if (static_cast<int>(row->size()) != got_cols)
            fail(path + "[" + std::to_string(i) + "]", "row has " + std::to_string(row->size()) + " entries, expected " +
                                                           std::to_string(got_cols));
        for (int j = 0; j < got_cols; ++j) {
            auto v = number_of((*row)[j]);
            if (!v) fail(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", "expected a number");
            out(i, j) = *v;
        }
    }
    return out;
}

Expr expr_of(const toml::node& node, const std::string& path) {
    if (auto s = node.value<std::string>()) {
        try {
            return parse_expr(*s);
        } catch (const ParseError& e) {
            fail(path, e.what());
        }
    }
    if (auto v = number_of(node)) return Expr::constant(*v);
    fail(path, "expected an expression string or a number");
}

std::vector<Expr> get_exprs(const toml::table& sec, const std::string& section, const std::string& key) {
    const std::string path = join(section, key);
    const toml::node* node = sec.get(key);
    if (!node) return {};
    const toml::array* arr = node->as_array();
    if (!arr) fail(path, "expected an array of expressions");
    std::vector<Expr> out;
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(expr_of((*arr)[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<std::vector<Expr>> get_expr_grid(const toml::table& sec, const std::string& section, const std::string& key,
                                             int rows, int cols) {
    const std::string path = join(section, key);
    const toml::array* arr = sec.get(key)->as_array();
    if (!arr || static_cast<int>(arr->size()) != rows)
        fail(path, "expected " + std::to_string(rows) + " rows of expressions");
    std::vector<std::vector<Expr>> grid;
    for (int i = 0; i < rows; ++i) {
        const toml::array* row = (*arr)[i].as_array();
        const std::string rp = path + "[" + std::to_string(i) + "]";
        if (!row || static_cast<int>(row->size()) != cols) fail(rp, "expected " + std::to_string(cols) + " expressions");
        std::vector<Expr> r;
        for (int j = 0; j < cols; ++j) r.push_back(expr_of((*row)[j], rp + "[" + std::to_string(j) + "]"));
        grid.push_back(std::move(r));
    }
    return grid;
}

const toml::table& section_of(const toml::table& root, const std::string& name, bool required) {
    static const toml::table empty;
    const toml::node* node = root.get(name);
    if (!node) {
        if (required) fail("[" + name + "]", "missing section");
        return empty;
    }
    const toml::table* t = node->as_table();
    if (!t) fail("[" + name + "]", "expected a table");
    return *t;
}

void reject_unknown(const toml::table& sec, const std::string& section, std::initializer_list<const char*> known) {
    for (const auto& [k, v] : sec) {
        bool ok = false;
        for (const char* name : known) ok = ok || k.str() == name;
        if (!ok) fail(join(section, std::string(k.str())), "unknown key");
    }
}

KernelBasis read_basis(const toml::table& sec, int idx, double a, double b) {
    const std::string s = std::to_string(idx);
    KernelBasis basis;
    basis.f = get_exprs(sec, "basis", "f" + s);
    basis.phi = get_exprs(sec, "basis", "phi" + s);
    basis.a = a;
    basis.b = b;
    basis.m = get_matrix(sec, "basis", "M" + s, basis.d(), basis.kappa(), basis.kappa() > 0);
    return basis;
}

SupplyRate read_supply(const toml::table& root, int m, int q) {
    const toml::table& sec = section_of(root, "supply", true);
    reject_unknown(sec, "supply", {"type", "gamma", "J1", "J_tilde", "J2", "J3"});
    auto type = sec["type"].value<std::string>();
    if (!type) fail("[supply].type", "missing or not a string");
    if (*type == "l2gain") {
        if (sec.get("gamma")) {
            double g = get_number(sec, "supply", "gamma", 0.0);
            if (!(g > 0.0)) throw Error(ErrorKind::NonPositiveGamma, "[supply].gamma: must be positive");
            return supply_l2(g, m, q);
        }
        return supply_l2_variable(m, q);
    }
    if (*type == "passivity") {
        if (m != q) throw Error(ErrorKind::Dimension, "[supply]: passivity needs m = q");
        return supply_passivity(get_matrix(sec, "supply", "J1", m, m, true), q);
    }
    if (*type == "custom") {
        return supply_custom(get_matrix(sec, "supply", "J1", m, m, true), get_matrix(sec, "supply", "J_tilde", m, m, true),
                             get_matrix(sec, "supply", "J2", m, q, true), get_matrix(sec, "supply", "J3", q, q, true));
    }
    fail("[supply].type", "expected l2gain, passivity or custom, got '" + *type + "'");
}

}  // namespace

ProblemFile parse_problem(const std::string& text, const std::string& name) {
    toml::table root;
    try {
        root = toml::parse(text, name);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << name << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
        throw Error(ErrorKind::Parse, os.str());
    }
    for (const auto& [k, v] : root) {
        static const char* known[] = {"system", "basis", "kernels", "supply", "sim", "solver", "alg1"};
        bool ok = false;
        for (const char* s : known) ok = ok || k.str() == s;
        if (!ok) fail("[" + std::string(k.str()) + "]", "unknown section");
    }

    ProblemFile pf;
    pf.name = name;
    DelaySystem& sys = pf.sys;

    const toml::table& s = section_of(root, "system", true);
    reject_unknown(s, "system", {"n", "m", "p", "q", "r1", "r2", "A1", "B1", "D1", "C1", "B4", "D2"});
    sys.n = get_int(s, "system", "n", 0, true);
    sys.m = get_int(s, "system", "m", 0, true);
    sys.p = get_int(s, "system", "p", 0);
    sys.q = get_int(s, "system", "q", 0, true);
    if (sys.n <= 0) fail("[system].n", "must be positive");
    if (sys.m < 0 || sys.p < 0 || sys.q < 0) fail("[system]", "dimensions must be non-negative");
    sys.r1 = get_number(s, "system", "r1", 0.0, true);
    sys.r2 = get_number(s, "system", "r2", 0.0, true);
    classify_regime(sys.r1, sys.r2);
    const int n = sys.n, m = sys.m, p = sys.p, q = sys.q;
    sys.a1 = get_matrix(s, "system", "A1", n, n, true);
    sys.b1 = get_matrix(s, "system", "B1", n, p);
    sys.d1 = get_matrix(s, "system", "D1", n, q);
    sys.c1 = get_matrix(s, "system", "C1", m, n);
    sys.b4 = get_matrix(s, "system", "B4", m, p);
    sys.d2 = get_matrix(s, "system", "D2", m, q);

    const toml::table& b = section_of(root, "basis", true);
    reject_unknown(b, "basis", {"f1", "phi1", "M1", "f2", "phi2", "M2"});
    sys.basis1 = read_basis(b, 1, -sys.r1, 0.0);
    sys.basis2 = read_basis(b, 2, -sys.r2, -sys.r1);
    const int k1 = sys.kappa1(), k2 = sys.kappa2();

    const toml::table& k = section_of(root, "kernels", false);
    reject_unknown(k, "kernels", {"A2", "A3", "B2", "B3", "C2", "C3", "B5", "B6", "raw"});
    sys.a2 = get_matrix(k, "kernels", "A2", n, k1 * n);
    sys.a3 = get_matrix(k, "kernels", "A3", n, k2 * n);
    sys.b2k = get_matrix(k, "kernels", "B2", n, k1 * p);
    sys.b3k = get_matrix(k, "kernels", "B3", n, k2 * p);
    sys.c2 = get_matrix(k, "kernels", "C2", m, k1 * n);
    sys.c3 = get_matrix(k, "kernels", "C3", m, k2 * n);
    sys.b5k = get_matrix(k, "kernels", "B5", m, k1 * p);
    sys.b6k = get_matrix(k, "kernels", "B6", m, k2 * p);
    if (const toml::node* raw = k.get("raw")) {
        const toml::table* rt = raw->as_table();
        if (!rt) fail("[kernels.raw]", "expected a table");
        struct Slot { const char* key; const char* field; int rows, cols; };
        const Slot slots[] = {{"A2", "a2", n, n}, {"A3", "a3", n, n}, {"B2", "b2k", n, p}, {"B3", "b3k", n, p},
                              {"C2", "c2", m, n}, {"C3", "c3", m, n}, {"B5", "b5k", m, p}, {"B6", "b6k", m, p}};
        reject_unknown(*rt, "kernels.raw", {"A2", "A3", "B2", "B3", "C2", "C3", "B5", "B6"});
        for (const Slot& sl : slots)
            if (rt->get(sl.key)) sys.raw_kernels[sl.field] = get_expr_grid(*rt, "kernels.raw", sl.key, sl.rows, sl.cols);
    }
    sys.validate();

    pf.supply = read_supply(root, m, q);

    if (root.get("sim")) {
        const toml::table& sm = section_of(root, "sim", false);
        reject_unknown(sm, "sim", {"t0", "t_end", "dt", "kernel_nodes", "delay", "disturbance", "disturbance_until",
                                   "history", "record_every"});
        SimConfig cfg;
        cfg.t0 = get_number(sm, "sim", "t0", 0.0);
        cfg.t_end = get_number(sm, "sim", "t_end", 20.0);
        cfg.dt = get_number(sm, "sim", "dt", 1e-4);
        cfg.kernel_nodes = get_int(sm, "sim", "kernel_nodes", 200);
        cfg.record_every = get_int(sm, "sim", "record_every", 1);
        if (const toml::node* d = sm.get("delay")) cfg.delay_expr = expr_of(*d, "[sim].delay");
        else cfg.delay_expr = Expr::constant(sys.r2);
        cfg.disturbance_exprs = get_exprs(sm, "sim", "disturbance");
        if (sm.get("disturbance_until")) cfg.disturbance_until = get_number(sm, "sim", "disturbance_until", 0.0);
        cfg.history_exprs = get_exprs(sm, "sim", "history");
        if (!cfg.disturbance_exprs.empty() && static_cast<int>(cfg.disturbance_exprs.size()) != q)
            fail("[sim].disturbance", "expected " + std::to_string(q) + " expressions");
        if (static_cast<int>(cfg.history_exprs.size()) != n)
            fail("[sim].history", "expected " + std::to_string(n) + " expressions");
        if (!(cfg.dt > 0.0)) fail("[sim].dt", "must be positive");
        if (cfg.kernel_nodes < 2) fail("[sim].kernel_nodes", "must be at least 2");
        pf.sim = cfg;
    }

    if (root.get("solver")) {
        const toml::table& sv = section_of(root, "solver", false);
        reject_unknown(sv, "solver", {"strict_margin", "gap_tol", "feas_tol", "max_iters", "quad_order", "quad_panels"});
        pf.solver.strict_margin = get_number(sv, "solver", "strict_margin", pf.solver.strict_margin);
        pf.solver.gap_tol = get_number(sv, "solver", "gap_tol", pf.solver.gap_tol);
        pf.solver.feas_tol = get_number(sv, "solver", "feas_tol", pf.solver.feas_tol);
        pf.solver.max_iters = get_int(sv, "solver", "max_iters", pf.solver.max_iters);
        pf.quad.order = get_int(sv, "solver", "quad_order", pf.quad.order);
        pf.quad.panels = get_int(sv, "solver", "quad_panels", pf.quad.panels);
    }

    if (root.get("alg1")) {
        const toml::table& al = section_of(root, "alg1", false);
        reject_unknown(al, "alg1", {"alphas", "rho1", "rho2", "eps", "max_iters"});
        if (const toml::node* an = al.get("alphas")) {
            if (const toml::table* at = an->as_table()) {
                for (const auto& [key, val] : *at) {
                    const std::string path = "[alg1].alphas." + std::string(key.str());
                    int idx = 0;
                    try {
                        std::size_t used = 0;
                        idx = std::stoi(std::string(key.str()), &used);
                        if (used != key.str().size()) throw std::invalid_argument("");
                    } catch (const std::exception&) {
                        fail(path, "alpha keys must be 1-based integers");
                    }
                    auto v = number_of(val);
                    if (!v) fail(path, "expected a number");
                    pf.alg1.alpha_overrides[idx] = *v;
                }
            } else if (const toml::array* aa = an->as_array()) {
                std::vector<double> full;
                for (std::size_t i = 0; i < aa->size(); ++i) {
                    auto v = number_of((*aa)[i]);
                    if (!v) fail("[alg1].alphas[" + std::to_string(i) + "]", "expected a number");
                    full.push_back(*v);
                }
                pf.alg1.alphas = full;
            } else {
                fail("[alg1].alphas", "expected a table of index = value or an array");
            }
        }
        pf.alg1.rho1 = get_number(al, "alg1", "rho1", pf.alg1.rho1);
        pf.alg1.rho2 = get_number(al, "alg1", "rho2", pf.alg1.rho2);
        pf.alg1.eps = get_number(al, "alg1", "eps", pf.alg1.eps);
        pf.alg1.max_iters = get_int(al, "alg1", "max_iters", pf.alg1.max_iters);
    }
    return pf;
}

ProblemFile load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Input, "cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str(), path);
}

}  // namespace ddss
