#include "ddss/lmi.hpp"

#include <cstdio>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include "ddss/error.hpp"

namespace ddss {

void AffineMatExpr::add_term(int index, const Mat& coeff) {
    if (coeff.rows() != constant_.rows() || coeff.cols() != constant_.cols())
        throw Error(ErrorKind::Dimension, "AffineMatExpr: coefficient shape mismatch");
    auto it = terms_.find(index);
    if (it == terms_.end()) terms_.emplace(index, coeff);
    else it->second += coeff;
}

Mat AffineMatExpr::eval(const Vec& x) const {
    Mat out = constant_;
    for (const auto& [i, c] : terms_) {
        if (i >= x.size()) throw Error(ErrorKind::Dimension, "AffineMatExpr::eval: decision vector too short");
        out += x(i) * c;
    }
    return out;
}

AffineMatExpr AffineMatExpr::transpose() const {
    AffineMatExpr out(Mat(constant_.transpose()));
    for (const auto& [i, c] : terms_) out.terms_.emplace(i, c.transpose());
    return out;
}

namespace {

void same_shape(const AffineMatExpr& a, const AffineMatExpr& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(ErrorKind::Dimension, std::string("AffineMatExpr ") + op + ": shapes " +
                                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                              " and " + std::to_string(b.rows()) + "x" +
                                              std::to_string(b.cols()) + " differ");
}

}  // namespace

AffineMatExpr& AffineMatExpr::operator+=(const AffineMatExpr& o) {
    same_shape(*this, o, "+");
    constant_ += o.constant_;
    for (const auto& [i, c] : o.terms_) add_term(i, c);
    return *this;
}

AffineMatExpr& AffineMatExpr::operator-=(const AffineMatExpr& o) {
    same_shape(*this, o, "-");
    constant_ -= o.constant_;
    for (const auto& [i, c] : o.terms_) add_term(i, -c);
    return *this;
}

AffineMatExpr operator+(AffineMatExpr a, const AffineMatExpr& b) { return a += b; }

AffineMatExpr operator-(AffineMatExpr a, const AffineMatExpr& b) { return a -= b; }

AffineMatExpr operator-(const AffineMatExpr& a) { return -1.0 * a; }

AffineMatExpr operator*(double s, const AffineMatExpr& a) {
    AffineMatExpr out(Mat(s * a.constant()));
    for (const auto& [i, c] : a.terms()) out.add_term(i, s * c);
    return out;
}

AffineMatExpr operator*(const Mat& m, const AffineMatExpr& a) {
    if (m.cols() != a.rows())
        throw Error(ErrorKind::Dimension, "AffineMatExpr: left factor has " + std::to_string(m.cols()) +
                                              " columns, expression has " + std::to_string(a.rows()) + " rows");
    AffineMatExpr out(Mat(m * a.constant()));
    for (const auto& [i, c] : a.terms()) out.add_term(i, m * c);
    return out;
}

AffineMatExpr operator*(const AffineMatExpr& a, const Mat& m) {
    if (a.cols() != m.rows())
        throw Error(ErrorKind::Dimension, "AffineMatExpr: expression has " + std::to_string(a.cols()) +
                                              " columns, right factor has " + std::to_string(m.rows()) + " rows");
    AffineMatExpr out(Mat(a.constant() * m));
    for (const auto& [i, c] : a.terms()) out.add_term(i, c * m);
    return out;
}

AffineMatExpr mul(const AffineMatExpr& a, const AffineMatExpr& b) {
    if (!a.is_constant() && !b.is_constant())
        throw Error(ErrorKind::AffineViolation, "product of two variable-bearing expressions is not affine");
    if (a.is_constant()) return a.constant() * b;
    return a * b.constant();
}

AffineMatExpr sy(const AffineMatExpr& a) {
    if (a.rows() != a.cols()) throw Error(ErrorKind::Dimension, "sy: expression is not square");
    return a + a.transpose();
}

AffineMatExpr dsum(std::initializer_list<AffineMatExpr> blocks) {
    return dsum(std::vector<AffineMatExpr>(blocks));
}

AffineMatExpr dsum(const std::vector<AffineMatExpr>& parts) {
    int r = 0, c = 0;
    for (const auto& p : parts) {
        r += p.rows();
        c += p.cols();
    }
    AffineMatExpr out = AffineMatExpr::zero(r, c);
    r = c = 0;
    for (const auto& p : parts) {
        Mat k = Mat::Zero(out.rows(), out.cols());
        k.block(r, c, p.rows(), p.cols()) = p.constant();
        out += AffineMatExpr(k);
        for (const auto& [i, coeff] : p.terms()) {
            Mat t = Mat::Zero(out.rows(), out.cols());
            t.block(r, c, p.rows(), p.cols()) = coeff;
            out.add_term(i, t);
        }
        r += p.rows();
        c += p.cols();
    }
    return out;
}

AffineMatExpr kron(const Mat& a, const AffineMatExpr& b) {
    AffineMatExpr out(kron(a, b.constant()));
    for (const auto& [i, c] : b.terms()) out.add_term(i, kron(a, c));
    return out;
}

AffineMatExpr kron(const AffineMatExpr& a, const Mat& b) {
    AffineMatExpr out(kron(a.constant(), b));
    for (const auto& [i, c] : a.terms()) out.add_term(i, kron(c, b));
    return out;
}

AffineMatExpr vec(const AffineMatExpr& a) {
    AffineMatExpr out(vec(a.constant()));
    for (const auto& [i, c] : a.terms()) out.add_term(i, vec(c));
    return out;
}

AffineMatExpr blocks(const std::vector<std::vector<AffineMatExpr>>& grid) {
    if (grid.empty()) return AffineMatExpr();
    const std::size_t nc = grid[0].size();
    std::vector<int> hs(grid.size()), ws(nc);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i].size() != nc) throw Error(ErrorKind::Dimension, "blocks: ragged grid");
        hs[i] = grid[i][0].rows();
    }
    for (std::size_t j = 0; j < nc; ++j) ws[j] = grid[0][j].cols();
    int rows = 0, cols = 0;
    for (int h : hs) rows += h;
    for (int w : ws) cols += w;
    Mat k = Mat::Zero(rows, cols);
    std::map<int, Mat> terms;
    int r0 = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        int c0 = 0;
        for (std::size_t j = 0; j < nc; ++j) {
            const auto& b = grid[i][j];
            if (b.rows() != hs[i] || b.cols() != ws[j])
                throw Error(ErrorKind::Dimension, "blocks: slot (" + std::to_string(i) + "," + std::to_string(j) +
                                                      ") is " + std::to_string(b.rows()) + "x" +
                                                      std::to_string(b.cols()) + ", expected " +
                                                      std::to_string(hs[i]) + "x" + std::to_string(ws[j]));
            k.block(r0, c0, hs[i], ws[j]) = b.constant();
            for (const auto& [idx, coeff] : b.terms()) {
                auto it = terms.find(idx);
                if (it == terms.end()) it = terms.emplace(idx, Mat::Zero(rows, cols)).first;
                it->second.block(r0, c0, hs[i], ws[j]) += coeff;
            }
            c0 += ws[j];
        }
        r0 += hs[i];
    }
    AffineMatExpr out(k);
    for (auto& [idx, coeff] : terms) out.add_term(idx, coeff);
    return out;
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Marginal: return "marginal";
        case SolveStatus::SolverError: return "solver_error";
    }
    return "?";
}

const Mat& SolveOutcome::at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw Error(ErrorKind::Input, "SolveOutcome: no variable named '" + name + "'");
    return it->second;
}

MatVar LmiProblem::declare(const std::string& name, VarShape shape, int rows, int cols, int count) {
    if (has_var(name)) throw Error(ErrorKind::Input, "LmiProblem: duplicate variable name '" + name + "'");
    MatVar v{name, shape, rows, cols, next_, count};
    next_ += count;
    vars_.push_back(v);
    return v;
}

MatVar LmiProblem::sym(const std::string& name, int k) {
    return declare(name, VarShape::Symmetric, k, k, k * (k + 1) / 2);
}

MatVar LmiProblem::rect(const std::string& name, int rows, int cols) {
    return declare(name, VarShape::Rectangular, rows, cols, rows * cols);
}

MatVar LmiProblem::scalar(const std::string& name) { return declare(name, VarShape::Scalar, 1, 1, 1); }

bool LmiProblem::has_var(const std::string& name) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const MatVar& v) { return v.name == name; });
}

AffineMatExpr LmiProblem::ref(const MatVar& v) const {
    AffineMatExpr e = AffineMatExpr::zero(v.rows, v.cols);
    int idx = v.offset;
    if (v.shape == VarShape::Symmetric) {
        for (int j = 0; j < v.cols; ++j)
            for (int i = 0; i <= j; ++i) {
                Mat c = Mat::Zero(v.rows, v.cols);
                c(i, j) = 1.0;
                c(j, i) = 1.0;
                e.add_term(idx++, c);
            }
    } else {
        for (int j = 0; j < v.cols; ++j)
            for (int i = 0; i < v.rows; ++i) {
                Mat c = Mat::Zero(v.rows, v.cols);
                c(i, j) = 1.0;
                e.add_term(idx++, c);
            }
    }
    return e;
}

void LmiProblem::add(const std::string& name, const AffineMatExpr& e, Sense sense) {
    if (e.rows() != e.cols())
        throw Error(ErrorKind::Dimension, "constraint '" + name + "' is not square");
    cons_.push_back({name, e, sense});
}

void LmiProblem::add(const std::string& name, const AffineMatExpr& e, Sense sense, double margin_ref) {
    add(name, e, sense);
    cons_.back().margin_ref = margin_ref;
}

void LmiProblem::minimize(const AffineMatExpr& objective) {
    if (objective.rows() != 1 || objective.cols() != 1)
        throw Error(ErrorKind::Dimension, "objective must be 1x1");
    objective_ = objective;
    has_objective_ = true;
}

std::map<std::string, Mat> LmiProblem::extract(const Vec& x) const {
    std::map<std::string, Mat> out;
    for (const auto& v : vars_) out[v.name] = ref(v).eval(x);
    return out;
}

namespace {

double asym(const Mat& m) { return m.size() ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0; }

double scale_of(const Mat& m) { return m.size() ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0; }

bool strict(Sense s) { return s == Sense::NegDef || s == Sense::PosDef; }

double spectral_norm(const Mat& sym) {
    if (sym.size() == 0) return 0.0;
    return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

ConicProgram LmiProblem::scalarize(const SolverConfig& cfg) const {
    if (cons_.empty()) throw Error(ErrorKind::Input, "LmiProblem: at least one constraint is required");
    ConicProgram prog;
    prog.num_vars = next_;
    prog.c = Vec::Zero(next_);
    if (has_objective_) {
        prog.c0 = objective_.constant()(0, 0);
        for (const auto& [i, c] : objective_.terms()) prog.c(i) += c(0, 0);
    }
    for (const auto& con : cons_) {
        ConicBlock blk;
        blk.name = con.name;
        blk.size = con.expr.rows();
        blk.sense = con.sense;
        const double sign = (con.sense == Sense::NegDef || con.sense == Sense::NegSemi) ? -1.0 : 1.0;
        double res = asym(con.expr.constant()) / scale_of(con.expr.constant());
        for (const auto& [i, c] : con.expr.terms()) res = std::max(res, asym(c) / scale_of(c));
        if (res > 1e-12)
            throw Error(ErrorKind::Dimension, "constraint '" + con.name + "' is not symmetric (residual " +
                                                  std::to_string(res) + ")");
        blk.asymmetry = res;
        blk.g0 = sign * symmetrize(con.expr.constant());
        if (strict(con.sense)) {
            const double ref = con.margin_ref >= 0.0 ? con.margin_ref : spectral_norm(blk.g0);
            blk.margin = cfg.strict_margin * std::max(1.0, ref);
            blk.g0 -= blk.margin * eye(blk.size);
        }
        for (const auto& [i, c] : con.expr.terms()) {
            Mat s = sign * symmetrize(c);
            if (s.cwiseAbs().maxCoeff() == 0.0) continue;
            blk.g.emplace_back(i, std::move(s));
        }
        prog.blocks.push_back(std::move(blk));
    }
    return prog;
}

std::vector<std::pair<std::string, double>> LmiProblem::slacks(const Vec& x) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& con : cons_) {
        Mat v = symmetrize(con.expr.eval(x));
        double s = (con.sense == Sense::NegDef || con.sense == Sense::NegSemi) ? -max_eig(v) : min_eig(v);
        out.emplace_back(con.name, s);
    }
    return out;
}

SolveOutcome LmiProblem::solve(const SolverConfig& cfg) const {
    ConicProgram prog = scalarize(cfg);
    SdpResult r = solve_sdp(prog, cfg);
    SolveOutcome out;
    out.iterations = r.iterations;
    out.x = r.x;
    out.values = extract(r.x);
    out.objective = prog.c0 + prog.c.dot(r.x);

    // Violation of each shifted block, against a per-block tolerance.
    bool within_tol = true, within_marginal = true;
    for (const auto& blk : prog.blocks) {
        Mat g = blk.g0;
        for (const auto& [i, c] : blk.g) g += r.x(i) * c;
        double viol = std::max(0.0, -min_eig(g));
        double tol = strict(blk.sense) ? blk.margin : cfg.strict_margin * std::max(1.0, spectral_norm(blk.g0));
        out.max_residual = std::max(out.max_residual, viol);
        if (viol > tol) within_tol = false;
        if (viol > 10.0 * tol) within_marginal = false;
    }

    const bool converged = r.kind == SdpResult::Kind::Converged;
    // A stalled run whose dual iterate is feasible and whose gap is small is
    // still a usable optimum.
    const bool reduced = !converged && r.kind != SdpResult::Kind::Infeasible && r.kind != SdpResult::Kind::Unbounded &&
                         r.rel_gap <= cfg.reduced_gap_tol && r.dinf <= cfg.feas_tol;
    if (r.kind == SdpResult::Kind::Infeasible) {
        out.status = SolveStatus::Infeasible;
        char buf[96];
        std::snprintf(buf, sizeof buf, "infeasibility certificate (no solution with norm below %.3g)", r.certificate_bound);
        out.message = buf;
    } else if ((converged || reduced) && within_tol) {
        out.status = SolveStatus::Optimal;
        if (reduced) out.message = "solved to reduced accuracy (gap " + std::to_string(r.rel_gap) + ")";
    } else if (within_marginal && r.kind != SdpResult::Kind::Unbounded) {
        out.status = SolveStatus::Marginal;
        out.message = converged ? "constraints hold only within 10x margin"
                                : "solver stopped before full accuracy; constraints hold within 10x margin";
    } else if (r.kind == SdpResult::Kind::Unbounded) {
        out.status = SolveStatus::SolverError;
        out.message = "objective unbounded below";
    } else {
        out.status = SolveStatus::SolverError;
        out.message = "solver did not converge (gap " + std::to_string(r.rel_gap) + ", pinf " +
                      std::to_string(r.pinf) + ", dinf " + std::to_string(r.dinf) + ")";
    }
    return out;
}

void write_sdpa(const ConicProgram& prog, std::ostream& out) {
    out << "* ddss scalarized program: minimize c^T x s.t. sum_i F_i x_i - F_0 >= 0\n";
    out << prog.num_vars << "\n" << prog.blocks.size() << "\n";
    for (std::size_t j = 0; j < prog.blocks.size(); ++j) out << prog.blocks[j].size << (j + 1 < prog.blocks.size() ? " " : "\n");
    for (int i = 0; i < prog.num_vars; ++i) out << prog.c(i) << (i + 1 < prog.num_vars ? " " : "\n");
    out.precision(17);
    auto emit = [&](int mat, std::size_t blk, const Mat& m, double sign) {
        for (int c = 0; c < m.cols(); ++c)
            for (int r = 0; r <= c; ++r)
                if (m(r, c) != 0.0) out << mat << " " << blk + 1 << " " << r + 1 << " " << c + 1 << " " << sign * m(r, c) << "\n";
    };
    for (std::size_t j = 0; j < prog.blocks.size(); ++j) {
        emit(0, j, prog.blocks[j].g0, -1.0);
        for (const auto& [i, c] : prog.blocks[j].g) emit(i + 1, j, c, 1.0);
    }
}

}  // namespace ddss
