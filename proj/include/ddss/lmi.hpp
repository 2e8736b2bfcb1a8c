#pragma once

#include <initializer_list>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ddss/tensor.hpp"

namespace ddss {

enum class VarShape { Symmetric, Rectangular, Scalar };

struct MatVar {
    std::string name;
    VarShape shape = VarShape::Scalar;
    int rows = 1, cols = 1;
    int offset = 0;  // first scalar index in the decision vector
    int count = 1;   // number of scalars
};

// constant + sum_i x_i * coeff_i over scalar decision indices i.
class AffineMatExpr {
public:
    AffineMatExpr() : constant_(0, 0) {}
    explicit AffineMatExpr(const Mat& constant) : constant_(constant) {}
    static AffineMatExpr zero(int rows, int cols) { return AffineMatExpr(Mat::Zero(rows, cols)); }

    int rows() const { return static_cast<int>(constant_.rows()); }
    int cols() const { return static_cast<int>(constant_.cols()); }
    const Mat& constant() const { return constant_; }
    const std::map<int, Mat>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }

    // Adds x_index * coeff.
    void add_term(int index, const Mat& coeff);

    Mat eval(const Vec& x) const;
    AffineMatExpr transpose() const;

    AffineMatExpr& operator+=(const AffineMatExpr& o);
    AffineMatExpr& operator-=(const AffineMatExpr& o);

private:
    Mat constant_;
    std::map<int, Mat> terms_;
};

AffineMatExpr operator+(AffineMatExpr a, const AffineMatExpr& b);
AffineMatExpr operator-(AffineMatExpr a, const AffineMatExpr& b);
AffineMatExpr operator-(const AffineMatExpr& a);
AffineMatExpr operator*(double s, const AffineMatExpr& a);
AffineMatExpr operator*(const Mat& m, const AffineMatExpr& a);
AffineMatExpr operator*(const AffineMatExpr& a, const Mat& m);

// Product of two expressions; throws AffineViolation unless one side is constant.
AffineMatExpr mul(const AffineMatExpr& a, const AffineMatExpr& b);

AffineMatExpr sy(const AffineMatExpr& a);
AffineMatExpr dsum(std::initializer_list<AffineMatExpr> blocks);
AffineMatExpr dsum(const std::vector<AffineMatExpr>& blocks);
AffineMatExpr kron(const Mat& a, const AffineMatExpr& b);
AffineMatExpr kron(const AffineMatExpr& a, const Mat& b);

// Column-stacking vectorization of an expression.
AffineMatExpr vec(const AffineMatExpr& a);

// Block assembly; every row of the grid must share a height and every column a width.
AffineMatExpr blocks(const std::vector<std::vector<AffineMatExpr>>& grid);

enum class Sense {
    NegDef,   // expr < 0 (realized as expr <= -margin I)
    PosDef,   // expr > 0 (realized as expr >= margin I)
    PosSemi,  // expr >= 0
    NegSemi,  // expr <= 0
};

struct SolverConfig {
    double strict_margin = 1e-7;  // relative to max(1, ||constant||)
    double gap_tol = 1e-8;
    double feas_tol = 1e-8;
    double reduced_gap_tol = 1e-5;  // accepted gap when the iteration stalls
    int max_iters = 150;
    bool verbose = false;
};

// Block of the scalarized program: g0 + sum_i x_i g_i >= 0.
struct ConicBlock {
    std::string name;
    int size = 0;
    Mat g0;
    std::vector<std::pair<int, Mat>> g;
    Sense sense = Sense::PosSemi;
    double margin = 0.0;
    double asymmetry = 0.0;  // symmetrization residual of the source expression
};

struct ConicProgram {
    int num_vars = 0;
    Vec c;  // minimize c^T x
    double c0 = 0.0;
    std::vector<ConicBlock> blocks;
};

// Sparse SDPA text format (minimize c^T x, sum_i F_i x_i - F_0 >= 0).
void write_sdpa(const ConicProgram& prog, std::ostream& out);

enum class SolveStatus { Optimal, Infeasible, Marginal, SolverError };

const char* status_name(SolveStatus s);

struct SolveOutcome {
    SolveStatus status = SolveStatus::SolverError;
    Vec x;
    std::map<std::string, Mat> values;
    double objective = 0.0;
    double max_residual = 0.0;  // largest violation of the shifted constraints
    int iterations = 0;
    std::string message;

    bool feasible() const { return status == SolveStatus::Optimal || status == SolveStatus::Marginal; }
    const Mat& at(const std::string& name) const;
};

// Interior-point solve of a scalarized program.
struct SdpResult {
    enum class Kind { Converged, Infeasible, Unbounded, Stalled, MaxIter } kind = Kind::Stalled;
    Vec x;
    double primal_obj = 0.0, dual_obj = 0.0;
    double rel_gap = 0.0, pinf = 0.0, dinf = 0.0;
    int iterations = 0;
    double certificate_bound = 0.0;  // infeasible: no solution with ||x||_2 below this
};

SdpResult solve_sdp(const ConicProgram& prog, const SolverConfig& cfg);

class LmiProblem {
public:
    MatVar sym(const std::string& name, int k);
    MatVar rect(const std::string& name, int rows, int cols);
    MatVar scalar(const std::string& name);

    AffineMatExpr ref(const MatVar& v) const;

    void add(const std::string& name, const AffineMatExpr& e, Sense sense);
    // Strict constraint whose margin is scaled by `margin_ref` instead of the
    // norm of its constant term.
    void add(const std::string& name, const AffineMatExpr& e, Sense sense, double margin_ref);
    void minimize(const AffineMatExpr& objective);

    int num_scalars() const { return next_; }
    const std::vector<MatVar>& vars() const { return vars_; }
    bool has_var(const std::string& name) const;

    ConicProgram scalarize(const SolverConfig& cfg = {}) const;
    SolveOutcome solve(const SolverConfig& cfg = {}) const;

    std::map<std::string, Mat> extract(const Vec& x) const;

    // Minimum eigenvalue slack of every constraint in its own sense at x
    // (positive means the unshifted inequality holds).
    std::vector<std::pair<std::string, double>> slacks(const Vec& x) const;

private:
    struct Constraint {
        std::string name;
        AffineMatExpr expr;
        Sense sense;
        double margin_ref = -1.0;  // negative: use the constant term
    };

    MatVar declare(const std::string& name, VarShape shape, int rows, int cols, int count);

    std::vector<MatVar> vars_;
    std::vector<Constraint> cons_;
    AffineMatExpr objective_;
    bool has_objective_ = false;
    int next_ = 0;
};

}  // namespace ddss
