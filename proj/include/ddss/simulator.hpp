#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ddss/expr.hpp"
#include "ddss/model.hpp"

namespace ddss {

struct SimConfig {
    double t0 = 0.0;
    double t_end = 20.0;
    double dt = 1e-4;
    int kernel_nodes = 200;
    Expr delay_expr;
    std::vector<Expr> disturbance_exprs;
    // w is zeroed from this time on (a step window u(t) - u(t - T)).
    std::optional<double> disturbance_until;
    std::vector<Expr> history_exprs;  // functions of theta in [-r2, 0]
    int record_every = 1;
};

struct Trajectory {
    Vec t;
    Mat x, u, z, w;  // one column per recorded step
    Vec r;
    double dt = 0.0;

    int samples() const { return static_cast<int>(t.size()); }
};

// State samples on the fundamental grid over the last r2 seconds, with the
// initial function answering queries before t0.
class History {
public:
    History(int n, double t0, double dt, double span, std::vector<Expr> initial);
    void push(const Vec& x);  // state at t0 + count * dt
    Vec at(double s) const;   // linear interpolation
    double latest_time() const;

private:
    int n_;
    double t0_, dt_;
    std::vector<Expr> initial_;
    std::vector<Vec> ring_;
    long count_ = 0;
};

// Value of F(tau) at n_nodes + 1 trapezoid nodes over [-r2, 0].
struct KernelTable {
    double r2 = 0.0;
    Vec nodes;
    std::vector<Mat> values;
};

KernelTable tabulate(const std::function<Mat(double)>& kernel, double r2, int intervals);

// Composite trapezoid of F(tau) x(t + tau) over the fixed grid on [-r2, 0],
// with the integrand zeroed below -r_t.
Vec kernel_quadrature(const KernelTable& table, double r_t, const std::function<Vec(double)>& lookup, double t);

// Closed-loop kernels tau -> Atilde(tau) + Btilde(tau) K and the output analogue.
Mat closed_state_kernel(const DelaySystem& sys, const Mat& k, double tau);
Mat closed_output_kernel(const DelaySystem& sys, const Mat& k, double tau);

Vec disturbance_at(const SimConfig& cfg, int q, double t);

Trajectory simulate(const DelaySystem& sys, const Mat& k, const SimConfig& cfg);

// Columns t, x1..xn, u1..up, z1..zm, w1..wq, r.
void write_csv(const Trajectory& traj, std::ostream& out);

}  // namespace ddss
