#include "ddss/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ddss/error.hpp"

namespace ddss {

History::History(int n, double t0, double dt, double span, std::vector<Expr> initial)
    : n_(n), t0_(t0), dt_(dt), initial_(std::move(initial)) {
    if (static_cast<int>(initial_.size()) != n_)
        throw Error(ErrorKind::Dimension, "history: need one initial expression per state");
    ring_.assign(static_cast<std::size_t>(std::ceil(span / dt)) + 3, Vec::Zero(n));
}

void History::push(const Vec& x) {
    ring_[static_cast<std::size_t>(count_ % static_cast<long>(ring_.size()))] = x;
    ++count_;
}

double History::latest_time() const { return t0_ + (count_ - 1) * dt_; }

Vec History::at(double s) const {
    if (s < t0_ || count_ == 0) {
        Vec v(n_);
        for (int i = 0; i < n_; ++i) v(i) = initial_[i].eval(std::min(s - t0_, 0.0));
        return v;
    }
    const double pos = (s - t0_) / dt_;
    long i0 = static_cast<long>(std::floor(pos));
    double frac = pos - static_cast<double>(i0);
    if (i0 >= count_ - 1) {
        i0 = count_ - 1;
        frac = 0.0;
    }
    const long size = static_cast<long>(ring_.size());
    if (i0 < count_ - size + 1) throw Error(ErrorKind::DelayOutOfBounds, "history: lookup older than the buffer");
    const Vec& a = ring_[static_cast<std::size_t>(i0 % size)];
    if (frac <= 0.0) return a;
    const Vec& b = ring_[static_cast<std::size_t>((i0 + 1) % size)];
    return (1.0 - frac) * a + frac * b;
}

KernelTable tabulate(const std::function<Mat(double)>& kernel, double r2, int intervals) {
    if (intervals < 1) throw Error(ErrorKind::Input, "kernel quadrature needs at least one interval");
    KernelTable tab;
    tab.r2 = r2;
    tab.nodes = Vec::LinSpaced(intervals + 1, -r2, 0.0);
    tab.values.reserve(intervals + 1);
    for (int j = 0; j <= intervals; ++j) tab.values.push_back(kernel(tab.nodes(j)));
    return tab;
}

Vec kernel_quadrature(const KernelTable& table, double r_t, const std::function<Vec(double)>& lookup, double t) {
    if (r_t < -1e-12 || r_t > table.r2 + 1e-12)
        throw Error(ErrorKind::DelayOutOfBounds, "kernel quadrature: delay " + std::to_string(r_t) + " outside [0, r2]");
    const int last = static_cast<int>(table.nodes.size()) - 1;
    const double h = last > 0 ? table.r2 / last : 0.0;
    Vec acc = Vec::Zero(table.values.front().rows());
    if (last == 0) return acc;
    for (int j = 0; j <= last; ++j) {
        const double tau = table.nodes(j);
        if (tau < -r_t) continue;
        const double w = (j == 0 || j == last) ? 0.5 * h : h;
        acc.noalias() += w * (table.values[j] * lookup(t + tau));
    }
    return acc;
}

namespace {

bool on_first_segment(const DelaySystem& sys, double tau) { return tau >= -sys.r1 && !sys.basis1.empty(); }

Mat expand(const Mat& coeff, const Vec& fhat, int width) {
    if (coeff.size() == 0) return Mat::Zero(coeff.rows(), width);
    return coeff * kron(Mat(fhat), eye(width));
}

}  // namespace

Mat closed_state_kernel(const DelaySystem& sys, const Mat& k, double tau) {
    const bool first = on_first_segment(sys, tau);
    const KernelBasis& b = first ? sys.basis1 : sys.basis2;
    if (b.empty()) return Mat::Zero(sys.n, sys.n);
    Vec fh = b.fhat_at(tau);
    Mat a = expand(first ? sys.a2 : sys.a3, fh, sys.n);
    if (sys.p > 0) a += expand(first ? sys.b2k : sys.b3k, fh, sys.p) * k;
    return a;
}

Mat closed_output_kernel(const DelaySystem& sys, const Mat& k, double tau) {
    const bool first = on_first_segment(sys, tau);
    const KernelBasis& b = first ? sys.basis1 : sys.basis2;
    if (b.empty()) return Mat::Zero(sys.m, sys.n);
    Vec fh = b.fhat_at(tau);
    Mat c = expand(first ? sys.c2 : sys.c3, fh, sys.n);
    if (sys.p > 0) c += expand(first ? sys.b5k : sys.b6k, fh, sys.p) * k;
    return c;
}

Vec disturbance_at(const SimConfig& cfg, int q, double t) {
    Vec w = Vec::Zero(q);
    if (cfg.disturbance_until && t >= *cfg.disturbance_until) return w;
    for (int i = 0; i < q && i < static_cast<int>(cfg.disturbance_exprs.size()); ++i) w(i) = cfg.disturbance_exprs[i].eval(t);
    return w;
}

Trajectory simulate(const DelaySystem& sys, const Mat& k, const SimConfig& cfg) {
    sys.validate();
    const int n = sys.n, p = sys.p, m = sys.m, q = sys.q;
    if (k.rows() != p || k.cols() != n) throw Error(ErrorKind::Dimension, "simulate: gain must be p x n");
    if (!(cfg.dt > 0.0)) throw Error(ErrorKind::Input, "simulate: dt must be positive");
    if (cfg.kernel_nodes < 2) throw Error(ErrorKind::Input, "simulate: kernel_nodes must be at least 2");
    if (!(cfg.t_end > cfg.t0)) throw Error(ErrorKind::Input, "simulate: t_end must exceed t0");
    if (static_cast<int>(cfg.history_exprs.size()) != n)
        throw Error(ErrorKind::Dimension, "simulate: need " + std::to_string(n) + " history expressions");
    if (static_cast<int>(cfg.disturbance_exprs.size()) != q && !cfg.disturbance_exprs.empty())
        throw Error(ErrorKind::Dimension, "simulate: need " + std::to_string(q) + " disturbance expressions");
    const int every = std::max(1, cfg.record_every);

    KernelTable ka = tabulate([&](double tau) { return closed_state_kernel(sys, k, tau); }, sys.r2, cfg.kernel_nodes);
    KernelTable kc = tabulate([&](double tau) { return closed_output_kernel(sys, k, tau); }, sys.r2, cfg.kernel_nodes);
    const Mat a_cl = sys.a1 + (p > 0 ? Mat(sys.b1 * k) : zeros(n, n));
    const Mat c_cl = sys.c1 + (p > 0 ? Mat(sys.b4 * k) : zeros(m, n));

    const long steps = static_cast<long>(std::llround((cfg.t_end - cfg.t0) / cfg.dt));
    const long recorded = steps / every + (steps % every != 0 ? 2 : 1);
    Trajectory tr;
    tr.dt = cfg.dt;
    tr.t.resize(recorded);
    tr.x.resize(n, recorded);
    tr.u.resize(p, recorded);
    tr.z.resize(m, recorded);
    tr.w.resize(q, recorded);
    tr.r.resize(recorded);

    History hist(n, cfg.t0, cfg.dt, sys.r2, cfg.history_exprs);
    auto lookup = [&](double s) { return hist.at(s); };
    auto delay_at = [&](double t) {
        double r = cfg.delay_expr.eval(t);
        if (!std::isfinite(r) || r < sys.r1 - 1e-12 || r > sys.r2 + 1e-12) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "delay r(t) = %.9g at t = %.9g is outside [%.9g, %.9g]", r, t, sys.r1, sys.r2);
            throw Error(ErrorKind::DelayOutOfBounds, buf);
        }
        return std::clamp(r, sys.r1, sys.r2);
    };

    Vec x = hist.at(cfg.t0);
    long slot = 0;
    for (long i = 0; i <= steps; ++i) {
        const double t = cfg.t0 + static_cast<double>(i) * cfg.dt;
        hist.push(x);
        if (!x.allFinite()) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "state became non-finite at t = %.9g", t);
            throw Error(ErrorKind::NonFiniteState, buf);
        }
        const double r = delay_at(t);
        const Vec w0 = disturbance_at(cfg, q, t);
        if (i % every == 0 || i == steps) {
            tr.t(slot) = t;
            tr.x.col(slot) = x;
            if (p > 0) tr.u.col(slot) = k * x;
            tr.z.col(slot) = c_cl * x + kernel_quadrature(kc, r, lookup, t) + sys.d2 * w0;
            tr.w.col(slot) = w0;
            tr.r(slot) = r;
            ++slot;
        }
        if (i == steps) break;
        const Vec dist = kernel_quadrature(ka, r, lookup, t);
        const double h = cfg.dt;
        auto f = [&](const Vec& s, double ts) -> Vec { return a_cl * s + dist + sys.d1 * disturbance_at(cfg, q, ts); };
        Vec k1 = a_cl * x + dist + sys.d1 * w0;
        Vec k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
        Vec k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
        Vec k4 = f(x + h * k3, t + h);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    tr.t.conservativeResize(slot);
    tr.x.conservativeResize(Eigen::NoChange, slot);
    tr.u.conservativeResize(Eigen::NoChange, slot);
    tr.z.conservativeResize(Eigen::NoChange, slot);
    tr.w.conservativeResize(Eigen::NoChange, slot);
    tr.r.conservativeResize(slot);
    return tr;
}

void write_csv(const Trajectory& tr, std::ostream& out) {
    out << "t";
    for (int i = 0; i < tr.x.rows(); ++i) out << ",x" << i + 1;
    for (int i = 0; i < tr.u.rows(); ++i) out << ",u" << i + 1;
    for (int i = 0; i < tr.z.rows(); ++i) out << ",z" << i + 1;
    for (int i = 0; i < tr.w.rows(); ++i) out << ",w" << i + 1;
    out << ",r\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10g", v);
        out << buf;
    };
    for (int j = 0; j < tr.samples(); ++j) {
        put(tr.t(j));
        for (const Mat* m : {&tr.x, &tr.u, &tr.z, &tr.w})
            for (int i = 0; i < m->rows(); ++i) {
                out << ',';
                put((*m)(i, j));
            }
        out << ',';
        put(tr.r(j));
        out << '\n';
    }
}

}  // namespace ddss
