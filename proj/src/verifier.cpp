#include "ddss/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Eigenvalues>

#include "ddss/error.hpp"

namespace ddss {

std::uint64_t SplitMix::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double SplitMix::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix::uniform(double a, double b) { return a + (b - a) * uniform(); }

double SplitMix::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * uniform());
}

int SplitMix::integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }

// ---------------------------------------------------------------- spectrum

namespace {

struct Cheb {
    Vec x;  // cos(pi j / N), x(0) = 1
    Mat d;
    Vec bary;
};

Cheb chebyshev(int N) {
    Cheb c;
    c.x.resize(N + 1);
    c.bary.resize(N + 1);
    for (int j = 0; j <= N; ++j) {
        c.x(j) = std::cos(3.14159265358979323846 * j / N);
        c.bary(j) = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
    }
    // Trefethen's construction with the negative-sum trick on the diagonal.
    Vec cw(N + 1);
    for (int j = 0; j <= N; ++j) cw(j) = ((j == 0 || j == N) ? 2.0 : 1.0) * ((j % 2) ? -1.0 : 1.0);
    c.d = Mat::Zero(N + 1, N + 1);
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            if (i != j) c.d(i, j) = (cw(i) / cw(j)) / (c.x(i) - c.x(j));
    for (int i = 0; i <= N; ++i) c.d(i, i) = -c.d.row(i).sum();
    return c;
}

// Lagrange basis on the Chebyshev nodes evaluated at one point of [-1, 1].
Vec lagrange(const Cheb& c, double x) {
    const int m = static_cast<int>(c.x.size());
    Vec l(m);
    for (int j = 0; j < m; ++j)
        if (x == c.x(j)) {
            l.setZero();
            l(j) = 1.0;
            return l;
        }
    double den = 0.0;
    for (int j = 0; j < m; ++j) {
        l(j) = c.bary(j) / (x - c.x(j));
        den += l(j);
    }
    return l / den;
}

}  // namespace

std::vector<std::complex<double>> collocated_spectrum(const DelayGenerator& gen, int N) {
    const int n = gen.n;
    if (gen.r < 0.0) throw Error(ErrorKind::Input, "spectrum: history length must be non-negative");
    if (N < 2) throw Error(ErrorKind::Input, "spectrum: degree must be at least 2");
    if (gen.r == 0.0) {
        // No history: the kernel integrates over a null set and every
        // discrete delay acts on x(t).
        Mat a = gen.a0;
        for (const auto& [tau, ad] : gen.discrete) {
            if (tau != 0.0) throw Error(ErrorKind::DelayOutOfBounds, "spectrum: discrete delay outside [0, r]");
            a += ad;
        }
        Eigen::EigenSolver<Mat> es(a, false);
        std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
        std::sort(ev.begin(), ev.end(), [](const auto& x, const auto& y) {
            if (x.real() != y.real()) return x.real() > y.real();
            return x.imag() > y.imag();
        });
        return ev;
    }
    Cheb c = chebyshev(N);
    const double r = gen.r;
    Mat big = Mat::Zero((N + 1) * n, (N + 1) * n);
    big.block(0, 0, n, n) = gen.a0;

    if (gen.kernel) {
        std::vector<double> edges{-r};
        for (double b : gen.breakpoints)
            if (b > -r && b < 0.0) edges.push_back(b);
        edges.push_back(0.0);
        std::sort(edges.begin(), edges.end());
        QuadConfig qc{32, 4 + N / 8};
        for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
            if (edges[s + 1] - edges[s] <= 0.0) continue;
            // Half-open segments keep a breakpoint kernel on its right piece.
            QuadRule rule = composite_rule(edges[s], edges[s + 1], qc);
            for (int q = 0; q < static_cast<int>(rule.nodes.size()); ++q) {
                const double tau = rule.nodes[q];
                Mat kv = gen.kernel(tau);
                Vec l = lagrange(c, 2.0 * tau / r + 1.0);
                for (int k = 0; k <= N; ++k) big.block(0, k * n, n, n) += (rule.weights[q] * l(k)) * kv;
            }
        }
    }
    for (const auto& [tau, a] : gen.discrete) {
        if (tau < 0.0 || tau > r + 1e-14) throw Error(ErrorKind::DelayOutOfBounds, "spectrum: discrete delay outside [0, r]");
        Vec l = lagrange(c, -2.0 * tau / r + 1.0);
        for (int k = 0; k <= N; ++k) big.block(0, k * n, n, n) += l(k) * a;
    }
    const double scale = 2.0 / r;
    for (int j = 1; j <= N; ++j)
        for (int k = 0; k <= N; ++k)
            if (c.d(j, k) != 0.0) big.block(j * n, k * n, n, n) = (scale * c.d(j, k)) * eye(n);

    Eigen::EigenSolver<Mat> es(big, false);
    if (es.info() != Eigen::Success) throw Error(ErrorKind::NonConvergent, "spectrum: eigenvalue iteration failed");
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return ev;
}

SpectrumResult spectral_abscissa(const DelayGenerator& gen, const SpectrumOptions& opts) {
    int N = std::max(2, opts.n_start);
    std::vector<std::complex<double>> prev = collocated_spectrum(gen, N);
    while (2 * N <= opts.n_max) {
        N *= 2;
        std::vector<std::complex<double>> cur = collocated_spectrum(gen, N);
        const double change = std::abs(cur.front().real() - prev.front().real());
        if (change <= opts.tol) {
            SpectrumResult res;
            res.abscissa = cur.front().real();
            res.n = N;
            res.change = change;
            for (int i = 0; i < opts.leading && i < static_cast<int>(cur.size()); ++i) res.leading.push_back(cur[i]);
            return res;
        }
        prev = std::move(cur);
    }
    throw Error(ErrorKind::NonConvergent, "spectrum: abscissa not converged to " + std::to_string(opts.tol) +
                                              " by N = " + std::to_string(opts.n_max));
}

DelayGenerator closed_loop_generator(const DelaySystem& sys, const Mat& k, double r_const) {
    sys.validate();
    if (r_const < sys.r1 - 1e-12 || r_const > sys.r2 + 1e-12)
        throw Error(ErrorKind::DelayOutOfBounds, "spectrum: constant delay " + std::to_string(r_const) + " outside [" +
                                                     std::to_string(sys.r1) + ", " + std::to_string(sys.r2) + "]");
    if (k.rows() != sys.p || k.cols() != sys.n) throw Error(ErrorKind::Dimension, "spectrum: gain must be p x n");
    DelayGenerator gen;
    gen.n = sys.n;
    gen.a0 = sys.a1 + (sys.p > 0 ? Mat(sys.b1 * k) : zeros(sys.n, sys.n));
    gen.r = r_const;
    if (sys.r1 > 0.0 && sys.r1 < r_const) gen.breakpoints.push_back(-sys.r1);
    gen.kernel = [sys, k](double tau) { return closed_state_kernel(sys, k, tau); };
    return gen;
}

SpectrumResult spectral_abscissa(const DelaySystem& sys, const Mat& k, double r_const, const SpectrumOptions& opts) {
    return spectral_abscissa(closed_loop_generator(sys, k, r_const), opts);
}

// -------------------------------------------------------------- functional

FunctionalEvaluator FunctionalEvaluator::make(const SynthesisContext& ctx, const Certificate& cert, const QuadConfig& quad) {
    FunctionalEvaluator ev;
    ev.sys = ctx.sys;
    ev.cert = cert;
    ev.sqrt_f1_inv = ctx.geo1.sqrt_f_inv;
    ev.sqrt_f2_inv = ctx.geo2.sqrt_f_inv;
    ev.quad = quad;
    return ev;
}

Vec FunctionalEvaluator::eta(const std::function<Vec(double)>& x, double t) const {
    const int n = sys.n, d1 = sys.d1n(), d2 = sys.d2n();
    Vec out = Vec::Zero(n + (d1 + d2) * n);
    out.head(n) = x(t);
    auto segment = [&](const KernelBasis& b, const Mat& s, int offset) {
        if (b.d() == 0 || !(b.b > b.a)) return;
        QuadRule rule = composite_rule(b.a, b.b, quad);
        for (int q = 0; q < static_cast<int>(rule.nodes.size()); ++q) {
            const double tau = rule.nodes[q];
            Vec g = s * b.f_at(tau);
            Vec xv = x(t + tau);
            for (int i = 0; i < b.d(); ++i) out.segment(offset + i * n, n) += rule.weights[q] * g(i) * xv;
        }
    };
    segment(sys.basis1, sqrt_f1_inv, n);
    segment(sys.basis2, sqrt_f2_inv, n + d1 * n);
    return out;
}

double FunctionalEvaluator::operator()(const std::function<Vec(double)>& x, double t) const {
    const int n = sys.n;
    const int e = static_cast<int>(cert.p2.cols());
    Mat pbig(n + e, n + e);
    pbig << cert.p1, cert.p2, cert.p2.transpose(), cert.p3;
    Vec h = eta(x, t);
    double v = h.dot(pbig * h);
    auto tail = [&](double a, double b, const Mat& qm, const Mat& rm, double shift) {
        if (!(b > a)) return 0.0;
        QuadRule rule = composite_rule(a, b, quad);
        double acc = 0.0;
        for (int q = 0; q < static_cast<int>(rule.nodes.size()); ++q) {
            const double tau = rule.nodes[q];
            Vec xv = x(t + tau);
            acc += rule.weights[q] * xv.dot((qm + (tau + shift) * rm) * xv);
        }
        return acc;
    };
    v += tail(-sys.r1, 0.0, cert.q1, cert.r1m, sys.r1);
    v += tail(-sys.r2, -sys.r1, cert.q2, cert.r2m, sys.r2);
    return v;
}

std::function<Vec(double)> trajectory_lookup(const Trajectory& traj, const std::vector<Expr>& history, double t0) {
    return [&traj, &history, t0](double s) -> Vec {
        const int n = static_cast<int>(traj.x.rows());
        if (s < t0 || traj.samples() < 2) {
            Vec v(n);
            for (int i = 0; i < n; ++i) v(i) = history[i].eval(std::min(s - t0, 0.0));
            return v;
        }
        const double h = traj.t(1) - traj.t(0);
        double pos = (s - traj.t(0)) / h;
        long i0 = static_cast<long>(std::floor(pos));
        const long last = traj.samples() - 1;
        if (i0 >= last) return traj.x.col(last);
        double frac = pos - static_cast<double>(i0);
        return (1.0 - frac) * traj.x.col(i0) + frac * traj.x.col(i0 + 1);
    };
}

SupplyCheck empirical_supply_check(const Trajectory& traj, const SupplyRate& supply, double gamma,
                                   const FunctionalEvaluator& ev, const std::vector<Expr>& history, int stride) {
    SupplyCheck out;
    const int ns = traj.samples();
    if (ns < 2) return out;
    stride = std::max(1, stride);
    auto lookup = trajectory_lookup(traj, history, traj.t(0));
    Vec s(ns), cum(ns);
    for (int j = 0; j < ns; ++j) s(j) = supply.eval(traj.z.col(j), traj.w.col(j), gamma);
    cum(0) = 0.0;
    for (int j = 1; j < ns; ++j) cum(j) = cum(j - 1) + 0.5 * (traj.t(j) - traj.t(j - 1)) * (s(j) + s(j - 1));

    std::vector<int> idx;
    for (int j = 0; j < ns; j += stride) idx.push_back(j);
    if (idx.back() != ns - 1) idx.push_back(ns - 1);
    out.t.resize(idx.size());
    out.v.resize(idx.size());
    out.supply_integral.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.t(i) = traj.t(idx[i]);
        out.v(i) = ev(lookup, out.t(i));
        out.supply_integral(i) = cum(idx[i]);
        out.peak_v = std::max(out.peak_v, std::abs(out.v(i)));
    }
    // Relative slack plus a step-size term; the dissipation inequality is
    // exact only in continuous time.
    out.slack = (1e-3 + 10.0 * traj.dt) * out.peak_v;
    out.max_increment = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < idx.size(); ++i) {
        const double inc = (out.v(i) - out.v(i - 1)) - (cum(idx[i]) - cum(idx[i - 1]));
        if (inc > out.max_increment) {
            out.max_increment = inc;
            out.at = out.t(i);
        }
    }
    out.pass = out.max_increment <= out.slack;
    return out;
}

// ---------------------------------------------------- integral inequalities

namespace {

// Random smooth scalar function on [a, b] from a small dictionary.
struct RandFn {
    double c0, c1, c2, amp, omega, phase, ea, ec;
    double operator()(double t) const {
        return c0 + c1 * t + c2 * t * t + amp * std::sin(omega * t + phase) + ec * std::exp(ea * t);
    }
};

RandFn rand_fn(SplitMix& rng) {
    RandFn f;
    f.c0 = rng.normal();
    f.c1 = rng.normal();
    f.c2 = 0.5 * rng.normal();
    f.amp = rng.normal();
    f.omega = rng.uniform(0.5, 6.0);
    f.phase = rng.uniform(0.0, 6.283185307179586);
    f.ea = rng.uniform(-1.5, 1.5);
    f.ec = 0.5 * rng.normal();
    return f;
}

double rel(double diff, double scale) { return diff / std::max(scale, std::numeric_limits<double>::min()); }

}  // namespace

SplitExample split_bound_example() {
    // Gauss-Legendre integrates these polynomials exactly.
    QuadConfig qc{8, 1};
    QuadRule all = composite_rule(0.0, 1.0, qc), lo = composite_rule(0.0, 0.5, qc), hi = composite_rule(0.5, 1.0, qc);
    auto integ = [](const QuadRule& r, auto fn) {
        double s = 0.0;
        for (int i = 0; i < static_cast<int>(r.nodes.size()); ++i) s += r.weights[i] * fn(r.nodes[i]);
        return s;
    };
    SplitExample ex;
    ex.lhs = integ(all, [](double t) { return t * t; });
    const double full = integ(all, [](double t) { return t; });
    ex.single_bound = full * full;
    const double a = integ(hi, [](double t) { return t; }), b = integ(lo, [](double t) { return t; });
    ex.split_first = a * a;
    ex.split_second = b * b;
    return ex;
}

InequalityReport check_integral_inequalities(int trials, std::uint64_t seed) {
    if (trials < 1) throw Error(ErrorKind::Input, "check: trials must be at least 1");
    InequalityReport rep;
    rep.trials = trials;
    rep.seed = seed;
    rep.b2_worst = rep.b5_worst = std::numeric_limits<double>::infinity();
    const QuadConfig qc{24, 8};
    for (int trial = 0; trial < trials; ++trial) {
        SplitMix rng(seed * 0x100000001B3ULL + static_cast<std::uint64_t>(trial) + 1);
        const int n = rng.integer(1, 3), d = rng.integer(1, 4);
        const double a = rng.uniform(0.0, 1.0), b = a + rng.uniform(0.3, 2.0);
        double split = rng.uniform(a, b);
        const double pick = rng.uniform();
        if (pick < 0.1) split = a;
        else if (pick < 0.2) split = b;
        const double wc = rng.uniform(-1.0, 1.0);
        auto weight = [wc](double t) { return std::exp(wc * t); };

        QuadRule lo = composite_rule(a, split, qc), hi = composite_rule(split, b, qc);
        auto nodes_of = [&](const QuadRule& r, std::vector<double>& t, std::vector<double>& w) {
            for (int i = 0; i < static_cast<int>(r.nodes.size()); ++i) {
                t.push_back(r.nodes[i]);
                w.push_back(r.weights[i] * weight(r.nodes[i]));
            }
        };
        std::vector<double> tl, wl, th, wh;
        if (split > a) nodes_of(lo, tl, wl);
        if (split < b) nodes_of(hi, th, wh);

        // A basis with a well-conditioned weighted Gram.
        std::vector<RandFn> f;
        Mat gram;
        for (int attempt = 0;; ++attempt) {
            f.clear();
            for (int i = 0; i < d; ++i) f.push_back(rand_fn(rng));
            gram = Mat::Zero(d, d);
            auto acc = [&](const std::vector<double>& t, const std::vector<double>& w) {
                for (std::size_t q = 0; q < t.size(); ++q) {
                    Vec fv(d);
                    for (int i = 0; i < d; ++i) fv(i) = f[i](t[q]);
                    gram += w[q] * fv * fv.transpose();
                }
            };
            acc(tl, wl);
            acc(th, wh);
            if (min_eig(gram) > 1e-6 * max_eig(gram)) break;
            if (attempt > 50) throw Error(ErrorKind::Domain, "check: could not draw a basis with a regular Gram matrix");
        }
        std::vector<RandFn> xs;
        for (int i = 0; i < n; ++i) xs.push_back(rand_fn(rng));

        const int rank = rng.integer(1, n);
        Mat lf(n, rank);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < rank; ++j) lf(i, j) = rng.normal();
        Mat u = lf * lf.transpose();
        Mat sm(rank, rank);
        for (int i = 0; i < rank; ++i)
            for (int j = 0; j < rank; ++j) sm(i, j) = rng.normal();
        Mat y = lf * sm * lf.transpose();
        Mat w2(2 * n, 2 * n);
        for (int shrink = 0;; ++shrink) {
            w2 << u, y, y.transpose(), u;
            if (min_eig(w2) >= -1e-12 * std::max(1.0, max_eig(w2)) || shrink > 200) break;
            y *= 0.8;
        }

        // Moments over the two pieces.
        double lhs = 0.0;
        Vec v_lo = Vec::Zero(d * n), v_hi = Vec::Zero(d * n);  // (f kron I_n) x
        auto moments = [&](const std::vector<double>& t, const std::vector<double>& w, Vec& v) {
            for (std::size_t q = 0; q < t.size(); ++q) {
                Vec xv(n), fv(d);
                for (int i = 0; i < n; ++i) xv(i) = xs[i](t[q]);
                for (int i = 0; i < d; ++i) fv(i) = f[i](t[q]);
                lhs += w[q] * xv.dot(u * xv);
                v += w[q] * kron(Mat(fv), eye(n)) * xv;
            }
        };
        moments(tl, wl, v_lo);
        moments(th, wh, v_hi);
        const Mat finv = inv_sqrt_spd(gram) * inv_sqrt_spd(gram);

        Vec v_all = v_lo + v_hi;
        const double rhs2 = v_all.dot(kron(finv, u) * v_all);
        const double m2 = rel(lhs - rhs2, std::max(std::abs(lhs), std::abs(rhs2)));
        rep.b2_worst = std::min(rep.b2_worst, m2);
        if (m2 < -1e-8) ++rep.b2_fail;

        // First form: (I_n kron f) moments against W kron F^-1.
        const Mat k_nd = commutation_matrix(n, d), k_dn = commutation_matrix(d, n);
        Vec s1(2 * d * n);
        s1 << k_nd * v_hi, k_nd * v_lo;
        const double rhs5 = s1.dot(kron(w2, finv) * s1);
        // Second form: (f kron I_n) moments against the commutation congruence.
        Vec s2(2 * d * n);
        s2 << v_hi, v_lo;
        const Mat kl = dsum(k_dn, k_dn), kr = dsum(k_nd, k_nd);
        const double rhs5b = s2.dot(kl * kron(w2, finv) * kr * s2);
        const double scale = std::max({std::abs(lhs), std::abs(rhs5), std::abs(rhs5b)});
        const double m5 = rel(lhs - rhs5, scale);
        rep.b5_worst = std::min(rep.b5_worst, m5);
        if (m5 < -1e-8) ++rep.b5_fail;
        const double diff = rel(std::abs(rhs5 - rhs5b), scale);
        rep.forms_max_diff = std::max(rep.forms_max_diff, diff);
        if (diff > 1e-10) ++rep.forms_fail;
    }
    return rep;
}

IdentityReport check_kronecker_identities(int trials, std::uint64_t seed, double tol) {
    IdentityReport rep;
    rep.trials = trials;
    double w1 = 0.0, w2 = 0.0, w3a = 0.0, w3b = 0.0, w4 = 0.0;
    auto randm = [](SplitMix& rng, int r, int c) {
        Mat m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
        return m;
    };
    auto err = [](const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()); };
    for (int trial = 0; trial < trials; ++trial) {
        SplitMix rng(seed ^ (0xA5A5A5A5ULL + static_cast<std::uint64_t>(trial) * 0x9E3779B97F4A7C15ULL));
        const int n = rng.integer(1, 4), m = rng.integer(1, 4), p = rng.integer(1, 4), q = rng.integer(1, 4),
                  r = rng.integer(1, 4), d = rng.integer(1, 4), dl = rng.integer(1, 4);
        Mat x = randm(rng, n, m), y = randm(rng, m, p), z = randm(rng, q, r);
        // (X kron I)(Y kron Z) = XY kron Z = (X kron Z)(Y kron I).
        Mat lhs = kron(x, eye(q)) * kron(y, z);
        w1 = std::max({w1, err(lhs, kron(Mat(x * y), z)), err(kron(x, z) * kron(y, eye(r)), kron(Mat(x * y), z))});
        // Block kron.
        Mat a = randm(rng, n, m), b = randm(rng, n, p), c = randm(rng, q, m), dd = randm(rng, q, p), xx = randm(rng, r, d);
        Mat blk(n + q, m + p);
        blk << a, b, c, dd;
        Mat expect(blk.rows() * r, blk.cols() * d);
        expect << kron(a, xx), kron(b, xx), kron(c, xx), kron(dd, xx);
        w2 = std::max(w2, err(kron(blk, xx), expect));
        // K(n,d) (X kron Y) K(delta,m) = Y kron X with X d x delta, Y n x m.
        Mat xa = randm(rng, d, dl), yb = randm(rng, n, m);
        w3a = std::max(w3a, err(commutation_matrix(n, d) * kron(xa, yb) * commutation_matrix(dl, m), kron(yb, xa)));
        Mat kk = commutation_matrix(n, m);
        w3b = std::max({w3b, err(kk.transpose(), commutation_matrix(m, n)), err(kk * commutation_matrix(m, n), eye(n * m))});
        Mat av = randm(rng, n, d);
        w3b = std::max(w3b, err(commutation_matrix(n, d) * Mat(vec(av)), Mat(vec(Mat(av.transpose())))));
        // K(n,d) (f kron I_n) = I_n kron f.
        Mat f = randm(rng, d, 1);
        w4 = std::max(w4, err(commutation_matrix(n, d) * kron(f, eye(n)), kron(eye(n), f)));
    }
    rep.per_identity = {{"mixed_product", w1}, {"block_kron", w2}, {"commutation_swap", w3a},
                        {"commutation_inverse", w3b}, {"commutation_vector", w4}};
    for (const auto& [name, w] : rep.per_identity) rep.worst = std::max(rep.worst, w);
    rep.pass = rep.worst <= tol;
    return rep;
}

Mat gram_oracle(const KernelBasis& basis, int panels) {
    const int k = basis.kappa();
    auto simpson = [&](int np) {
        const double h = (basis.b - basis.a) / np;
        Mat acc = Mat::Zero(k, k);
        for (int i = 0; i <= 2 * np; ++i) {
            const double w = (i == 0 || i == 2 * np) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            Vec f = basis.fhat_at(basis.a + 0.5 * h * i);
            acc += w * f * f.transpose();
        }
        return Mat(acc * (h / 6.0));
    };
    Mat coarse = simpson(panels), fine = simpson(2 * panels);
    return fine + (fine - coarse) / 15.0;
}

CheckReport check_geometry(const KernelBasis& basis, const QuadConfig& quad, double tol) {
    CheckReport rep;
    rep.name = "gram_geometry";
    if (basis.empty() || !(basis.b > basis.a)) {
        rep.detail = "empty basis";
        return rep;
    }
    BasisGeometry geo = compute_geometry(basis, quad);
    Mat oracle = gram_oracle(basis);
    rep.worst = (geo.g - oracle).cwiseAbs().maxCoeff();
    rep.pass = rep.worst <= tol;
    if (geo.g_numerically_singular) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "Gram numerically singular (eigenvalue ratio %.3g)", geo.g_eig_ratio);
        rep.detail = buf;
    }
    return rep;
}

CrossCheck cross_check_thm2(const SynthesisContext& ctx, const Thm2Solution& sol, const AnalysisOptions& opts) {
    CrossCheck cc;
    if (ctx.p == 0) {
        cc.applicable = false;
        cc.message = "the system has no inputs; run analyze (Theorem 1) instead";
        return cc;
    }
    if (!sol.outcome.feasible() || sol.k.size() == 0) {
        cc.applicable = false;
        cc.message = "no feasible Theorem 2 solution to check";
        return cc;
    }
    AnalysisResult a = analyze(ctx, sol.k, opts);
    cc.status = a.status;
    cc.feasible = a.outcome.feasible();
    cc.thm2_gamma = sol.gamma.value_or(0.0);
    cc.thm1_gamma = a.cert.gamma.value_or(0.0);
    cc.gamma_consistent = !ctx.supply.gamma_mode || cc.thm1_gamma <= cc.thm2_gamma * (1.0 + 1e-6) + 1e-9;
    cc.message = cc.feasible ? "Theorem 1 feasible with the recovered gain" : "Theorem 1 not feasible with the recovered gain";
    return cc;
}

}  // namespace ddss
