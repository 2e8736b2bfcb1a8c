// Primal-dual path-following SDP solver (HKM direction, Mehrotra predictor-corrector).
//
//   primal: min <C, X>  s.t. <A_i, X> = b_i, X >= 0
//   dual:   max b^T y   s.t. S = C - sum_i y_i A_i >= 0
//
// An LMI program min c^T x s.t. G0 + sum x_i G_i >= 0 maps to the dual with
// C = G0, A_i = -G_i, b = -c and y = x.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ddss/error.hpp"
#include "ddss/lmi.hpp"

namespace ddss {

namespace {

struct Block {
    int s = 0;
    Mat c;                 // s x s
    Mat a;                 // s x (s * t): A_1 .. A_t side by side
    std::vector<int> idx;  // decision index of each A
    double scale = 1.0;
};

using MapMat = Eigen::Map<Mat>;
using CMapMat = Eigen::Map<const Mat>;

CMapMat vec_view(const Block& b) { return CMapMat(b.a.data(), static_cast<Eigen::Index>(b.s) * b.s, b.idx.size()); }

double inner(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// Largest alpha with X + alpha dX >= 0 (infinity when dX keeps X definite).
double max_step(const Mat& x, const Mat& dx) {
    Eigen::LLT<Mat> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    Mat t = llt.matrixL().solve(dx);
    t = llt.matrixL().solve(Mat(t.transpose()));
    double lmin = Eigen::SelfAdjointEigenSolver<Mat>(symmetrize(t), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
}

class Ipm {
public:
    Ipm(const ConicProgram& prog, const SolverConfig& cfg) : cfg_(cfg), m_(prog.num_vars) {
        b_ = -prog.c;
        for (const auto& pb : prog.blocks) {
            Block blk;
            blk.s = pb.size;
            double sc = std::max(1.0, pb.g0.cwiseAbs().maxCoeff());
            for (const auto& gi : pb.g) sc = std::max(sc, gi.second.cwiseAbs().maxCoeff());
            blk.scale = 1.0 / sc;
            blk.c = pb.g0 * blk.scale;
            blk.a.resize(blk.s, static_cast<Eigen::Index>(blk.s) * pb.g.size());
            for (std::size_t k = 0; k < pb.g.size(); ++k) {
                blk.a.block(0, static_cast<Eigen::Index>(k) * blk.s, blk.s, blk.s) = -pb.g[k].second * blk.scale;
                blk.idx.push_back(pb.g[k].first);
            }
            blocks_.push_back(std::move(blk));
        }
    }

    SdpResult run();

private:
    const SolverConfig& cfg_;
    int m_;
    Vec b_;
    std::vector<Block> blocks_;
    std::vector<Mat> x_, s_, sinv_, rd_;
    Vec y_;

    Mat aty(const Block& blk, const Vec& y) const {
        Vec sub(blk.idx.size());
        for (std::size_t k = 0; k < blk.idx.size(); ++k) sub(static_cast<Eigen::Index>(k)) = y(blk.idx[k]);
        Vec v = vec_view(blk) * sub;
        return Eigen::Map<const Mat>(v.data(), blk.s, blk.s);
    }

    // Accumulates <A_i, Z> into out for block j.
    void apply_a(std::size_t j, const Mat& z, Vec& out) const {
        const Block& blk = blocks_[j];
        if (blk.idx.empty()) return;
        Vec v = vec_view(blk).transpose() * Eigen::Map<const Vec>(z.data(), z.size());
        for (std::size_t k = 0; k < blk.idx.size(); ++k) out(blk.idx[k]) += v(static_cast<Eigen::Index>(k));
    }

    struct Dir {
        Vec dy;
        std::vector<Mat> dx, ds;
    };

    Dir direction(const Eigen::LLT<Mat>& chol, const Vec& rp, const std::vector<Mat>& rc) const {
        Dir d;
        Vec rhs = rp;
        std::vector<Mat> t(blocks_.size());
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            t[j] = (rc[j] - x_[j] * rd_[j]) * sinv_[j];
            Vec tmp = Vec::Zero(m_);
            apply_a(j, t[j], tmp);
            rhs -= tmp;
        }
        d.dy = chol.solve(rhs);
        d.dx.resize(blocks_.size());
        d.ds.resize(blocks_.size());
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            d.ds[j] = rd_[j] - aty(blocks_[j], d.dy);
            d.dx[j] = symmetrize((rc[j] - x_[j] * d.ds[j]) * sinv_[j]);
        }
        return d;
    }
};

SdpResult Ipm::run() {
    SdpResult res;
    const std::size_t nb = blocks_.size();
    int nsum = 0;
    double normc = 0.0, norma = 0.0;
    for (const auto& blk : blocks_) {
        nsum += blk.s;
        normc = std::max(normc, blk.c.norm());
        norma = std::max(norma, blk.a.size() ? blk.a.cwiseAbs().maxCoeff() : 0.0);
    }
    const double normb = b_.size() ? b_.norm() : 0.0;
    const bool feasibility_only = normb == 0.0;

    x_.resize(nb);
    s_.resize(nb);
    sinv_.resize(nb);
    rd_.resize(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        const Block& blk = blocks_[j];
        double amax = 0.0;
        for (std::size_t k = 0; k < blk.idx.size(); ++k)
            amax = std::max(amax, blk.a.block(0, static_cast<Eigen::Index>(k) * blk.s, blk.s, blk.s).norm());
        double bmax = 0.0;
        for (int i : blk.idx) bmax = std::max(bmax, std::abs(b_(i)));
        const double sq = std::sqrt(static_cast<double>(blk.s));
        double xi = std::max({10.0, sq, blk.s * (1.0 + bmax) / (1.0 + amax)});
        double eta = std::max({10.0, sq, (1.0 + std::max(amax, blk.c.norm())) / sq});
        x_[j] = xi * eye(blk.s);
        s_[j] = eta * eye(blk.s);
    }
    y_ = Vec::Zero(m_);

    int stall = 0;
    double prev_score = std::numeric_limits<double>::infinity();
    double prev_pobj = 0.0;
    for (int it = 0; it < cfg_.max_iters; ++it) {
        res.iterations = it;
        Vec ax = Vec::Zero(m_);
        double pobj = 0.0, xs = 0.0, rdn = 0.0;
        for (std::size_t j = 0; j < nb; ++j) {
            rd_[j] = blocks_[j].c - s_[j] - aty(blocks_[j], y_);
            apply_a(j, x_[j], ax);
            pobj += inner(blocks_[j].c, x_[j]);
            xs += inner(x_[j], s_[j]);
            rdn += rd_[j].squaredNorm();
        }
        Vec rp = b_ - ax;
        const double dobj = b_.dot(y_);
        const double mu = xs / nsum;
        res.primal_obj = pobj;
        res.dual_obj = dobj;
        res.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        res.pinf = rp.norm() / (1.0 + normb);
        res.dinf = std::sqrt(rdn) / (1.0 + normc);
        if (cfg_.verbose)
            std::fprintf(stderr, "ipm %3d pobj %+.9e dobj %+.9e gap %.2e pinf %.2e dinf %.2e mu %.2e\n", it, pobj,
                         dobj, res.rel_gap, res.pinf, res.dinf, mu);

        if (res.rel_gap < cfg_.gap_tol && res.pinf < cfg_.feas_tol && res.dinf < cfg_.feas_tol) {
            res.kind = SdpResult::Kind::Converged;
            break;
        }
        if (feasibility_only && res.dinf < 1e-3) {
            bool ok = true;
            for (std::size_t j = 0; j < nb && ok; ++j)
                if (min_eig(blocks_[j].c - aty(blocks_[j], y_)) < 0.0) ok = false;
            if (ok) {
                res.kind = SdpResult::Kind::Converged;
                break;
            }
        }
        // X / (-<C,X>) with A(X) ~ 0 certifies that no feasible y exists.
        // X / (-<C,X>) with A(X) ~ 0 certifies that no feasible y exists; a
        // diverging primal with a small residual ratio bounds every feasible
        // y by ||y|| >= 1 / ratio.
        if (pobj < 0.0 && res.dinf > 1e-6) {
            const double ratio = ax.norm() / (-pobj);
            const bool exact = ratio < 1e-8 * (1.0 + norma);
            const bool diverging = -pobj > 1e4 * (1.0 + std::abs(dobj)) && ratio < 1e-2 * (1.0 + norma);
            if (exact || diverging) {
                res.kind = SdpResult::Kind::Infeasible;
                res.certificate_bound = ratio > 0.0 ? 1.0 / ratio : std::numeric_limits<double>::infinity();
                break;
            }
        }
        if (dobj > 1e12 * (1.0 + std::abs(pobj))) {
            res.kind = SdpResult::Kind::Unbounded;
            break;
        }

        Mat mm = Mat::Zero(m_, m_);
        bool chol_ok = true;
        for (std::size_t j = 0; j < nb; ++j) {
            const Block& blk = blocks_[j];
            Eigen::LLT<Mat> ls(s_[j]);
            if (ls.info() != Eigen::Success) {
                chol_ok = false;
                break;
            }
            sinv_[j] = symmetrize(ls.solve(eye(blk.s)));
            const auto t = static_cast<Eigen::Index>(blk.idx.size());
            if (t == 0) continue;
            Mat xa = x_[j] * blk.a;
            Mat w(blk.s, blk.s * t);
            for (Eigen::Index k = 0; k < t; ++k)
                w.block(0, k * blk.s, blk.s, blk.s).noalias() = xa.block(0, k * blk.s, blk.s, blk.s) * sinv_[j];
            Mat sub = vec_view(blk).transpose() * CMapMat(w.data(), static_cast<Eigen::Index>(blk.s) * blk.s, t);
            for (Eigen::Index p = 0; p < t; ++p)
                for (Eigen::Index q = 0; q < t; ++q) mm(blk.idx[p], blk.idx[q]) += sub(p, q);
        }
        if (!chol_ok) {
            res.kind = SdpResult::Kind::Stalled;
            break;
        }
        mm = symmetrize(mm);
        const double dmax = std::max(mm.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        Eigen::LLT<Mat> chol;
        double reg = 1e-14 * dmax;
        for (int attempt = 0; attempt < 8; ++attempt) {
            chol.compute(mm + reg * eye(m_));
            if (chol.info() == Eigen::Success) break;
            reg *= 100.0;
        }
        if (chol.info() != Eigen::Success) {
            res.kind = SdpResult::Kind::Stalled;
            break;
        }

        std::vector<Mat> rc(nb);
        for (std::size_t j = 0; j < nb; ++j) rc[j] = -x_[j] * s_[j];
        Dir pred = direction(chol, rp, rc);
        double ap = 1.0, ad = 1.0;
        for (std::size_t j = 0; j < nb; ++j) {
            ap = std::min(ap, max_step(x_[j], pred.dx[j]));
            ad = std::min(ad, max_step(s_[j], pred.ds[j]));
        }
        double xs_aff = 0.0;
        for (std::size_t j = 0; j < nb; ++j) xs_aff += inner(x_[j] + ap * pred.dx[j], s_[j] + ad * pred.ds[j]);
        double sigma = std::pow(std::max(0.0, xs_aff) / xs, 3.0);
        sigma = std::clamp(sigma, 0.0, 1.0);

        for (std::size_t j = 0; j < nb; ++j)
            rc[j] = sigma * mu * eye(blocks_[j].s) - x_[j] * s_[j] - pred.dx[j] * pred.ds[j];
        Dir corr = direction(chol, rp, rc);
        double sp = std::numeric_limits<double>::infinity(), sd = sp;
        for (std::size_t j = 0; j < nb; ++j) {
            sp = std::min(sp, max_step(x_[j], corr.dx[j]));
            sd = std::min(sd, max_step(s_[j], corr.ds[j]));
        }
        const double tau = std::clamp(0.9 + 0.09 * std::min(ap, ad), 0.9, 0.99);
        ap = std::min(1.0, tau * sp);
        ad = std::min(1.0, tau * sd);
        for (std::size_t j = 0; j < nb; ++j) {
            x_[j] += ap * corr.dx[j];
            s_[j] += ad * corr.ds[j];
            x_[j] = symmetrize(x_[j]);
            s_[j] = symmetrize(s_[j]);
        }
        y_ += ad * corr.dy;

        const double score = std::max({res.rel_gap, res.pinf, res.dinf});
        // A primal run-away is progress towards an infeasibility certificate.
        const bool primal_divergence = pobj < 0.0 && pobj < 1.1 * prev_pobj;
        prev_pobj = pobj;
        if (ap < 1e-10 && ad < 1e-10) ++stall;
        else if (score > 0.999 * prev_score && it > 30 && !primal_divergence) ++stall;
        else stall = 0;
        prev_score = std::min(prev_score, score);
        if (stall >= 8) {
            res.kind = SdpResult::Kind::Stalled;
            break;
        }
        if (it + 1 == cfg_.max_iters) res.kind = SdpResult::Kind::MaxIter;
    }
    res.x = y_;
    return res;
}

}  // namespace

SdpResult solve_sdp(const ConicProgram& prog, const SolverConfig& cfg) {
    if (prog.blocks.empty()) throw Error(ErrorKind::Input, "solve_sdp: program has no blocks");
    Ipm ipm(prog, cfg);
    return ipm.run();
}

}  // namespace ddss
