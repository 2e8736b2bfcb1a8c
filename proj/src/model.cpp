#include "ddss/model.hpp"

#include <cmath>
#include <string>

#include "ddss/error.hpp"

namespace ddss {

const char* regime_name(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::Interior: return "interior";
        case RegimeKind::LowerZero: return "lower_zero";
        case RegimeKind::Point: return "point";
    }
    return "?";
}

Mat Regime::one_marker(int n) const { return has_x_r2 ? eye(n) : Mat(0, n); }

Mat Regime::one_hat_marker(int n) const { return has_x_r1 ? eye(n) : Mat(0, n); }

Regime classify_regime(double r1, double r2) {
    if (!(r2 > 0.0) || r1 < 0.0 || r1 > r2)
        throw Error(ErrorKind::InvalidDelayBounds,
                    "delay bounds must satisfy r2 > 0 and 0 <= r1 <= r2 (got r1 = " +
                        std::to_string(r1) + ", r2 = " + std::to_string(r2) + ")");
    Regime reg;
    if (r1 == 0.0) {
        reg.kind = RegimeKind::LowerZero;
        reg.has_x_r1 = false;
    } else if (r1 == r2) {
        reg.kind = RegimeKind::Point;
        reg.has_x_r2 = false;
    }
    reg.three_hat = 1 + (reg.has_x_r1 ? 1 : 0) + (reg.has_x_r2 ? 1 : 0);
    return reg;
}

ChiLayout ChiLayout::from_sizes(const std::array<int, kChiBlocks>& sizes) {
    ChiLayout l;
    l.size = sizes;
    int off = 0;
    for (int i = 0; i < kChiBlocks; ++i) {
        l.offset[i] = off;
        off += sizes[i];
    }
    l.total = off;
    return l;
}

namespace {

void expect_shape(const Mat& m, int rows, int cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
        throw Error(ErrorKind::Dimension, std::string("system field '") + name + "' is " +
                                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                              ", expected " + std::to_string(rows) + "x" +
                                              std::to_string(cols));
}

}  // namespace

void DelaySystem::validate() const {
    if (n <= 0) throw Error(ErrorKind::Dimension, "system: n must be positive");
    if (m < 0 || p < 0 || q < 0) throw Error(ErrorKind::Dimension, "system: negative dimension");
    Regime reg = classify_regime(r1, r2);
    if (reg.kind == RegimeKind::LowerZero && !basis1.empty())
        throw Error(ErrorKind::Input, "system: r1 = 0 requires an empty basis on [-r1, 0]");
    if (reg.kind == RegimeKind::Point && !basis2.empty())
        throw Error(ErrorKind::Input, "system: r1 = r2 requires an empty basis on [-r2, -r1]");
    if (d1n() + d2n() == 0)
        throw Error(ErrorKind::Input, "system: at least one basis needs f functions (d1 + d2 > 0)");
    const int k1 = kappa1(), k2 = kappa2();
    expect_shape(a1, n, n, "a1");
    expect_shape(b1, n, p, "b1");
    expect_shape(d1, n, q, "d1");
    expect_shape(c1, m, n, "c1");
    expect_shape(b4, m, p, "b4");
    expect_shape(d2, m, q, "d2");
    expect_shape(a2, n, k1 * n, "a2");
    expect_shape(a3, n, k2 * n, "a3");
    expect_shape(b2k, n, k1 * p, "b2");
    expect_shape(b3k, n, k2 * p, "b3");
    expect_shape(c2, m, k1 * n, "c2");
    expect_shape(c3, m, k2 * n, "c3");
    expect_shape(b5k, m, k1 * p, "b5");
    expect_shape(b6k, m, k2 * p, "b6");
    if (basis1.d() > 0 || basis1.delta() > 0) {
        expect_shape(basis1.m, basis1.d(), basis1.kappa(), "M1");
    }
    if (basis2.d() > 0 || basis2.delta() > 0) {
        expect_shape(basis2.m, basis2.d(), basis2.kappa(), "M2");
    }
}

DelaySystem DelaySystem::with_delays(double new_r1, double new_r2) const {
    DelaySystem s = *this;
    s.r1 = new_r1;
    s.r2 = new_r2;
    s.basis1.a = -new_r1;
    s.basis1.b = 0.0;
    s.basis2.a = -new_r2;
    s.basis2.b = -new_r1;
    return s;
}

ChiLayout chi_layout(const DelaySystem& sys, int unit, int w, bool interior_form) {
    Regime reg = sys.regime();
    bool r1_block = interior_form || reg.has_x_r1;
    bool r2_block = interior_form || reg.has_x_r2;
    return ChiLayout::from_sizes({r1_block ? unit : 0, r2_block ? unit : 0, unit,
                                  sys.kappa1() * unit, sys.kappa2() * unit, sys.kappa2() * unit, w});
}

Mat regime_merge(const DelaySystem& sys, int unit, int w) {
    ChiLayout from = chi_layout(sys, unit, w, true);
    ChiLayout to = chi_layout(sys, unit, w, false);
    Regime reg = sys.regime();
    Mat t = Mat::Zero(from.total, to.total);
    for (int b = 0; b < kChiBlocks; ++b) {
        auto blk = static_cast<ChiBlock>(b);
        ChiBlock target = blk;
        if (blk == ChiBlock::XR1 && !reg.has_x_r1) target = ChiBlock::X;
        if (blk == ChiBlock::XR2 && !reg.has_x_r2) target = ChiBlock::XR1;
        const int s = from.size_of(blk);
        t.block(from.offset_of(blk), to.offset_of(target), s, s) = eye(s);
    }
    return t;
}

double SupplyRate::eval(const Vec& z, const Vec& w, double gamma) const {
    Mat j1v = gamma_mode ? Mat(-gamma * eye(m())) : j1;
    Mat j3v = gamma_mode ? Mat(gamma * eye(q())) : j3;
    Vec jz = j_tilde * z;
    return jz.dot(j1v.ldlt().solve(jz)) + 2.0 * z.dot(j2 * w) + w.dot(j3v * w);
}

SupplyRate supply_l2(double gamma, int m, int q) {
    if (!(gamma > 0.0))
        throw Error(ErrorKind::NonPositiveGamma, "supply_l2: gamma must be positive");
    SupplyRate s;
    s.kind = "l2gain";
    s.j1 = -gamma * eye(m);
    s.j_tilde = eye(m);
    s.j2 = zeros(m, q);
    s.j3 = gamma * eye(q);
    return s;
}

SupplyRate supply_l2_variable(int m, int q) {
    SupplyRate s = supply_l2(1.0, m, q);
    s.gamma_mode = true;
    return s;
}

SupplyRate supply_passivity(const Mat& j1, int q) {
    const int m = static_cast<int>(j1.rows());
    if (j1.cols() != m) throw Error(ErrorKind::Dimension, "supply_passivity: J1 is not square");
    if (m != q)
        throw Error(ErrorKind::Dimension, "supply_passivity: passivity needs m = q (got m = " +
                                              std::to_string(m) + ", q = " + std::to_string(q) + ")");
    if ((j1 - j1.transpose()).cwiseAbs().maxCoeff() > 1e-12 || max_eig(j1) >= 0.0)
        throw Error(ErrorKind::NotNegativeDefinite, "supply_passivity: J1 must be symmetric negative definite");
    SupplyRate s;
    s.kind = "passivity";
    s.j1 = j1;
    s.j_tilde = zeros(m, m);
    s.j2 = eye(m);
    s.j3 = zeros(m, m);
    return s;
}

SupplyRate supply_custom(const Mat& j1, const Mat& j_tilde, const Mat& j2, const Mat& j3) {
    const auto m = j1.rows();
    if (j1.cols() != m || j_tilde.rows() != m || j_tilde.cols() != m || j2.rows() != m ||
        j3.rows() != j3.cols() || j2.cols() != j3.rows())
        throw Error(ErrorKind::Dimension, "supply_custom: inconsistent J block shapes");
    if ((j1 - j1.transpose()).cwiseAbs().maxCoeff() > 1e-12 || max_eig(j1) >= 0.0)
        throw Error(ErrorKind::NotNegativeDefinite, "supply_custom: J1 must be symmetric negative definite");
    SupplyRate s;
    s.j1 = j1;
    s.j_tilde = j_tilde;
    s.j2 = j2;
    s.j3 = symmetrize(j3);
    return s;
}

namespace {

// Row stripe laid out over the interior-form chi columns.
Mat row_stripe(const ChiLayout& l, int rows, const Mat& x, const Mat& z1, const Mat& z2,
               const Mat& w) {
    Mat out = Mat::Zero(rows, l.total);
    auto put = [&](ChiBlock b, const Mat& v) {
        if (l.size_of(b) == 0) return;
        if (v.rows() != rows || v.cols() != l.size_of(b))
            throw Error(ErrorKind::Dimension, "assemble_bold: block " + std::to_string(static_cast<int>(b)) +
                                                  " has shape " + std::to_string(v.rows()) + "x" +
                                                  std::to_string(v.cols()));
        out.block(0, l.offset_of(b), rows, l.size_of(b)) = v;
    };
    put(ChiBlock::X, x);
    put(ChiBlock::Zeta1, z1);
    put(ChiBlock::Zeta2, z2);
    put(ChiBlock::W, w);
    return out;
}

}  // namespace

BoldMatrices assemble_bold_interior(const DelaySystem& sys, const BasisGeometry& geo1,
                                    const BasisGeometry& geo2) {
    sys.validate();
    if (geo1.g.rows() != sys.kappa1() || geo2.g.rows() != sys.kappa2())
        throw Error(ErrorKind::Dimension, "assemble_bold: geometry does not match the system bases");
    const int n = sys.n, p = sys.p, q = sys.q, m = sys.m;
    const Mat in = eye(n), ip = eye(p);
    BoldMatrices bm;
    ChiLayout ln = chi_layout(sys, n, q, true);
    ChiLayout lp = chi_layout(sys, p, q, true);
    bm.chi = ln;
    bm.a = row_stripe(ln, n, sys.a1, sys.a2 * kron(geo1.sqrt_g, in), sys.a3 * kron(geo2.sqrt_g, in), sys.d1);
    bm.b1 = row_stripe(lp, n, sys.b1, sys.b2k * kron(geo1.sqrt_g, ip), sys.b3k * kron(geo2.sqrt_g, ip),
                       zeros(n, q));
    bm.c = row_stripe(ln, m, sys.c1, sys.c2 * kron(geo1.sqrt_g, in), sys.c3 * kron(geo2.sqrt_g, in), sys.d2);
    bm.b2 = row_stripe(lp, m, sys.b4, sys.b5k * kron(geo1.sqrt_g, ip), sys.b6k * kron(geo2.sqrt_g, ip),
                       zeros(m, q));

    const int d1 = sys.d1n(), d2 = sys.d2n();
    const int de1 = sys.basis1.delta(), de2 = sys.basis2.delta();
    const int k1 = sys.kappa1(), k2 = sys.kappa2();
    Mat sel = Mat::Zero(d1 + d2, k1 + 2 * k2);
    sel.block(0, de1, d1, d1) = eye(d1);
    sel.block(d1, k1 + de2, d2, d2) = eye(d2);
    sel.block(d1, k1 + k2 + de2, d2, d2) = eye(d2);
    bm.i_hat_coeff = dsum(geo1.sqrt_f_inv, geo2.sqrt_f_inv) * sel * dsum({geo1.sqrt_g, geo2.sqrt_g, geo2.sqrt_g});
    bm.i_hat = kron(bm.i_hat_coeff, in);

    ChiLayout l1 = chi_layout(sys, 1, 0, true);
    Mat fh = Mat::Zero(d1 + d2, l1.total);
    if (d1 > 0) {
        const Mat& sf = geo1.sqrt_f_inv;
        fh.block(0, l1.offset_of(ChiBlock::XR1), d1, 1) = -sf * sys.basis1.f_at(-sys.r1);
        fh.block(0, l1.offset_of(ChiBlock::X), d1, 1) = sf * sys.basis1.f_at(0.0);
        fh.block(0, l1.offset_of(ChiBlock::Zeta1), d1, k1) = -sf * sys.basis1.m * geo1.sqrt_g;
    }
    if (d2 > 0) {
        const Mat& sf = geo2.sqrt_f_inv;
        Mat mg = -sf * sys.basis2.m * geo2.sqrt_g;
        fh.block(d1, l1.offset_of(ChiBlock::XR1), d2, 1) = sf * sys.basis2.f_at(-sys.r1);
        fh.block(d1, l1.offset_of(ChiBlock::XR2), d2, 1) = -sf * sys.basis2.f_at(-sys.r2);
        fh.block(d1, l1.offset_of(ChiBlock::Zeta2), d2, k2) = mg;
        fh.block(d1, l1.offset_of(ChiBlock::Zeta3), d2, k2) = mg;
    }
    bm.f_hat = fh;
    return bm;
}

BoldMatrices assemble_bold(const DelaySystem& sys, const BasisGeometry& geo1, const BasisGeometry& geo2) {
    BoldMatrices bm = assemble_bold_interior(sys, geo1, geo2);
    const Mat tn = regime_merge(sys, sys.n, sys.q);
    const Mat tp = regime_merge(sys, sys.p, sys.q);
    const Mat t1 = regime_merge(sys, 1, 0);
    bm.a = bm.a * tn;
    bm.c = bm.c * tn;
    bm.b1 = bm.b1 * tp;
    bm.b2 = bm.b2 * tp;
    bm.f_hat = bm.f_hat * t1;
    bm.chi = chi_layout(sys, sys.n, sys.q, false);
    return bm;
}

Mat k_hat(const DelaySystem& sys, const Mat& k) {
    if (k.rows() != sys.p || k.cols() != sys.n)
        throw Error(ErrorKind::Dimension, "k_hat: gain must be p x n");
    return dsum(kron(eye(sys.regime().three_hat + sys.kappa()), k), zeros(sys.q, sys.q));
}

}  // namespace ddss
