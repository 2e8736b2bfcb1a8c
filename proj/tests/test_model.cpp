#include <doctest.h>

#include "ddss/error.hpp"
#include "ddss/model.hpp"
#include "ddss/problem.hpp"
#include "ddss/quadrature.hpp"
#include "support.hpp"

using namespace ddss;
using test::max_abs;

TEST_CASE("regime classification") {
    Regime in = classify_regime(0.5, 1.0);
    CHECK(in.kind == RegimeKind::Interior);
    CHECK(in.three_hat == 3);
    Regime lz = classify_regime(0.0, 1.0);
    CHECK(lz.kind == RegimeKind::LowerZero);
    CHECK(lz.three_hat == 2);
    CHECK(lz.one_hat_marker(2).rows() == 0);
    CHECK(lz.one_marker(2).rows() == 2);
    Regime pt = classify_regime(1.0, 1.0);
    CHECK(pt.kind == RegimeKind::Point);
    CHECK(pt.one_marker(2).rows() == 0);
    for (auto [a, b] : {std::pair{1.0, 0.5}, {-0.1, 1.0}, {0.0, 0.0}}) {
        try {
            classify_regime(a, b);
            FAIL("no throw");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvalidDelayBounds);
        }
    }
}

TEST_CASE("supply presets") {
    SupplyRate s = supply_l2(0.5, 2, 1);
    CHECK(max_abs(s.j1 + 0.5 * eye(2)) == 0.0);
    CHECK(max_abs(s.j3 - 0.5 * eye(1)) == 0.0);
    CHECK(supply_l2_variable(2, 1).gamma_mode);
    try {
        supply_l2(-1.0, 1, 1);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonPositiveGamma);
    }
    CHECK_NOTHROW(supply_passivity(-eye(2), 2));
    try {
        supply_passivity(-eye(2), 1);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Dimension);
    }
    try {
        supply_passivity(eye(2), 2);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotNegativeDefinite);
    }
    // s(z, w) = z^T J1^-1 z ... evaluated at a simple point: gamma w^2 - |z|^2 / gamma.
    Vec z(2), w(1);
    z << 1, 0;
    w << 1;
    CHECK(supply_l2_variable(2, 1).eval(z, w, 2.0) == doctest::Approx(2.0 - 0.5));
}

TEST_CASE("bold matrices of the analysis fixture") {
    ProblemFile p = load_problem(test::fixture("l2gain_analysis.toml"));
    const DelaySystem& sys = p.sys;
    BasisGeometry g1 = compute_geometry(sys.basis1), g2 = compute_geometry(sys.basis2);
    BoldMatrices bm = assemble_bold(sys, g1, g2);
    CHECK(sys.kappa() == 21);
    CHECK(sys.l0() == 49);
    CHECK(bm.a.cols() == 49);
    CHECK(bm.a.rows() == 2);
    CHECK(max_abs(bm.b1) == 0.0);
    CHECK(bm.b1.cols() == (3 + 21) * sys.p + sys.q);

    // The kappa1 stripe of bold_a re-expanded against the orthonormalized
    // basis integrates to the integral of the raw kernel.
    const int off = bm.chi.offset_of(ChiBlock::Zeta1);
    Mat stripe = bm.a.block(0, off, sys.n, sys.kappa1() * sys.n);
    Mat lhs = quad_matrix(
        [&](double t) { return Mat(stripe * kron(Mat(g1.sqrt_g_inv * sys.basis1.fhat_at(t)), eye(sys.n))); }, -sys.r1,
        0.0);
    Mat rhs = quad_matrix([&](double t) { return eval_grid(sys.raw_kernels.at("a2"), t); }, -sys.r1, 0.0);
    CHECK(max_abs(lhs - rhs) < 1e-8);
}

TEST_CASE("f_hat rows of a hand-built basis") {
    DelaySystem sys;
    sys.n = 1;
    sys.m = 1;
    sys.q = 1;
    sys.r1 = 1.0;
    sys.r2 = 2.0;
    sys.a1 = sys.c1 = Mat::Zero(1, 1);
    sys.d1 = sys.d2 = Mat::Zero(1, 1);
    sys.b1 = Mat(1, 0);
    sys.b4 = Mat(1, 0);
    sys.basis1.f = {parse_expr("1")};
    sys.basis1.phi = {parse_expr("t")};
    sys.basis1.m = Mat::Zero(1, 2);
    sys.basis1.a = -1.0;
    sys.basis1.b = 0.0;
    sys.basis2.a = -2.0;
    sys.basis2.b = -1.0;
    sys.basis2.m = Mat(0, 0);
    sys.a2 = Mat::Zero(1, 2);
    sys.a3 = Mat(1, 0);
    sys.b2k = sys.b3k = Mat(1, 0);
    sys.c2 = Mat::Zero(1, 2);
    sys.c3 = Mat(1, 0);
    sys.b5k = sys.b6k = Mat(1, 0);
    CHECK_NOTHROW(sys.validate());
    BasisGeometry g1 = compute_geometry(sys.basis1), g2 = compute_geometry(sys.basis2);
    BoldMatrices bm = assemble_bold(sys, g1, g2);
    ChiLayout l1 = chi_layout(sys, 1, 0, true);
    CHECK(bm.f_hat(0, l1.offset_of(ChiBlock::X)) == doctest::Approx(1.0));
    CHECK(bm.f_hat(0, l1.offset_of(ChiBlock::XR1)) == doctest::Approx(-1.0));
}

TEST_CASE("regime folding drops coinciding x-blocks") {
    ProblemFile p = load_problem(test::fixture("point_regime.toml"));
    CHECK(p.sys.regime().kind == RegimeKind::Point);
    BasisGeometry g1 = compute_geometry(p.sys.basis1), g2 = compute_geometry(p.sys.basis2);
    BoldMatrices bm = assemble_bold(p.sys, g1, g2);
    CHECK(bm.chi.size_of(ChiBlock::XR2) == 0);
    CHECK(bm.chi.size_of(ChiBlock::Zeta2) == 0);
    CHECK(bm.chi.size_of(ChiBlock::Zeta3) == 0);
    CHECK(bm.a.cols() == 2 * 2 + 1 * 2 + 1);

    // Folding the interior form reproduces the regime matrices.
    BoldMatrices full = assemble_bold_interior(p.sys, g1, g2);
    Mat t = regime_merge(p.sys, p.sys.n, p.sys.q);
    CHECK(max_abs(full.a * t - bm.a) < 1e-14);
}
