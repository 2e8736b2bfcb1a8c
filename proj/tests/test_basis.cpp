#include <cmath>

#include <doctest.h>

#include "ddss/basis.hpp"
#include "ddss/error.hpp"
#include "ddss/expr.hpp"
#include "ddss/problem.hpp"
#include "ddss/quadrature.hpp"
#include "ddss/verifier.hpp"
#include "support.hpp"

using namespace ddss;
using test::max_abs;

TEST_CASE("expression parsing and evaluation") {
    CHECK(parse_expr("exp(sin(5*t))").eval(0.0) == doctest::Approx(1.0));
    CHECK(parse_expr("ln(2 - t)").eval(-1.0) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(parse_expr("1").eval(123.0) == 1.0);
    CHECK(parse_expr("cos(5*t)*exp(sin(5*t))").eval(-0.2) ==
          doctest::Approx(std::cos(-1.0) * std::exp(std::sin(-1.0))).epsilon(1e-15));
    CHECK(parse_expr("2^3^2").eval(0) == 512.0);
    CHECK(parse_expr("-t^2").eval(3.0) == -9.0);
    CHECK(parse_expr("2*pi").eval(0) == doctest::Approx(2 * M_PI));
    CHECK(parse_expr("1.5e-1 * t").eval(2.0) == doctest::Approx(0.3));

    try {
        parse_expr("2 *");
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 3);
    }
    CHECK_THROWS_AS(parse_expr("foo(t)"), ParseError);
    CHECK_THROWS_AS(parse_expr("(t"), ParseError);
    try {
        parse_expr("ln(t)").eval(-1.0);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Domain);
    }
    CHECK_THROWS_AS(parse_expr("1/t").eval(0.0), Error);
}

TEST_CASE("expression print round-trip") {
    for (const char* s : {"exp(sin(5*t))", "ln(2 - cos(t)) * t^2 - 3/t", "-(t - 1)^-2"}) {
        Expr e = parse_expr(s);
        Expr again = parse_expr(e.to_string());
        for (double t : {-0.7, -0.3, 0.4}) CHECK(again.eval(t) == e.eval(t));
    }
    CHECK(parse_expr("sin(2) * 3").is_constant());
    CHECK_FALSE(parse_expr("sin(t)").is_constant());
}

TEST_CASE("quadrature") {
    Mat one = quad_matrix([](double) { return Mat::Ones(1, 1); }, -1.0, 0.0);
    CHECK(one(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    Mat g = quad_matrix(
        [](double t) {
            Vec f(2);
            f << 1, t;
            return Mat(f * f.transpose());
        },
        -1.0, 0.0);
    CHECK(g(0, 1) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(g(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    // Richardson-extrapolated Simpson as the independent oracle.
    auto f = [](double t) { return std::exp(std::sin(5 * t)); };
    auto simpson = [&](int np) {
        double h = 1.0 / np, s = 0.0;
        for (int i = 0; i <= 2 * np; ++i) s += ((i == 0 || i == 2 * np) ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f(-1.0 + 0.5 * h * i);
        return s * h / 6.0;
    };
    const double oracle = simpson(4000) + (simpson(4000) - simpson(2000)) / 15.0;
    CHECK(std::abs(quad_scalar(f, -1.0, 0.0) - oracle) < 1e-10);
}

namespace {

KernelBasis basis_of(std::initializer_list<const char*> f, std::initializer_list<const char*> phi, double a, double b) {
    KernelBasis k;
    for (const char* s : f) k.f.push_back(parse_expr(s));
    for (const char* s : phi) k.phi.push_back(parse_expr(s));
    k.a = a;
    k.b = b;
    k.m = Mat::Zero(k.d(), k.kappa());
    return k;
}

}  // namespace

TEST_CASE("geometry of small bases") {
    KernelBasis one = basis_of({"1"}, {}, -1.0, 0.0);
    BasisGeometry geo = compute_geometry(one);
    for (const Mat* m : {&geo.g, &geo.f_gram, &geo.sqrt_g, &geo.sqrt_g_inv, &geo.sqrt_f, &geo.sqrt_f_inv})
        CHECK(max_abs(*m - eye(1)) < 1e-14);

    KernelBasis dup = basis_of({"1", "1"}, {}, -1.0, 0.0);
    try {
        compute_geometry(dup);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
}

TEST_CASE("fixture bases: Gram, closure and decomposition") {
    ProblemFile p1 = load_problem(test::fixture("l2gain_analysis.toml"));
    ProblemFile p2 = load_problem(test::fixture("stabilization.toml"));

    BasisGeometry g1 = compute_geometry(p1.sys.basis1);
    CHECK(g1.g.rows() == 7);
    CHECK(g1.f_gram.rows() == 4);
    CHECK(min_eig(g1.g) > 0.0);
    CHECK(min_eig(g1.f_gram) > 0.0);
    CHECK(max_abs(g1.g - g1.g.transpose()) < 1e-14);

    for (const ProblemFile* p : {&p1, &p2})
        for (const KernelBasis* b : {&p->sys.basis1, &p->sys.basis2}) {
            CHECK(check_ode_closure(*b).pass);
            CheckReport geo = check_geometry(*b);
            CHECK(geo.pass);
            CHECK(geo.worst < 1e-9);
        }

    CHECK(check_decomposition(p1.sys.raw_kernels.at("a2"), p1.sys.a2, p1.sys.basis1, 2).pass);
    CHECK(check_decomposition(p2.sys.raw_kernels.at("a3"), p2.sys.a3, p2.sys.basis2, 2).pass);

    Mat bumped = p1.sys.a2;
    bumped(0, 0) += 0.1;
    CheckReport bad = check_decomposition(p1.sys.raw_kernels.at("a2"), bumped, p1.sys.basis1, 2);
    CHECK_FALSE(bad.pass);
    CHECK(bad.worst == doctest::Approx(0.1).epsilon(0.5));
}

TEST_CASE("closure fails when a row of M is zeroed") {
    ProblemFile p1 = load_problem(test::fixture("l2gain_analysis.toml"));
    KernelBasis b = p1.sys.basis1;
    b.m.row(1).setZero();
    CheckReport r = check_ode_closure(b);
    CHECK_FALSE(r.pass);
    // The dropped derivative of the second f entry is its full value.
    const double tau = r.worst_at;
    Vec fd = (b.f_at(tau + 1e-6) - b.f_at(tau - 1e-6)) / 2e-6;
    CHECK(r.worst == doctest::Approx(std::abs(fd(1))).epsilon(1e-3));
}
