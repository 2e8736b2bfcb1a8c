#include <doctest.h>

#include "ddss/error.hpp"
#include "ddss/tensor.hpp"
#include "support.hpp"

using namespace ddss;
using test::max_abs;

TEST_CASE("kron of identities and row vectors") {
    CHECK(max_abs(kron(eye(2), Mat::Constant(1, 1, 5.0)) - 5.0 * eye(2)) == 0.0);
    Mat row(1, 2);
    row << 1, 2;
    Mat expect(2, 4);
    expect << 1, 0, 2, 0, 0, 1, 0, 2;
    CHECK(max_abs(kron(row, eye(2)) - expect) == 0.0);
}

TEST_CASE("kron mixed product") {
    std::mt19937_64 rng(1);
    Mat x = test::random_mat(rng, 2, 2), y = test::random_mat(rng, 2, 2), z = test::random_mat(rng, 2, 2);
    CHECK(max_abs(kron(x, eye(2)) * kron(y, z) - kron(Mat(x * y), z)) < 1e-13);
}

TEST_CASE("commutation matrix") {
    CHECK(max_abs(commutation_matrix(4, 1) - eye(4)) == 0.0);
    CHECK(max_abs(commutation_matrix(1, 4) - eye(4)) == 0.0);
    Mat swap = eye(4);
    swap.row(1).swap(swap.row(2));
    CHECK(max_abs(commutation_matrix(2, 2) - swap) == 0.0);

    std::mt19937_64 rng(2);
    Mat f = test::random_mat(rng, 2, 1);
    CHECK(max_abs(commutation_matrix(3, 2) * kron(f, eye(3)) - kron(eye(3), f)) < 1e-15);

    for (int n = 1; n <= 6; ++n)
        for (int d = 1; d <= 6; ++d) {
            Mat k = commutation_matrix(n, d);
            CHECK(max_abs(k.transpose() * k - eye(n * d)) == 0.0);
            for (int i = 0; i < k.rows(); ++i) CHECK(k.row(i).sum() == 1.0);
            Mat a = test::random_mat(rng, n, d);
            CHECK(max_abs(k * vec(a) - vec(Mat(a.transpose()))) == 0.0);
        }
}

TEST_CASE("vec and unvec round-trip") {
    std::mt19937_64 rng(3);
    Mat a = test::random_mat(rng, 3, 4);
    CHECK(max_abs(unvec(vec(a), 3, 4) - a) == 0.0);
    CHECK(vec(a)(1) == a(1, 0));
}

TEST_CASE("square roots") {
    Mat d = Vec((Vec(2) << 4, 9).finished()).asDiagonal();
    Mat r = Vec((Vec(2) << 2, 3).finished()).asDiagonal();
    CHECK(max_abs(sqrt_spd(d) - r) < 1e-14);
    CHECK(max_abs(sqrt_spd(eye(3)) - eye(3)) < 1e-15);
    std::mt19937_64 rng(4);
    Mat m = test::random_mat(rng, 3, 3);
    Mat a = m.transpose() * m + eye(3);
    Mat s = sqrt_spd(a);
    CHECK(max_abs(s * s - a) < 1e-12);
    CHECK(max_abs(inv_sqrt_spd(a) * s - eye(3)) < 1e-12);
    Mat not_pd = -eye(2);
    CHECK_THROWS_AS(sqrt_spd(not_pd), Error);
}

TEST_CASE("sy and dsum") {
    Mat u(2, 2);
    u << 0, 1, 0, 0;
    Mat e(2, 2);
    e << 0, 1, 1, 0;
    CHECK(max_abs(sy(u) - e) == 0.0);
    CHECK(max_abs(sy(eye(3)) - 2.0 * eye(3)) == 0.0);
    std::mt19937_64 rng(5);
    Mat a = test::random_mat(rng, 4, 4);
    Mat s = sy(a);
    CHECK(max_abs(s - s.transpose()) == 0.0);

    Mat dd = dsum(eye(2), Mat::Constant(1, 1, 3.0));
    CHECK(max_abs(dd - Vec((Vec(3) << 1, 1, 3).finished()).asDiagonal().toDenseMatrix()) == 0.0);
    CHECK(max_abs(dsum(a, Mat(0, 0)) - a) == 0.0);
    Mat b = test::random_mat(rng, 2, 3), c = test::random_mat(rng, 1, 2);
    CHECK(max_abs(dsum(dsum(a, b), c) - dsum(a, dsum(b, c))) == 0.0);
    CHECK(max_abs(dsum({a, b, c}) - dsum(a, dsum(b, c))) == 0.0);
}

TEST_CASE("block assembly") {
    Mat one = Mat::Constant(1, 1, 1.0), two = Mat::Constant(1, 1, 2.0), three = Mat::Constant(1, 1, 3.0),
        four = Mat::Constant(1, 1, 4.0);
    Mat m = assemble_blocks({{1, 1}, {1, 1}}, {{one, two}, {three, four}});
    Mat e(2, 2);
    e << 1, 2, 3, 4;
    CHECK(max_abs(m - e) == 0.0);

    Mat stripe = assemble_blocks({{1, 0, 1}, {2}}, {{Mat::Ones(1, 2)}, {Mat(0, 2)}, {Mat::Zero(1, 2)}});
    CHECK(stripe.rows() == 2);

    std::mt19937_64 rng(6);
    Mat big = test::random_mat(rng, 6, 6);
    Mat back = assemble_blocks({{2, 4}, {3, 3}}, {{big.block(0, 0, 2, 3), big.block(0, 3, 2, 3)},
                                                  {big.block(2, 0, 4, 3), big.block(2, 3, 4, 3)}});
    CHECK(max_abs(back - big) == 0.0);
    CHECK_THROWS_AS(assemble_blocks({{1}, {1}}, {{Mat::Ones(2, 1)}}), Error);
}
