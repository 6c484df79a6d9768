#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "assocda/matrix.hpp"
#include "assocda/serial_ref.hpp"
#include "doctest.h"
#include "test_util.hpp"

using assocda::Matrix;

TEST_CASE("matmul identity cases") {
    const Matrix i2 = Matrix::identity(2);
    CHECK(assocda::max_abs_diff(assocda::matmul(i2, i2), i2) == 0.0);

    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(assocda::max_abs_diff(assocda::matmul(a, i2), a) == 0.0);

    const Matrix row = Matrix::from_rows({{1, 2}});
    const Matrix col = Matrix::from_rows({{3}, {4}});
    const Matrix prod = assocda::matmul(row, col);
    CHECK(prod.rows == 1);
    CHECK(prod.cols == 1);
    CHECK(prod(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("matmul rejects mismatched shapes with both shapes in the message") {
    const Matrix a(2, 3);
    const Matrix b(4, 5);
    try {
        assocda::matmul(a, b);
        FAIL("expected an exception");
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2x3)") != std::string::npos);
        CHECK(msg.find("(4x5)") != std::string::npos);
    }
}

TEST_CASE("matmul matches the serial reference and is associative") {
    assocda::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + rng.below(6), k = 2 + rng.below(6), m = 2 + rng.below(6),
                  p = 2 + rng.below(6);
        const Matrix a = testutil::rand_matrix(n, k, rng);
        const Matrix b = testutil::rand_matrix(k, m, rng);
        const Matrix c = testutil::rand_matrix(m, p, rng);

        CHECK(assocda::max_abs_diff(assocda::matmul(a, b), assocda::serial::matmul(a, b)) <
              1e-12);

        const Matrix left = assocda::matmul(assocda::matmul(a, b), c);
        const Matrix right = assocda::matmul(a, assocda::matmul(b, c));
        double scale = 0.0;
        for (double v : left.data) scale = std::max(scale, std::abs(v));
        CHECK(assocda::max_abs_diff(left, right) <= 1e-9 * std::max(1.0, scale));
    }
}

TEST_CASE("row_softmax analytic values") {
    const Matrix sym = assocda::row_softmax(Matrix::from_rows({{0, 0}}));
    CHECK(sym(0, 0) == doctest::Approx(0.5));
    CHECK(sym(0, 1) == doctest::Approx(0.5));

    const Matrix ln2 = assocda::row_softmax(Matrix::from_rows({{std::log(2.0), 0.0}}));
    CHECK(ln2(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(ln2(0, 1) == doctest::Approx(1.0 / 3.0));

    // Shifted inputs must not overflow.
    const Matrix big = assocda::row_softmax(Matrix::from_rows({{1000.0, 1000.0}}));
    CHECK(assocda::is_finite(big));
    CHECK(big(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("row_softmax rows sum to one and shift invariance holds") {
    assocda::Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + rng.below(8), m = 1 + rng.below(8);
        const Matrix x = testutil::rand_matrix(n, m, rng, 3.0);
        const Matrix s = assocda::row_softmax(x);
        CHECK(testutil::max_row_sum_dev(s) < 1e-9);

        Matrix shifted = x;
        for (int i = 0; i < n; ++i) {
            const double c = 10.0 * rng.normal();
            for (int j = 0; j < m; ++j) shifted(i, j) += c;
        }
        CHECK(assocda::max_abs_diff(assocda::row_softmax(shifted), s) < 1e-12);
    }
}

TEST_CASE("row_softmax matches serial reference") {
    assocda::Rng rng(13);
    const Matrix x = testutil::rand_matrix(17, 23, rng, 5.0);
    CHECK(assocda::max_abs_diff(assocda::row_softmax(x), assocda::serial::row_softmax(x)) <
          1e-14);
}

TEST_CASE("cross_entropy_rows analytic values") {
    const Matrix i2 = Matrix::identity(2);
    CHECK(assocda::cross_entropy_rows(i2, i2, 1e-12) == doctest::Approx(0.0).epsilon(1e-12));

    const Matrix uniform = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
    CHECK(assocda::cross_entropy_rows(i2, uniform, 1e-12) == doctest::Approx(std::log(2.0)));

    const Matrix t = Matrix::from_rows({{0.5, 0.5}});
    const Matrix p = Matrix::from_rows({{0.75, 0.25}});
    CHECK(assocda::cross_entropy_rows(t, p, 1e-12) == doctest::Approx(0.836988).epsilon(1e-5));
}

TEST_CASE("cross_entropy_rows rejects shape mismatch and clamps") {
    CHECK_THROWS_AS(assocda::cross_entropy_rows(Matrix(2, 2), Matrix(2, 3), 1e-12),
                    std::invalid_argument);

    // A zero probability with nonzero target mass stays finite via the clamp.
    const Matrix t = Matrix::from_rows({{1.0, 0.0}});
    const Matrix p = Matrix::from_rows({{0.0, 1.0}});
    const double v = assocda::cross_entropy_rows(t, p, 1e-12);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("Gibbs inequality on random row-stochastic pairs") {
    assocda::Rng rng(14);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + rng.below(6), m = 2 + rng.below(6);
        const Matrix t = testutil::rand_row_stochastic(n, m, rng);
        const Matrix p = testutil::rand_row_stochastic(n, m, rng);
        CHECK(assocda::cross_entropy_rows(t, p, 1e-12) >=
              assocda::cross_entropy_rows(t, t, 1e-12) - 1e-9);
    }
}

TEST_CASE("cross_entropy_rows matches serial reference") {
    assocda::Rng rng(15);
    const Matrix t = testutil::rand_row_stochastic(9, 7, rng);
    const Matrix p = testutil::rand_row_stochastic(9, 7, rng);
    CHECK(assocda::cross_entropy_rows(t, p, 1e-12) ==
          doctest::Approx(assocda::serial::cross_entropy_rows(t, p, 1e-12)).epsilon(1e-13));
}

TEST_CASE("parallel kernels are bit-deterministic across repeated calls") {
    // Sizes above the parallel cutoff so the OpenMP paths actually engage.
    assocda::Rng rng(17);
    const Matrix a = testutil::rand_matrix(150, 200, rng);
    const Matrix b = testutil::rand_matrix(200, 120, rng);
    CHECK(assocda::max_abs_diff(assocda::matmul(a, b), assocda::matmul(a, b)) == 0.0);
    CHECK(assocda::max_abs_diff(assocda::row_softmax(a), assocda::row_softmax(a)) == 0.0);
    const Matrix t = testutil::rand_row_stochastic(150, 200, rng);
    const Matrix p = testutil::rand_row_stochastic(150, 200, rng);
    CHECK(assocda::cross_entropy_rows(t, p, 1e-12) == assocda::cross_entropy_rows(t, p, 1e-12));
}

TEST_CASE("exported operations keep entries finite") {
    assocda::Rng rng(16);
    const Matrix x = testutil::rand_matrix(6, 5, rng, 500.0);  // extreme logits
    CHECK(assocda::is_finite(assocda::row_softmax(x)));
    CHECK(assocda::is_finite(assocda::matmul(x, assocda::transpose(x))));
}
