#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "synguide/matrix.hpp"

using synguide::Matrix;

TEST_SUITE("matrix") {

TEST_CASE("matmul examples") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(synguide::matmul(Matrix::identity(2), a) == a);
  CHECK(synguide::matmul(Matrix::from_rows({{1, 0}, {0, 0}}), Matrix::from_rows({{5}, {7}})) ==
        Matrix::from_rows({{5}, {0}}));
  CHECK(synguide::matmul(a, Matrix::from_rows({{1}, {1}})) == Matrix::from_rows({{3}, {7}}));
}

TEST_CASE("matmul mismatch names both shapes") {
  try {
    synguide::matmul(Matrix(2, 3), Matrix(2, 3));
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("transpose") {
  CHECK(synguide::transpose(Matrix::from_rows({{1, 2, 3}})) ==
        Matrix::from_rows({{1}, {2}, {3}}));
}

TEST_CASE("row_softmax examples") {
  const Matrix u = synguide::row_softmax(Matrix::from_rows({{0, 0, 0}}), 1.0);
  for (std::size_t j = 0; j < 3; ++j) CHECK(u(0, j) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const Matrix p = synguide::row_softmax(Matrix::from_rows({{std::log(2.0), 0}}), 1.0);
  CHECK(std::abs(p(0, 0) - 2.0 / 3) < 1e-15);
  CHECK(std::abs(p(0, 1) - 1.0 / 3) < 1e-15);

  const Matrix big = synguide::row_softmax(Matrix::from_rows({{1000, 0}}), 1.0);
  CHECK(big.all_finite());
  CHECK(big(0, 0) == doctest::Approx(1.0));
  CHECK(big(0, 1) < 1e-300);
}

TEST_CASE("row_softmax temperature") {
  // softmax(x / t) computed directly for small values.
  const Matrix p = synguide::row_softmax(Matrix::from_rows({{1, 2}}), 0.5);
  const double e1 = std::exp(2.0), e2 = std::exp(4.0);
  CHECK(p(0, 0) == doctest::Approx(e1 / (e1 + e2)).epsilon(1e-14));
  CHECK_THROWS_AS(synguide::row_softmax(Matrix(1, 2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(synguide::row_softmax(Matrix(1, 2), -1.0), std::invalid_argument);
}

TEST_CASE("cross_entropy examples") {
  const int l0[] = {3};
  const auto uniform = synguide::cross_entropy(Matrix(1, 10, 0.7), l0);
  CHECK(uniform.loss == doctest::Approx(std::log(10.0)).epsilon(1e-14));

  const int lz[] = {0};
  const auto sharp = synguide::cross_entropy(Matrix::from_rows({{10, -10}}), lz);
  // -ln(1 / (1 + e^-20)) = ln(1 + e^-20)
  CHECK(sharp.loss == doctest::Approx(std::log1p(std::exp(-20.0))).epsilon(1e-12));
  CHECK(sharp.loss == doctest::Approx(2.06e-9).epsilon(1e-2));

  const int two[] = {0, 1};
  const Matrix logits = Matrix::from_rows({{1, 0}, {0.5, 2}});
  const auto ce = synguide::cross_entropy(logits, two);
  const double l1 = -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  const double l2 = -std::log(std::exp(2.0) / (std::exp(0.5) + std::exp(2.0)));
  CHECK(ce.per_sample[0] == doctest::Approx(l1).epsilon(1e-14));
  CHECK(ce.per_sample[1] == doctest::Approx(l2).epsilon(1e-14));
  CHECK(ce.loss == doctest::Approx((l1 + l2) / 2).epsilon(1e-14));
}

TEST_CASE("cross_entropy label out of range names the index") {
  const int bad[] = {0, 5};
  try {
    synguide::cross_entropy(Matrix(2, 3), bad);
    FAIL("expected an exception");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find('5') != std::string::npos);
  }
}

TEST_CASE("finite_diff_grad examples") {
  const synguide::ScalarFunction sumsq = [](const Matrix& x) {
    double s = 0;
    for (double v : x.values()) s += v * v;
    return s;
  };
  const Matrix g = synguide::finite_diff_grad(sumsq, Matrix::from_rows({{1, 2}}), 1e-5);
  CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(g(0, 1) == doctest::Approx(4.0).epsilon(1e-8));

  const Matrix z = synguide::finite_diff_grad([](const Matrix&) { return 3.0; }, Matrix(2, 2), 1e-4);
  CHECK(z == Matrix(2, 2));

  // d/dX tr(A X) = A^T
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const synguide::ScalarFunction trace = [&](const Matrix& x) {
    const Matrix p = synguide::matmul(a, x);
    return p(0, 0) + p(1, 1);
  };
  const Matrix gt = synguide::finite_diff_grad(trace, Matrix::from_rows({{0.3, -1}, {2, 0.1}}), 1e-4);
  const Matrix at = synguide::transpose(a);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(gt(i, j) == doctest::Approx(at(i, j)).epsilon(1e-9));
}

}
