#include "lrvf/linalg.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace lrvf;

namespace {

Mat random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("svd of identity has unit singular values") {
  SvdResult s = svd(Mat::Identity(3, 3));
  REQUIRE(s.singular_values.size() == 3);
  for (int i = 0; i < 3; ++i) REQUIRE(s.singular_values[i] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("svd of a diagonal matrix recovers the diagonal") {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  m(2, 2) = 1.0;
  SvdResult s = svd(m);
  REQUIRE(s.singular_values[0] == Catch::Approx(3.0).margin(1e-12));
  REQUIRE(s.singular_values[1] == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(s.singular_values[2] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("svd invariants hold on fuzzed matrices") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 2 + rng.uniform_int(30);
    const int cols = 2 + rng.uniform_int(30);
    Mat m = random_matrix(rng, rows, cols);
    SvdResult s = svd(m);
    const int k = static_cast<int>(s.singular_values.size());
    for (int i = 0; i + 1 < k; ++i) REQUIRE(s.singular_values[i] >= s.singular_values[i + 1]);
    REQUIRE(s.singular_values[k - 1] >= 0.0);
    Mat utu = s.left_vectors.transpose() * s.left_vectors;
    Mat vtv = s.right_vectors.transpose() * s.right_vectors;
    REQUIRE((utu - Mat::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE((vtv - Mat::Identity(k, k)).cwiseAbs().maxCoeff() < 1e-10);
    Mat rec = s.left_vectors * s.singular_values.asDiagonal() * s.right_vectors.transpose();
    REQUIRE((rec - m).norm() / m.norm() < 1e-8);
  }
}

TEST_CASE("svd rejects non-finite input") {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(svd(m), std::invalid_argument);
}

TEST_CASE("tsvd of a rank-one outer product is exact at rank one") {
  Vec u(3), v(4);
  u << 1.0, -2.0, 0.5;
  v << 2.0, 1.0, 0.0, -1.0;
  Mat m = u * v.transpose();
  Mat approx = tsvd(m, 1);
  REQUIRE((m - approx).norm() < 1e-10);
}

TEST_CASE("tsvd at full rank reproduces the input") {
  Rng rng(13);
  Mat m = random_matrix(rng, 6, 9);
  Mat approx = tsvd(m, 6);
  REQUIRE((m - approx).norm() < 1e-8);
}

TEST_CASE("tsvd error equals the discarded singular value for diag(3,2,1)") {
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = 3.0;
  m(1, 1) = 2.0;
  m(2, 2) = 1.0;
  Mat approx = tsvd(m, 2);
  REQUIRE((m - approx).norm() == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("tsvd rank out of range is rejected") {
  Mat m = Mat::Identity(3, 4);
  REQUIRE_THROWS_AS(tsvd(m, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(tsvd(m, 4), std::invalid_argument);
}

TEST_CASE("Eckart-Young identity holds for every rank on random matrices") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    Mat m = random_matrix(rng, 12, 8);
    const Vec sigma = svd(m).singular_values;
    for (int k = 1; k <= 8; ++k) {
      const double err = (m - tsvd(m, k)).norm();
      double tail = 0.0;
      for (int i = k; i < 8; ++i) tail += sigma[i] * sigma[i];
      REQUIRE(err == Catch::Approx(std::sqrt(tail)).margin(1e-8));
    }
  }
}

TEST_CASE("tsvd error is non-increasing in rank") {
  Rng rng(123);
  Mat m = random_matrix(rng, 10, 7);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 7; ++k) {
    const double err = (m - tsvd(m, k)).norm();
    REQUIRE(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("effective_rank thresholds") {
  Vec one_dominant(3);
  one_dominant << 1.0, 0.0, 0.0;
  REQUIRE(effective_rank(one_dominant, 0.99) == 1);

  Vec equal(2);
  equal << 1.0, 1.0;
  REQUIRE(effective_rank(equal, 0.6) == 2);

  Vec mixed(3);
  mixed << 3.0, 2.0, 1.0;
  REQUIRE(effective_rank(mixed, 0.9) == 2);  // 9 + 4 = 13 >= 0.9 * 14
}

TEST_CASE("effective_rank guards") {
  REQUIRE_THROWS_AS(effective_rank(Vec(), 0.9), std::invalid_argument);
  Vec v(1);
  v << 1.0;
  REQUIRE_THROWS_AS(effective_rank(v, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(effective_rank(v, 1.5), std::invalid_argument);
}

TEST_CASE("nfe basics") {
  Mat x(1, 2), zero(1, 2), same(1, 2), partial(1, 2);
  x << 3.0, 4.0;
  same = x;
  zero.setZero();
  partial << 0.0, 4.0;
  REQUIRE(nfe(x, same) == 0.0);
  REQUIRE(nfe(x, zero) == Catch::Approx(1.0));
  REQUIRE(nfe(x, partial) == Catch::Approx(0.6));
  REQUIRE_THROWS_AS(nfe(zero, x), std::invalid_argument);
}
