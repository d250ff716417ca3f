#pragma once

#include "lrvf/common.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace lrvf {

// Thin SVD of m: left_vectors * singular_values.asDiagonal() * right_vectors^T
// reproduces m. Singular values are non-increasing and non-negative.
struct SvdResult {
  Vec singular_values;
  Mat left_vectors;
  Mat right_vectors;
};

inline SvdResult svd(const Mat& m) {
  require(m.allFinite(), "svd: input has non-finite entries");
  Eigen::JacobiSVD<Mat> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) fail("svd: decomposition did not converge");
  return SvdResult{solver.singularValues(), solver.matrixU(), solver.matrixV()};
}

// Best rank-k Frobenius approximation: keep the k largest singular triplets.
inline Mat tsvd(const Mat& m, int k) {
  const int kmax = static_cast<int>(std::min(m.rows(), m.cols()));
  require(k >= 1 && k <= kmax, "tsvd: rank out of range [1, min(rows, cols)]");
  SvdResult s = svd(m);
  return s.left_vectors.leftCols(k) * s.singular_values.head(k).asDiagonal() *
         s.right_vectors.leftCols(k).transpose();
}

// Smallest k whose leading singular values capture `energy` of the squared
// Frobenius mass.
inline int effective_rank(const Vec& singular_values, double energy) {
  require(singular_values.size() > 0, "effective_rank: empty singular-value list");
  require(energy > 0.0 && energy <= 1.0, "effective_rank: energy must be in (0, 1]");
  const double total = singular_values.squaredNorm();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < singular_values.size(); ++k) {
    acc += singular_values[k] * singular_values[k];
    if (acc >= energy * total) return static_cast<int>(k) + 1;
  }
  return static_cast<int>(singular_values.size());
}

inline double nfe(const Mat& x, const Mat& x_hat) {
  require(x.rows() == x_hat.rows() && x.cols() == x_hat.cols(), "nfe: dimension mismatch");
  const double ref = x.norm();
  require(ref > 0.0, "nfe: reference has zero Frobenius norm");
  return (x - x_hat).norm() / ref;
}

}  // namespace lrvf
