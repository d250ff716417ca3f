#pragma once

#include "lrvf/common.hpp"
#include "lrvf/linalg.hpp"

#include <vector>

namespace lrvf {

// Dense multi-way array. Linearization is fixed once for the whole library:
// last index fastest, so flatten_index/unflatten_index apply directly.
struct DenseTensor {
  std::vector<int> dims;
  Vec data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<int> d)
      : dims(std::move(d)), data(Vec::Zero(index_product(dims))) {
    for (int c : dims) require(c >= 1, "DenseTensor: dimensions must be positive");
  }

  int order() const { return static_cast<int>(dims.size()); }
  std::int64_t size() const { return data.size(); }

  double& at(const MultiIndex& idx) { return data[flatten_index(idx, dims)]; }
  double at(const MultiIndex& idx) const { return data[flatten_index(idx, dims)]; }

  double norm() const { return data.norm(); }
};

// Rank-K factor matrices, factors[d] of size dims[d] x K. For order 2 this
// holds L and R^T of the matrix factorization Q = L R.
struct FactorSet {
  int rank = 0;
  std::vector<Mat> factors;

  std::vector<int> dims() const {
    std::vector<int> d(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) d[i] = static_cast<int>(factors[i].rows());
    return d;
  }

  void validate() const {
    require(rank >= 1, "FactorSet: rank must be >= 1");
    require(!factors.empty(), "FactorSet: no factors");
    for (const Mat& f : factors) {
      require(f.cols() == rank, "FactorSet: all factors must have `rank` columns");
      require(f.allFinite(), "FactorSet: non-finite entries");
    }
  }
};

// Column-wise Kronecker product: column k of the result is kron(a_k, b_k),
// with a's index varying slower.
inline Mat khatri_rao(const Mat& a, const Mat& b) {
  require(a.cols() == b.cols(), "khatri_rao: column counts differ");
  Mat out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index k = 0; k < a.cols(); ++k)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
  return out;
}

// Left-associative Khatri-Rao over factors in index order, skipping `skip`
// (pass skip < 0 to keep all). The row index of the result runs over the
// remaining dimensions with the last one fastest, matching matricize.
inline Mat khatri_rao_skip(const std::vector<Mat>& factors, int skip) {
  Mat acc;
  bool first = true;
  for (int d = 0; d < static_cast<int>(factors.size()); ++d) {
    if (d == skip) continue;
    if (first) {
      acc = factors[d];
      first = false;
    } else {
      acc = khatri_rao(acc, factors[d]);
    }
  }
  require(!first, "khatri_rao_skip: nothing to combine");
  return acc;
}

// Mode-d unfolding, shaped (prod_{i != d} dims[i]) x dims[d] so that
// matricize(reconstruct(F), d) == khatri_rao_skip(F.factors, d) * F_d^T.
inline Mat matricize(const DenseTensor& t, int d) {
  const int order = t.order();
  require(d >= 0 && d < order, "matricize: mode out of range");
  const std::int64_t rows = t.size() / t.dims[d];
  Mat out(rows, t.dims[d]);
  std::vector<int> rest_dims;
  for (int i = 0; i < order; ++i)
    if (i != d) rest_dims.push_back(t.dims[i]);
  MultiIndex full(order);
  for (std::int64_t r = 0; r < rows; ++r) {
    MultiIndex rest = unflatten_index(r, rest_dims);
    int j = 0;
    for (int i = 0; i < order; ++i)
      if (i != d) full[i] = rest[j++];
    for (int c = 0; c < t.dims[d]; ++c) {
      full[d] = c;
      out(r, c) = t.at(full);
    }
  }
  return out;
}

inline DenseTensor unmatricize(const Mat& m, const std::vector<int>& dims, int d) {
  const int order = static_cast<int>(dims.size());
  require(d >= 0 && d < order, "unmatricize: mode out of range");
  const std::int64_t total = index_product(dims);
  require(m.rows() * m.cols() == total && m.cols() == dims[d],
          "unmatricize: matrix shape incompatible with dims/mode");
  DenseTensor t(dims);
  std::vector<int> rest_dims;
  for (int i = 0; i < order; ++i)
    if (i != d) rest_dims.push_back(dims[i]);
  MultiIndex full(order);
  for (std::int64_t r = 0; r < m.rows(); ++r) {
    MultiIndex rest = unflatten_index(r, rest_dims);
    int j = 0;
    for (int i = 0; i < order; ++i)
      if (i != d) full[i] = rest[j++];
    for (int c = 0; c < dims[d]; ++c) {
      full[d] = c;
      t.at(full) = m(r, c);
    }
  }
  return t;
}

// Entry (i_1,...,i_D) = sum_k prod_d F_d[i_d, k].
inline DenseTensor reconstruct(const FactorSet& f) {
  f.validate();
  const std::vector<int> dims = f.dims();
  DenseTensor t(dims);
  const int order = static_cast<int>(dims.size());
  for (std::int64_t flat = 0; flat < t.size(); ++flat) {
    MultiIndex idx = unflatten_index(flat, dims);
    double sum = 0.0;
    for (int k = 0; k < f.rank; ++k) {
      double prod = 1.0;
      for (int d = 0; d < order; ++d) prod *= f.factors[d](idx[d], k);
      sum += prod;
    }
    t.data[flat] = sum;
  }
  return t;
}

inline double nfe(const DenseTensor& x, const DenseTensor& x_hat) {
  require(x.dims == x_hat.dims, "nfe: tensor dims differ");
  const double ref = x.norm();
  require(ref > 0.0, "nfe: reference has zero Frobenius norm");
  return (x.data - x_hat.data).norm() / ref;
}

struct ParafacResult {
  FactorSet factors;
  std::vector<double> fit_history;  // NFE after each sweep
  int iterations = 0;
  bool used_pseudo_inverse = false;
};

namespace detail {

// Solve F_d G = B for F_d with G = hadamard_{i != d}(F_i^T F_i). Falls back
// to the pseudo-inverse when G is numerically singular.
inline Mat solve_normal_equations(const Mat& gram, const Mat& rhs, bool* degenerate) {
  Eigen::LDLT<Mat> ldlt(gram);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      ldlt.vectorD().minCoeff() > 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    return ldlt.solve(rhs.transpose()).transpose();
  }
  *degenerate = true;
  SvdResult s = svd(gram);
  const double cutoff = 1e-12 * s.singular_values[0];
  Vec inv = s.singular_values;
  for (Eigen::Index i = 0; i < inv.size(); ++i)
    inv[i] = s.singular_values[i] > cutoff ? 1.0 / s.singular_values[i] : 0.0;
  Mat pinv = s.right_vectors * inv.asDiagonal() * s.left_vectors.transpose();
  return rhs * pinv.transpose();
}

}  // namespace detail

// Alternating least squares fit of a rank-k PARAFAC model. Factors start
// uniform(0, 1] from `seed`; sweeps stop when the relative NFE improvement
// drops below tol.
inline ParafacResult parafac_als(const DenseTensor& t, int k, int max_iters, double tol,
                                 std::uint64_t seed) {
  require(k >= 1, "parafac_als: rank must be >= 1");
  require(max_iters >= 1, "parafac_als: max_iters must be >= 1");
  require(t.data.allFinite(), "parafac_als: tensor has non-finite entries");
  const int order = t.order();
  require(order >= 2, "parafac_als: tensor order must be >= 2");

  ParafacResult res;
  res.factors.rank = k;
  Rng rng(seed);
  for (int d = 0; d < order; ++d) {
    Mat f(t.dims[d], k);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      for (int c = 0; c < k; ++c) f(i, c) = rng.uniform_positive(1.0);
    res.factors.factors.push_back(std::move(f));
  }

  std::vector<Mat> unfoldings(order);
  for (int d = 0; d < order; ++d) unfoldings[d] = matricize(t, d);
  const double tnorm = t.norm();
  require(tnorm > 0.0, "parafac_als: zero tensor");

  std::vector<Mat> grams(order);
  for (int d = 0; d < order; ++d)
    grams[d] = res.factors.factors[d].transpose() * res.factors.factors[d];

  double prev_nfe = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    for (int d = 0; d < order; ++d) {
      Mat gram = Mat::Ones(k, k);
      for (int i = 0; i < order; ++i)
        if (i != d) gram = gram.cwiseProduct(grams[i]);
      Mat kr = khatri_rao_skip(res.factors.factors, d);
      Mat rhs = unfoldings[d].transpose() * kr;  // dims[d] x k
      bool degenerate = false;
      res.factors.factors[d] = detail::solve_normal_equations(gram, rhs, &degenerate);
      if (degenerate) res.used_pseudo_inverse = true;
      grams[d] = res.factors.factors[d].transpose() * res.factors.factors[d];
    }
    const double fit = nfe(t, reconstruct(res.factors));
    res.fit_history.push_back(fit);
    res.iterations = it + 1;
    if (std::isfinite(prev_nfe) && prev_nfe - fit < tol * std::max(prev_nfe, 1e-300)) break;
    prev_nfe = fit;
  }
  return res;
}

}  // namespace lrvf
