#pragma once

#include "lrvf/common.hpp"
#include "lrvf/tensor.hpp"

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace lrvf {

constexpr double kDivergenceBound = 1e12;

struct StepSizeSchedule {
  enum class Kind { constant, polynomial };
  Kind kind = Kind::constant;
  double value = 0.1;      // constant step, or scale of the polynomial decay
  double exponent = 0.0;   // alpha_t = value / t^exponent (t counts from 1)

  double at(std::int64_t t) const {
    if (kind == Kind::constant) return value;
    return value / std::pow(static_cast<double>(t < 1 ? 1 : t), exponent);
  }

  void validate() const {
    require(value > 0.0, "StepSizeSchedule: step size must be positive");
    require(exponent >= 0.0, "StepSizeSchedule: exponent must be >= 0");
  }
};

struct EpsilonSchedule {
  double initial = 1.0;
  double decay = 0.999;  // multiplicative, applied once per episode
  double floor = 0.05;

  double at(std::int64_t episode) const {
    const double eps = initial * std::pow(decay, static_cast<double>(episode));
    return std::max(eps, floor);
  }

  void validate() const {
    require(initial >= 0.0 && initial <= 1.0, "EpsilonSchedule: initial must be in [0, 1]");
    require(decay > 0.0 && decay <= 1.0, "EpsilonSchedule: decay must be in (0, 1]");
    require(floor >= 0.0 && floor <= 1.0, "EpsilonSchedule: floor must be in [0, 1]");
  }
};

struct LearnerConfig {
  double discount = 0.9;
  StepSizeSchedule step_size;
  EpsilonSchedule epsilon;
  int rank = 1;
  double frobenius_weight = 0.0;  // eta
  bool rescale_gradient = false;
  bool stale_target = false;  // tensor target max from the pre-update factor snapshot
  double init_scale = 1.0;
  std::uint64_t init_seed = 0;

  void validate() const {
    require(discount > 0.0 && discount < 1.0, "LearnerConfig: discount must be in (0, 1)");
    step_size.validate();
    epsilon.validate();
    require(rank >= 1, "LearnerConfig: rank must be >= 1");
    require(frobenius_weight >= 0.0, "LearnerConfig: frobenius_weight must be >= 0");
    require(init_scale > 0.0, "LearnerConfig: init_scale must be positive");
  }
};

inline double td_target(double reward, double next_best_value, double discount, bool terminal) {
  return terminal ? reward : reward + discount * next_best_value;
}

// ---------------------------------------------------------------------------
// Value models

struct QTable {
  Mat values;  // C_S x C_A

  static QTable zeros(std::int64_t num_states, std::int64_t num_actions) {
    return QTable{Mat::Zero(num_states, num_actions)};
  }
};

inline void q_learning_update(QTable& q, std::int64_t s, std::int64_t a, double target,
                              double alpha) {
  require(s >= 0 && s < q.values.rows() && a >= 0 && a < q.values.cols(),
          "q_learning_update: index out of range");
  double& entry = q.values(s, a);
  entry += alpha * (target - entry);
  if (!std::isfinite(entry) || std::abs(entry) > kDivergenceBound)
    throw divergence_error("q_learning_update: table entry diverged");
}

struct MatrixFactors {
  Mat left;   // C_S x K
  Mat right;  // K x C_A

  int rank() const { return static_cast<int>(left.cols()); }
};

struct TensorFactors {
  FactorSet factors;    // over the grouped state+action dims, in that order
  int num_state_dims = 0;

  int order() const { return static_cast<int>(factors.factors.size()); }
  int num_action_dims() const { return order() - num_state_dims; }
};

// Factor initialization: entries uniform in (0, init_scale], drawn in factor
// order, row by row. The matrix case draws L first and then R column by
// column, matching the order-2 tensor exactly.
inline MatrixFactors init_matrix_factors(std::int64_t num_states, std::int64_t num_actions,
                                         const LearnerConfig& cfg) {
  Rng rng(cfg.init_seed);
  MatrixFactors f;
  f.left = Mat(num_states, cfg.rank);
  for (std::int64_t s = 0; s < num_states; ++s)
    for (int k = 0; k < cfg.rank; ++k) f.left(s, k) = rng.uniform_positive(cfg.init_scale);
  f.right = Mat(cfg.rank, num_actions);
  for (std::int64_t a = 0; a < num_actions; ++a)
    for (int k = 0; k < cfg.rank; ++k) f.right(k, a) = rng.uniform_positive(cfg.init_scale);
  return f;
}

inline TensorFactors init_tensor_factors(const std::vector<int>& state_sizes,
                                         const std::vector<int>& action_sizes,
                                         const LearnerConfig& cfg) {
  Rng rng(cfg.init_seed);
  TensorFactors f;
  f.num_state_dims = static_cast<int>(state_sizes.size());
  f.factors.rank = cfg.rank;
  std::vector<int> dims = state_sizes;
  dims.insert(dims.end(), action_sizes.begin(), action_sizes.end());
  for (int c : dims) {
    Mat m(c, cfg.rank);
    for (int i = 0; i < c; ++i)
      for (int k = 0; k < cfg.rank; ++k) m(i, k) = rng.uniform_positive(cfg.init_scale);
    f.factors.factors.push_back(std::move(m));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Value evaluation and greedy action selection

namespace detail {

inline double matrix_value(const MatrixFactors& f, std::int64_t s, std::int64_t a) {
  double v = 0.0;
  for (int k = 0; k < f.rank(); ++k) v += f.left(s, k) * f.right(k, a);
  return v;
}

// max_a L[s'] R[:, a], enumerating actions in flat order.
inline double matrix_best_value(const MatrixFactors& f, std::int64_t s, std::int64_t* best = nullptr) {
  double best_v = -std::numeric_limits<double>::infinity();
  std::int64_t best_a = 0;
  for (std::int64_t a = 0; a < f.right.cols(); ++a) {
    const double v = matrix_value(f, s, a);
    if (v > best_v) {
      best_v = v;
      best_a = a;
    }
  }
  if (best) *best = best_a;
  return best_v;
}

// Reconstruction at a full multi-index: sum_k prod_d F_d[idx_d, k].
inline double tensor_value(const std::vector<Mat>& factors, int rank, const MultiIndex& idx) {
  double v = 0.0;
  for (int k = 0; k < rank; ++k) {
    double prod = 1.0;
    for (std::size_t d = 0; d < factors.size(); ++d) prod *= factors[d](idx[d], k);
    v += prod;
  }
  return v;
}

// Exhaustive max over the action grid given the state part of the index.
// Actions are enumerated lexicographically, ties keep the earlier one.
inline double tensor_best_value(const std::vector<Mat>& factors, int rank, int num_state_dims,
                                const MultiIndex& state, MultiIndex* best_action = nullptr) {
  const int order = static_cast<int>(factors.size());
  const int action_dims = order - num_state_dims;
  std::vector<int> action_sizes(action_dims);
  for (int d = 0; d < action_dims; ++d)
    action_sizes[d] = static_cast<int>(factors[num_state_dims + d].rows());
  const std::int64_t num_actions = index_product(action_sizes);

  MultiIndex idx(order);
  for (int d = 0; d < num_state_dims; ++d) idx[d] = state[d];
  double best_v = -std::numeric_limits<double>::infinity();
  MultiIndex best(action_dims, 0);
  MultiIndex a(action_dims, 0);
  for (std::int64_t flat = 0; flat < num_actions; ++flat) {
    for (int d = 0; d < action_dims; ++d) idx[num_state_dims + d] = a[d];
    const double v = tensor_value(factors, rank, idx);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
    // lexicographic increment
    for (int d = action_dims - 1; d >= 0; --d) {
      if (++a[d] < action_sizes[d]) break;
      a[d] = 0;
    }
  }
  if (best_action) *best_action = best;
  return best_v;
}

inline void check_factor_row(const Mat& m, std::int64_t row, const std::string& label) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    const double v = m(row, k);
    if (!std::isfinite(v) || std::abs(v) > kDivergenceBound)
      throw divergence_error("update diverged in " + label);
  }
}

inline void check_factor_col(const Mat& m, std::int64_t col, const std::string& label) {
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    const double v = m(k, col);
    if (!std::isfinite(v) || std::abs(v) > kDivergenceBound)
      throw divergence_error("update diverged in " + label);
  }
}

inline void apply_rescale(Vec& update, bool enabled) {
  if (!enabled) return;
  const double n = update.norm();
  if (n > 1.0) update /= n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stochastic low-rank updates

// Matrix low-rank TD update. Only row s_t of L and column a_t of R change.
// The left step uses the stale product L R for both the bootstrap max and
// the current estimate; the right step recomputes both with the updated L.
// With eta > 0 each step also shrinks the touched row/column; with
// rescale_gradient each step's update vector is divided by max(1, its norm).
inline void mlr_update(MatrixFactors& f, std::int64_t s, std::int64_t a, double reward,
                       std::int64_t s_next, bool terminal, const LearnerConfig& cfg,
                       double alpha) {
  require(s >= 0 && s < f.left.rows() && a >= 0 && a < f.right.cols(),
          "mlr_update: index out of range");
  const double eta = cfg.frobenius_weight;

  const double next_best1 = terminal ? 0.0 : detail::matrix_best_value(f, s_next);
  const double delta1 =
      td_target(reward, next_best1, cfg.discount, terminal) - detail::matrix_value(f, s, a);
  Vec update_left = delta1 * f.right.col(a) - eta * f.left.row(s).transpose();
  detail::apply_rescale(update_left, cfg.rescale_gradient);
  f.left.row(s) += alpha * update_left.transpose();
  detail::check_factor_row(f.left, s, "left factor");

  const double next_best2 = terminal ? 0.0 : detail::matrix_best_value(f, s_next);
  const double delta2 =
      td_target(reward, next_best2, cfg.discount, terminal) - detail::matrix_value(f, s, a);
  Vec update_right = delta2 * f.left.row(s).transpose() - eta * f.right.col(a);
  detail::apply_rescale(update_right, cfg.rescale_gradient);
  f.right.col(a) += alpha * update_right;
  detail::check_factor_col(f.right, a, "right factor");
}

// Tensor low-rank TD update. Factors are updated sequentially for
// d = 1..D; when mode d is processed the factors before it already carry
// their new values, so evaluating the in-place factor set realizes the
// mixed-time estimate. Only the row of factor d indexed by the d-th entry
// of [s_t; a_t] changes. With stale_target the bootstrap max is evaluated
// on the pre-update snapshot instead of the mixed-time factors.
inline void tlr_update(TensorFactors& f, const MultiIndex& state, const MultiIndex& action,
                       double reward, const MultiIndex& next_state, bool terminal,
                       const LearnerConfig& cfg, double alpha) {
  const int order = f.order();
  const int rank = f.factors.rank;
  require(static_cast<int>(state.size()) == f.num_state_dims, "tlr_update: state index length");
  require(static_cast<int>(action.size()) == f.num_action_dims(),
          "tlr_update: action index length");
  const double eta = cfg.frobenius_weight;

  MultiIndex idx(order);
  for (int d = 0; d < f.num_state_dims; ++d) idx[d] = state[d];
  for (int d = f.num_state_dims; d < order; ++d) idx[d] = action[d - f.num_state_dims];

  std::vector<Mat> snapshot;
  if (cfg.stale_target && !terminal) snapshot = f.factors.factors;

  for (int d = 0; d < order; ++d) {
    const std::int64_t row = idx[d];
    require(row >= 0 && row < f.factors.factors[d].rows(), "tlr_update: index out of range");

    // Hadamard product over the other modes' rows (modes before d updated).
    Vec direction = Vec::Ones(rank);
    for (int i = 0; i < order; ++i) {
      if (i == d) continue;
      for (int k = 0; k < rank; ++k) direction[k] *= f.factors.factors[i](idx[i], k);
    }
    double current = 0.0;
    for (int k = 0; k < rank; ++k) current += f.factors.factors[d](row, k) * direction[k];

    double next_best = 0.0;
    if (!terminal)
      next_best = detail::tensor_best_value(cfg.stale_target ? snapshot : f.factors.factors,
                                            rank, f.num_state_dims, next_state);
    const double delta = td_target(reward, next_best, cfg.discount, terminal) - current;

    Vec update = delta * direction - eta * f.factors.factors[d].row(row).transpose();
    detail::apply_rescale(update, cfg.rescale_gradient);
    f.factors.factors[d].row(row) += alpha * update.transpose();
    detail::check_factor_row(f.factors.factors[d], row,
                             "tensor factor for dimension " + std::to_string(d + 1));
  }
}

// ---------------------------------------------------------------------------
// Polymorphic model handle used by the training loop

using ValueModel = std::variant<QTable, MatrixFactors, TensorFactors>;

struct ModelDims {
  std::vector<int> state_sizes;   // grouped state dims
  std::vector<int> action_sizes;  // grouped action dims

  std::int64_t num_states() const { return index_product(state_sizes); }
  std::int64_t num_actions() const { return index_product(action_sizes); }
};

inline double model_value(const ValueModel& model, const ModelDims& dims, const MultiIndex& state,
                          const MultiIndex& action) {
  if (const QTable* q = std::get_if<QTable>(&model))
    return q->values(flatten_index(state, dims.state_sizes),
                     flatten_index(action, dims.action_sizes));
  if (const MatrixFactors* m = std::get_if<MatrixFactors>(&model))
    return detail::matrix_value(*m, flatten_index(state, dims.state_sizes),
                                flatten_index(action, dims.action_sizes));
  const TensorFactors& t = std::get<TensorFactors>(model);
  MultiIndex idx(state);
  idx.insert(idx.end(), action.begin(), action.end());
  return detail::tensor_value(t.factors.factors, t.factors.rank, idx);
}

// Exhaustive argmax over the action grid; ties break towards the
// lexicographically smallest action multi-index.
inline std::pair<MultiIndex, double> best_action(const ValueModel& model, const ModelDims& dims,
                                                 const MultiIndex& state) {
  if (const QTable* q = std::get_if<QTable>(&model)) {
    const std::int64_t s = flatten_index(state, dims.state_sizes);
    std::int64_t best = 0;
    double best_v = q->values(s, 0);
    for (std::int64_t a = 1; a < q->values.cols(); ++a)
      if (q->values(s, a) > best_v) {
        best_v = q->values(s, a);
        best = a;
      }
    return {unflatten_index(best, dims.action_sizes), best_v};
  }
  if (const MatrixFactors* m = std::get_if<MatrixFactors>(&model)) {
    std::int64_t best = 0;
    const double best_v = detail::matrix_best_value(*m, flatten_index(state, dims.state_sizes), &best);
    return {unflatten_index(best, dims.action_sizes), best_v};
  }
  const TensorFactors& t = std::get<TensorFactors>(model);
  MultiIndex best;
  const double best_v =
      detail::tensor_best_value(t.factors.factors, t.factors.rank, t.num_state_dims, state, &best);
  return {best, best_v};
}

// With probability eps a uniformly random action multi-index, otherwise the
// greedy action.
inline MultiIndex epsilon_greedy(const ValueModel& model, const ModelDims& dims,
                                 const MultiIndex& state, double eps, Rng& rng) {
  require(eps >= 0.0 && eps <= 1.0, "epsilon_greedy: eps must be in [0, 1]");
  if (eps > 0.0 && rng.uniform() < eps) {
    const std::int64_t flat = rng.uniform_int(static_cast<int>(dims.num_actions()));
    return unflatten_index(flat, dims.action_sizes);
  }
  return best_action(model, dims, state).first;
}

// One TD update on whichever model is held; t is the 1-based global update
// counter driving the step-size schedule.
inline void model_update(ValueModel& model, const ModelDims& dims, const MultiIndex& state,
                         const MultiIndex& action, double reward, const MultiIndex& next_state,
                         bool terminal, const LearnerConfig& cfg, std::int64_t t) {
  const double alpha = cfg.step_size.at(t);
  if (QTable* q = std::get_if<QTable>(&model)) {
    const std::int64_t s = flatten_index(state, dims.state_sizes);
    const std::int64_t a = flatten_index(action, dims.action_sizes);
    double next_best = 0.0;
    if (!terminal) {
      const std::int64_t sn = flatten_index(next_state, dims.state_sizes);
      next_best = q->values.row(sn).maxCoeff();
    }
    q_learning_update(*q, s, a, td_target(reward, next_best, cfg.discount, terminal), alpha);
    return;
  }
  if (MatrixFactors* m = std::get_if<MatrixFactors>(&model)) {
    mlr_update(*m, flatten_index(state, dims.state_sizes),
               flatten_index(action, dims.action_sizes), reward,
               terminal ? 0 : flatten_index(next_state, dims.state_sizes), terminal, cfg, alpha);
    return;
  }
  tlr_update(std::get<TensorFactors>(model), state, action, reward, next_state, terminal, cfg,
             alpha);
}

enum class ModelKind { qtable, matrix, tensor };

inline ModelKind model_kind(const ValueModel& model) {
  if (std::holds_alternative<QTable>(model)) return ModelKind::qtable;
  if (std::holds_alternative<MatrixFactors>(model)) return ModelKind::matrix;
  return ModelKind::tensor;
}

inline std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::qtable: return "qtable";
    case ModelKind::matrix: return "mlr";
    case ModelKind::tensor: return "tlr";
  }
  fail("model_kind_name: invalid kind");
}

inline ValueModel init_model_with(ModelKind kind, const LearnerConfig& learner,
                                  const ModelDims& dims) {
  switch (kind) {
    case ModelKind::qtable: return QTable::zeros(dims.num_states(), dims.num_actions());
    case ModelKind::matrix:
      return init_matrix_factors(dims.num_states(), dims.num_actions(), learner);
    case ModelKind::tensor:
      return init_tensor_factors(dims.state_sizes, dims.action_sizes, learner);
  }
  fail("init_model_with: invalid kind");
}

// Stored parameter counts: full table, (C_S + C_A) K for the matrix pair,
// (sum_d C_d) K for the tensor factors.
inline std::int64_t count_parameters(ModelKind kind, const ModelDims& dims, int rank) {
  require(rank >= 1, "count_parameters: rank must be >= 1");
  switch (kind) {
    case ModelKind::qtable: return dims.num_states() * dims.num_actions();
    case ModelKind::matrix: return (dims.num_states() + dims.num_actions()) * rank;
    case ModelKind::tensor: {
      std::int64_t sum = 0;
      for (int c : dims.state_sizes) sum += c;
      for (int c : dims.action_sizes) sum += c;
      return sum * rank;
    }
  }
  fail("count_parameters: invalid kind");
}

// Tensor-to-matrix parameter ratio (D K' / 2K) C^{1 - D/2} for the uniform
// case C_d = C, D_S = D_A = D/2.
inline double parameter_ratio(int num_dims, int dim_size, int matrix_rank, int tensor_rank) {
  require(num_dims >= 1 && dim_size >= 1, "parameter_ratio: positive dims required");
  require(matrix_rank >= 1 && tensor_rank >= 1, "parameter_ratio: ranks must be >= 1");
  return (num_dims * static_cast<double>(tensor_rank) / (2.0 * matrix_rank)) *
         std::pow(static_cast<double>(dim_size), 1.0 - num_dims / 2.0);
}

}  // namespace lrvf
