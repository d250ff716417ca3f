#pragma once

#include "lrvf/common.hpp"
#include "lrvf/linalg.hpp"

#include <utility>
#include <vector>

namespace lrvf {

// Explicit finite MDP. The flat index of a state-action pair is
// s * num_actions + a, fixed once so that unvec/TSVD are well defined:
// unvec(q) is the num_states x num_actions matrix read row-major.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  Mat transition;  // (S*A) x S, row-stochastic
  Vec reward;      // S*A, expected reward per (s,a) averaged over next state
  double discount = 0.0;

  std::int64_t sa(int s, int a) const {
    return static_cast<std::int64_t>(s) * num_actions + a;
  }

  void validate() const {
    require(num_states >= 1 && num_actions >= 1, "TabularMdp: empty state or action set");
    require(discount > 0.0 && discount < 1.0, "TabularMdp: discount must be in (0, 1)");
    const std::int64_t n = static_cast<std::int64_t>(num_states) * num_actions;
    require(transition.rows() == n && transition.cols() == num_states,
            "TabularMdp: transition must be (S*A) x S");
    require(reward.size() == n, "TabularMdp: reward must have S*A entries");
    require(reward.allFinite(), "TabularMdp: non-finite rewards");
    for (Eigen::Index r = 0; r < transition.rows(); ++r) {
      require(transition.row(r).minCoeff() >= 0.0, "TabularMdp: negative transition probability");
      require(std::abs(transition.row(r).sum() - 1.0) < 1e-12,
              "TabularMdp: transition row does not sum to 1");
    }
  }
};

// Per-state distribution over actions; deterministic policies are one-hot rows.
struct PolicyMatrix {
  Mat assignment;  // S x A

  static PolicyMatrix deterministic(const std::vector<int>& actions, int num_actions) {
    PolicyMatrix p;
    p.assignment = Mat::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
      require(actions[s] >= 0 && actions[s] < num_actions, "PolicyMatrix: action out of range");
      p.assignment(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
    }
    return p;
  }

  int num_states() const { return static_cast<int>(assignment.rows()); }
  int num_actions() const { return static_cast<int>(assignment.cols()); }

  std::vector<int> greedy_actions() const {
    std::vector<int> out(num_states());
    for (int s = 0; s < num_states(); ++s) {
      Eigen::Index a;
      assignment.row(s).maxCoeff(&a);
      out[s] = static_cast<int>(a);
    }
    return out;
  }

  void validate() const {
    for (Eigen::Index s = 0; s < assignment.rows(); ++s) {
      require(assignment.row(s).minCoeff() >= 0.0, "PolicyMatrix: negative probability");
      require(std::abs(assignment.row(s).sum() - 1.0) < 1e-12,
              "PolicyMatrix: action distribution does not sum to 1");
    }
  }
};

// Vectorized state-action value function, length S*A under the flat-index
// convention above.
struct ValueVector {
  Vec q;

  Mat unvec(int num_states, int num_actions) const {
    require(q.size() == static_cast<Eigen::Index>(num_states) * num_actions,
            "ValueVector: size does not match S*A");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(q.data(), num_states, num_actions);
  }

  static ValueVector vec(const Mat& q_matrix) {
    ValueVector v;
    v.q = Vec(q_matrix.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.q.data(), q_matrix.rows(), q_matrix.cols()) = q_matrix;
    return v;
  }
};

namespace detail {

// (S*A) x (S*A) matrix P*Pi: probability of landing in (s', a') from (s, a)
// when actions are drawn from the policy.
inline Mat transition_under_policy(const TabularMdp& mdp, const PolicyMatrix& policy) {
  const std::int64_t n = static_cast<std::int64_t>(mdp.num_states) * mdp.num_actions;
  Mat ppi = Mat::Zero(n, n);
  for (int sp = 0; sp < mdp.num_states; ++sp)
    for (int ap = 0; ap < mdp.num_actions; ++ap) {
      const double pr = policy.assignment(sp, ap);
      if (pr != 0.0) ppi.col(mdp.sa(sp, ap)) = pr * mdp.transition.col(sp);
    }
  return ppi;
}

}  // namespace detail

// Solve (I - gamma P Pi) q = r directly.
inline ValueVector policy_evaluation_exact(const TabularMdp& mdp, const PolicyMatrix& policy) {
  mdp.validate();
  policy.validate();
  require(policy.num_states() == mdp.num_states && policy.num_actions() == mdp.num_actions,
          "policy_evaluation_exact: policy shape does not match MDP");
  const Mat ppi = detail::transition_under_policy(mdp, policy);
  const std::int64_t n = ppi.rows();
  Mat system = Mat::Identity(n, n) - mdp.discount * ppi;
  Vec q = system.partialPivLu().solve(mdp.reward);
  const double residual = (q - (mdp.reward + mdp.discount * ppi * q)).lpNorm<Eigen::Infinity>();
  if (!q.allFinite() || residual >= 1e-9)
    fail("policy_evaluation_exact: linear solve failed (residual " + std::to_string(residual) + ")");
  return ValueVector{std::move(q)};
}

// Fixed-point iteration q <- r + gamma P Pi q from q_0 = 0. The plus sign
// makes each sweep the Banach contraction whose fixed point solves
// (I - gamma P Pi) q = r, so iterates converge to the exact evaluation.
inline ValueVector policy_evaluation_iterative(const TabularMdp& mdp, const PolicyMatrix& policy,
                                               double tol, int max_iters) {
  mdp.validate();
  policy.validate();
  require(tol > 0.0, "policy_evaluation_iterative: tol must be positive");
  require(max_iters >= 1, "policy_evaluation_iterative: max_iters must be >= 1");
  const Mat ppi = detail::transition_under_policy(mdp, policy);
  Vec q = Vec::Zero(ppi.rows());
  for (int it = 0; it < max_iters; ++it) {
    Vec next = mdp.reward + mdp.discount * (ppi * q);
    const double delta = (next - q).lpNorm<Eigen::Infinity>();
    q = std::move(next);
    if (delta < tol) return ValueVector{std::move(q)};
  }
  fail("policy_evaluation_iterative: no convergence within max_iters");
}

// Greedy deterministic policy; ties broken towards the lowest action index.
inline PolicyMatrix policy_improvement(const TabularMdp& mdp, const ValueVector& value) {
  require(value.q.allFinite(), "policy_improvement: non-finite values");
  const Mat q = value.unvec(mdp.num_states, mdp.num_actions);
  std::vector<int> actions(mdp.num_states, 0);
  for (int s = 0; s < mdp.num_states; ++s) {
    int best = 0;
    for (int a = 1; a < mdp.num_actions; ++a)
      if (q(s, a) > q(s, best)) best = a;
    actions[s] = best;
  }
  return PolicyMatrix::deterministic(actions, mdp.num_actions);
}

inline std::pair<PolicyMatrix, ValueVector> policy_iteration(const TabularMdp& mdp) {
  mdp.validate();
  constexpr int kCap = 10'000;
  PolicyMatrix policy =
      PolicyMatrix::deterministic(std::vector<int>(mdp.num_states, 0), mdp.num_actions);
  std::vector<int> current = policy.greedy_actions();
  for (int it = 0; it < kCap; ++it) {
    ValueVector value = policy_evaluation_exact(mdp, policy);
    PolicyMatrix improved = policy_improvement(mdp, value);
    std::vector<int> next = improved.greedy_actions();
    if (next == current) return {std::move(improved), std::move(value)};
    current = std::move(next);
    policy = std::move(improved);
  }
  fail("policy_iteration: iteration cap reached without a stable policy");
}

// max_a' Q(s', a') backup of a vectorized value function.
inline Vec bellman_optimality_backup(const TabularMdp& mdp, const ValueVector& value) {
  const Mat q = value.unvec(mdp.num_states, mdp.num_actions);
  const Vec v = q.rowwise().maxCoeff();
  return mdp.reward + mdp.discount * (mdp.transition * v);
}

inline double bellman_optimality_residual(const TabularMdp& mdp, const ValueVector& value) {
  return (value.q - bellman_optimality_backup(mdp, value)).lpNorm<Eigen::Infinity>();
}

enum class TsvdEvalMode { one_shot, iterated };

// Policy evaluation with the value matrix projected to rank-k after either
// the exact solve (one_shot) or every fixed-point sweep (iterated).
inline ValueVector tsvd_policy_evaluation(const TabularMdp& mdp, const PolicyMatrix& policy,
                                          int rank, TsvdEvalMode mode, double tol,
                                          int max_iters = 100'000) {
  require(rank >= 1 && rank <= std::min(mdp.num_states, mdp.num_actions),
          "tsvd_policy_evaluation: rank out of range");
  if (mode == TsvdEvalMode::one_shot) {
    ValueVector exact = policy_evaluation_exact(mdp, policy);
    return ValueVector::vec(tsvd(exact.unvec(mdp.num_states, mdp.num_actions), rank));
  }
  require(tol > 0.0, "tsvd_policy_evaluation: tol must be positive");
  mdp.validate();
  policy.validate();
  const Mat ppi = detail::transition_under_policy(mdp, policy);
  Vec q = Vec::Zero(ppi.rows());
  for (int it = 0; it < max_iters; ++it) {
    ValueVector backed{mdp.reward + mdp.discount * (ppi * q)};
    Vec next = ValueVector::vec(tsvd(backed.unvec(mdp.num_states, mdp.num_actions), rank)).q;
    const double delta = (next - q).lpNorm<Eigen::Infinity>();
    q = std::move(next);
    if (delta < tol) return ValueVector{std::move(q)};
  }
  fail("tsvd_policy_evaluation: no convergence within max_iters");
}

}  // namespace lrvf
