#pragma once

#include "lrvf/common.hpp"
#include "lrvf/env.hpp"
#include "lrvf/grid.hpp"
#include "lrvf/gridworld.hpp"
#include "lrvf/mdp.hpp"

#include <memory>
#include <vector>

namespace lrvf {

struct StepOutcome {
  MultiIndex next_state;
  double reward = 0.0;
  bool terminal = false;   // episode ends (env rule or time limit)
  bool absorbing = false;  // env-rule termination: TD targets use r alone;
                           // time-limit truncation keeps bootstrapping
};

// Episode rollout surface seen by the training loop: discretized (and
// possibly grouped) state/action indices. Implementations own whatever
// underlying state an episode needs; one instance per run.
class Task {
 public:
  virtual ~Task() = default;
  virtual std::vector<int> state_sizes() const = 0;
  virtual std::vector<int> action_sizes() const = 0;
  virtual MultiIndex reset(std::uint64_t seed) = 0;
  virtual StepOutcome step(const MultiIndex& action) = 0;
  virtual int max_steps() const = 0;
};

// Continuous environment behind a discretization grid and an optional
// dimension partition. The continuous state evolves exactly; only the
// observations handed to the learner are bucketed. Episodes truncate at
// the environment's max_steps (truncation counts as terminal for TD).
class ContinuousTask : public Task {
 public:
  ContinuousTask(std::shared_ptr<const Env> env, DiscretizationGrid grid,
                 DimensionPartition partition)
      : env_(std::move(env)), grid_(std::move(grid)), partition_(std::move(partition)) {
    partition_.validate(static_cast<int>(grid_.state_buckets.size()),
                        static_cast<int>(grid_.action_buckets.size()));
    full_dims_ = grid_.all_dims();
    const int num_state_dims = static_cast<int>(grid_.state_buckets.size());
    num_state_groups_ = partition_.num_state_groups(num_state_dims);
    grouped_sizes_ = partition_.grouped_sizes(full_dims_);
  }

  std::vector<int> state_sizes() const override {
    return {grouped_sizes_.begin(), grouped_sizes_.begin() + num_state_groups_};
  }
  std::vector<int> action_sizes() const override {
    return {grouped_sizes_.begin() + num_state_groups_, grouped_sizes_.end()};
  }
  int max_steps() const override { return env_->spec().max_steps; }

  MultiIndex reset(std::uint64_t seed) override {
    state_ = env_->reset(seed);
    steps_ = 0;
    return group_state(grid_.discretize_state(state_));
  }

  StepOutcome step(const MultiIndex& action) override {
    const MultiIndex full_action = ungroup_action(action);
    const Vec u = grid_.action_from_index(full_action);
    const Transition tr = env_->step(state_, u);
    require(std::isfinite(tr.reward), "ContinuousTask: non-finite reward");
    state_ = tr.next_state;
    ++steps_;
    StepOutcome out;
    out.next_state = group_state(grid_.discretize_state(state_));
    out.reward = tr.reward;
    out.absorbing = tr.terminal;
    out.terminal = tr.terminal || steps_ >= env_->spec().max_steps;
    return out;
  }

  const Env& env() const { return *env_; }
  const DiscretizationGrid& grid() const { return grid_; }
  const DimensionPartition& partition() const { return partition_; }

 private:
  MultiIndex group_state(const MultiIndex& state) const {
    MultiIndex full(full_dims_.size(), 0);
    for (std::size_t i = 0; i < state.size(); ++i) full[i] = state[i];
    MultiIndex grouped = partition_.apply(full, full_dims_);
    return {grouped.begin(), grouped.begin() + num_state_groups_};
  }

  MultiIndex ungroup_action(const MultiIndex& action) const {
    MultiIndex grouped(grouped_sizes_.size(), 0);
    for (std::size_t i = 0; i < action.size(); ++i) grouped[num_state_groups_ + i] = action[i];
    MultiIndex full = partition_.invert(grouped, full_dims_);
    const std::size_t ds = grid_.state_buckets.size();
    return {full.begin() + ds, full.end()};
  }

  std::shared_ptr<const Env> env_;
  DiscretizationGrid grid_;
  DimensionPartition partition_;
  std::vector<int> full_dims_;
  std::vector<int> grouped_sizes_;
  int num_state_groups_ = 0;
  Vec state_;
  int steps_ = 0;
};

// Tabular MDP rollouts: next states sampled from the transition rows, the
// realized reward is the goal/hole/step payoff of the sampled move.
class GridworldTask : public Task {
 public:
  explicit GridworldTask(GridworldSpec spec)
      : spec_(std::move(spec)), mdp_(build_gridworld(spec_)), rng_(0) {
    start_ = spec_.start_state();
    goal_ = spec_.goal_state();
  }

  std::vector<int> state_sizes() const override { return {mdp_.num_states}; }
  std::vector<int> action_sizes() const override { return {mdp_.num_actions}; }
  int max_steps() const override { return spec_.max_steps; }

  MultiIndex reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    state_ = start_;
    steps_ = 0;
    return {state_};
  }

  StepOutcome step(const MultiIndex& action) override {
    const std::int64_t row = mdp_.sa(state_, action[0]);
    const double draw = rng_.uniform();
    double acc = 0.0;
    int next = mdp_.num_states - 1;
    for (int s = 0; s < mdp_.num_states; ++s) {
      acc += mdp_.transition(row, s);
      if (draw < acc) {
        next = s;
        break;
      }
    }
    StepOutcome out;
    out.reward = realized_reward(state_, next);
    const char ch = spec_.rows[next / spec_.width()][next % spec_.width()];
    state_ = next;
    ++steps_;
    out.next_state = {next};
    out.absorbing = ch == 'G' || ch == 'H';
    out.terminal = out.absorbing || steps_ >= spec_.max_steps;
    return out;
  }

  const TabularMdp& mdp() const { return mdp_; }
  const GridworldSpec& spec() const { return spec_; }

 private:
  double realized_reward(int from, int to) const {
    const char from_ch = spec_.rows[from / spec_.width()][from % spec_.width()];
    if (from_ch == 'G' || from_ch == 'H') return 0.0;
    double r = spec_.step_reward;
    if (to == goal_)
      r += spec_.goal_reward;
    else if (spec_.rows[to / spec_.width()][to % spec_.width()] == 'H')
      r += spec_.hole_reward;
    return r;
  }

  GridworldSpec spec_;
  TabularMdp mdp_;
  Rng rng_;
  int start_ = 0;
  int goal_ = 0;
  int state_ = 0;
  int steps_ = 0;
};

}  // namespace lrvf
