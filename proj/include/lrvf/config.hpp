#pragma once

#include "lrvf/env.hpp"
#include "lrvf/grid.hpp"
#include "lrvf/gridworld.hpp"
#include "lrvf/learners.hpp"
#include "lrvf/task.hpp"

#include <json.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <string>

namespace lrvf {

using json = nlohmann::ordered_json;

namespace detail {

// Unknown keys are configuration typos; refuse them.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
  require(j.is_object(), "config: " + context + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail("config: unknown key '" + item.key() + "' in " + context);
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace detail

inline PendulumParams parse_pendulum_params(const json& j) {
  detail::check_keys(j,
                     {"gravity", "mass", "length", "dt", "max_torque", "max_speed",
                      "action_penalty", "upright_bonus", "angle_penalty", "speed_penalty",
                      "max_steps"},
                     "environment.physics (pendulum)");
  PendulumParams p;
  p.gravity = detail::get_or(j, "gravity", p.gravity);
  p.mass = detail::get_or(j, "mass", p.mass);
  p.length = detail::get_or(j, "length", p.length);
  p.dt = detail::get_or(j, "dt", p.dt);
  p.max_torque = detail::get_or(j, "max_torque", p.max_torque);
  p.max_speed = detail::get_or(j, "max_speed", p.max_speed);
  p.action_penalty = detail::get_or(j, "action_penalty", p.action_penalty);
  p.upright_bonus = detail::get_or(j, "upright_bonus", p.upright_bonus);
  p.angle_penalty = detail::get_or(j, "angle_penalty", p.angle_penalty);
  p.speed_penalty = detail::get_or(j, "speed_penalty", p.speed_penalty);
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps);
  return p;
}

inline CartpoleParams parse_cartpole_params(const json& j) {
  detail::check_keys(j,
                     {"gravity", "cart_mass", "pole_mass", "pole_half_length", "max_force", "dt",
                      "position_threshold", "angle_threshold", "velocity_bound",
                      "angular_velocity_bound", "action_penalty", "alive_bonus", "max_steps"},
                     "environment.physics (cartpole)");
  CartpoleParams p;
  p.gravity = detail::get_or(j, "gravity", p.gravity);
  p.cart_mass = detail::get_or(j, "cart_mass", p.cart_mass);
  p.pole_mass = detail::get_or(j, "pole_mass", p.pole_mass);
  p.pole_half_length = detail::get_or(j, "pole_half_length", p.pole_half_length);
  p.max_force = detail::get_or(j, "max_force", p.max_force);
  p.dt = detail::get_or(j, "dt", p.dt);
  p.position_threshold = detail::get_or(j, "position_threshold", p.position_threshold);
  p.angle_threshold = detail::get_or(j, "angle_threshold", p.angle_threshold);
  p.velocity_bound = detail::get_or(j, "velocity_bound", p.velocity_bound);
  p.angular_velocity_bound = detail::get_or(j, "angular_velocity_bound", p.angular_velocity_bound);
  p.action_penalty = detail::get_or(j, "action_penalty", p.action_penalty);
  p.alive_bonus = detail::get_or(j, "alive_bonus", p.alive_bonus);
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps);
  return p;
}

inline MountainCarParams parse_mountain_car_params(const json& j) {
  detail::check_keys(j,
                     {"power", "gravity", "min_position", "max_position", "max_speed",
                      "goal_position", "step_penalty", "goal_bonus", "action_penalty", "max_steps"},
                     "environment.physics (mountain_car)");
  MountainCarParams p;
  p.power = detail::get_or(j, "power", p.power);
  p.gravity = detail::get_or(j, "gravity", p.gravity);
  p.min_position = detail::get_or(j, "min_position", p.min_position);
  p.max_position = detail::get_or(j, "max_position", p.max_position);
  p.max_speed = detail::get_or(j, "max_speed", p.max_speed);
  p.goal_position = detail::get_or(j, "goal_position", p.goal_position);
  p.step_penalty = detail::get_or(j, "step_penalty", p.step_penalty);
  p.goal_bonus = detail::get_or(j, "goal_bonus", p.goal_bonus);
  p.action_penalty = detail::get_or(j, "action_penalty", p.action_penalty);
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps);
  return p;
}

inline GoddardParams parse_goddard_params(const json& j) {
  detail::check_keys(j,
                     {"gravity", "dry_mass", "initial_fuel", "max_thrust", "burn_rate", "drag",
                      "dt", "max_altitude", "min_velocity", "max_velocity", "action_penalty",
                      "max_steps"},
                     "environment.physics (goddard)");
  GoddardParams p;
  p.gravity = detail::get_or(j, "gravity", p.gravity);
  p.dry_mass = detail::get_or(j, "dry_mass", p.dry_mass);
  p.initial_fuel = detail::get_or(j, "initial_fuel", p.initial_fuel);
  p.max_thrust = detail::get_or(j, "max_thrust", p.max_thrust);
  p.burn_rate = detail::get_or(j, "burn_rate", p.burn_rate);
  p.drag = detail::get_or(j, "drag", p.drag);
  p.dt = detail::get_or(j, "dt", p.dt);
  p.max_altitude = detail::get_or(j, "max_altitude", p.max_altitude);
  p.min_velocity = detail::get_or(j, "min_velocity", p.min_velocity);
  p.max_velocity = detail::get_or(j, "max_velocity", p.max_velocity);
  p.action_penalty = detail::get_or(j, "action_penalty", p.action_penalty);
  p.max_steps = detail::get_or(j, "max_steps", p.max_steps);
  return p;
}

inline std::shared_ptr<const Env> make_env(const std::string& name, const json& physics) {
  if (name == "pendulum") return std::make_shared<PendulumEnv>(parse_pendulum_params(physics));
  if (name == "cartpole") return std::make_shared<CartpoleEnv>(parse_cartpole_params(physics));
  if (name == "mountain_car")
    return std::make_shared<MountainCarEnv>(parse_mountain_car_params(physics));
  if (name == "goddard") return std::make_shared<GoddardEnv>(parse_goddard_params(physics));
  fail("config: unknown environment '" + name + "'");
}

struct EnvironmentConfig {
  std::string name;
  json physics = json::object();
  GridworldSpec gridworld;  // only for name == "gridworld"

  bool is_gridworld() const { return name == "gridworld"; }
};

inline EnvironmentConfig parse_environment_config(const json& j) {
  detail::check_keys(j,
                     {"name", "physics", "layout", "layout_file", "slip", "goal_reward",
                      "hole_reward", "step_reward", "discount", "max_steps"},
                     "environment");
  EnvironmentConfig e;
  e.name = j.at("name").get<std::string>();
  if (e.is_gridworld()) {
    require(j.contains("layout") != j.contains("layout_file"),
            "config: gridworld needs exactly one of layout / layout_file");
    if (j.contains("layout"))
      e.gridworld.rows = j.at("layout").get<std::vector<std::string>>();
    else
      e.gridworld.rows = load_grid_file(j.at("layout_file").get<std::string>()).rows;
    e.gridworld.slip = detail::get_or(j, "slip", e.gridworld.slip);
    e.gridworld.goal_reward = detail::get_or(j, "goal_reward", e.gridworld.goal_reward);
    e.gridworld.hole_reward = detail::get_or(j, "hole_reward", e.gridworld.hole_reward);
    e.gridworld.step_reward = detail::get_or(j, "step_reward", e.gridworld.step_reward);
    e.gridworld.discount = detail::get_or(j, "discount", e.gridworld.discount);
    e.gridworld.max_steps = detail::get_or(j, "max_steps", e.gridworld.max_steps);
    e.gridworld.validate();
  } else {
    for (const char* k : {"layout", "layout_file", "slip", "goal_reward", "hole_reward",
                          "step_reward", "discount", "max_steps"})
      require(!j.contains(k),
              std::string("config: key '") + k + "' is only valid for gridworld environments");
    e.physics = detail::get_or(j, "physics", json::object());
    make_env(e.name, e.physics);  // validates name and physics keys
  }
  return e;
}

inline StepSizeSchedule parse_step_size(const json& j) {
  detail::check_keys(j, {"kind", "value", "exponent"}, "learner.step_size");
  StepSizeSchedule s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    s.kind = StepSizeSchedule::Kind::constant;
    s.value = j.at("value").get<double>();
    require(!j.contains("exponent"), "config: constant step size takes no exponent");
  } else if (kind == "polynomial") {
    s.kind = StepSizeSchedule::Kind::polynomial;
    s.value = j.at("value").get<double>();
    s.exponent = j.at("exponent").get<double>();
  } else {
    fail("config: unknown step_size kind '" + kind + "'");
  }
  s.validate();
  return s;
}

inline EpsilonSchedule parse_epsilon(const json& j) {
  detail::check_keys(j, {"initial", "decay", "floor"}, "learner.epsilon");
  EpsilonSchedule e;
  e.initial = j.at("initial").get<double>();
  e.decay = j.at("decay").get<double>();
  e.floor = j.at("floor").get<double>();
  e.validate();
  return e;
}

inline ModelKind parse_model_kind(const std::string& kind) {
  if (kind == "qtable") return ModelKind::qtable;
  if (kind == "mlr") return ModelKind::matrix;
  if (kind == "tlr") return ModelKind::tensor;
  fail("config: unknown learner kind '" + kind + "' (expected qtable, mlr or tlr)");
}

struct LearnerSection {
  ModelKind kind = ModelKind::qtable;
  LearnerConfig config;
};

inline LearnerSection parse_learner_section(const json& j) {
  detail::check_keys(j,
                     {"kind", "discount", "step_size", "epsilon", "rank", "frobenius_weight",
                      "rescale_gradient", "stale_target", "init_scale", "init_seed"},
                     "learner");
  LearnerSection s;
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.config.discount = j.at("discount").get<double>();
  s.config.step_size = parse_step_size(j.at("step_size"));
  if (j.contains("epsilon")) s.config.epsilon = parse_epsilon(j.at("epsilon"));
  s.config.rank = detail::get_or(j, "rank", 1);
  s.config.frobenius_weight = detail::get_or(j, "frobenius_weight", 0.0);
  s.config.rescale_gradient = detail::get_or(j, "rescale_gradient", false);
  s.config.stale_target = detail::get_or(j, "stale_target", false);
  s.config.init_scale = detail::get_or(j, "init_scale", 1.0);
  s.config.init_seed = detail::get_or(j, "init_seed", std::uint64_t{0});
  if (s.kind == ModelKind::qtable)
    require(!j.contains("rank"), "config: qtable learner takes no rank");
  s.config.validate();
  return s;
}

struct EvalConfig {
  int cadence = 100;   // greedy evaluation every N training episodes
  int episodes = 5;    // greedy episodes per evaluation point
};

struct ExperimentConfig {
  EnvironmentConfig environment;
  std::vector<int> state_buckets;  // empty for gridworld
  std::vector<int> action_buckets;
  std::optional<DimensionPartition> partition;
  LearnerSection learner;
  std::int64_t episodes = 0;
  int runs = 1;
  std::uint64_t base_seed = 0;
  EvalConfig eval;
  std::string label;
  json raw;  // parsed source, embedded into model files

  void validate() const {
    require(episodes >= 1, "config: episodes must be >= 1");
    require(runs >= 1, "config: runs must be >= 1");
    require(eval.cadence >= 1, "config: eval.cadence must be >= 1");
    require(eval.episodes >= 1, "config: eval.episodes must be >= 1");
  }
};

inline ExperimentConfig parse_experiment_config(const json& j) {
  detail::check_keys(j,
                     {"environment", "grid", "partition", "learner", "episodes", "runs",
                      "base_seed", "eval", "label"},
                     "experiment");
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.environment = parse_environment_config(j.at("environment"));
  if (cfg.environment.is_gridworld()) {
    require(!j.contains("grid"), "config: gridworld environments take no grid section");
    require(!j.contains("partition"), "config: gridworld environments take no partition");
  } else {
    detail::check_keys(j.at("grid"), {"state_buckets", "action_buckets"}, "grid");
    cfg.state_buckets = j.at("grid").at("state_buckets").get<std::vector<int>>();
    cfg.action_buckets = j.at("grid").at("action_buckets").get<std::vector<int>>();
    if (j.contains("partition")) {
      DimensionPartition p;
      p.groups = j.at("partition").get<std::vector<std::vector<int>>>();
      p.validate(static_cast<int>(cfg.state_buckets.size()),
                 static_cast<int>(cfg.action_buckets.size()));
      cfg.partition = std::move(p);
    }
  }
  cfg.learner = parse_learner_section(j.at("learner"));
  if (cfg.learner.kind != ModelKind::tensor)
    require(!cfg.partition.has_value(), "config: partition only applies to the tlr learner");
  cfg.episodes = j.at("episodes").get<std::int64_t>();
  cfg.runs = detail::get_or(j, "runs", 1);
  cfg.base_seed = detail::get_or(j, "base_seed", std::uint64_t{0});
  if (j.contains("eval")) {
    detail::check_keys(j.at("eval"), {"cadence", "episodes"}, "eval");
    cfg.eval.cadence = detail::get_or(j.at("eval"), "cadence", cfg.eval.cadence);
    cfg.eval.episodes = detail::get_or(j.at("eval"), "episodes", cfg.eval.episodes);
  }
  cfg.label = detail::get_or(j, "label", std::string());
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("config: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    fail("config: JSON parse error in " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

// Rollout task and learner-facing dimensions for a parsed config.
inline std::unique_ptr<Task> make_task(const ExperimentConfig& cfg) {
  if (cfg.environment.is_gridworld())
    return std::make_unique<GridworldTask>(cfg.environment.gridworld);
  std::shared_ptr<const Env> env = make_env(cfg.environment.name, cfg.environment.physics);
  DiscretizationGrid grid =
      DiscretizationGrid::make(env->spec(), cfg.state_buckets, cfg.action_buckets);
  DimensionPartition partition =
      cfg.partition ? *cfg.partition
                    : DimensionPartition::trivial(
                          static_cast<int>(cfg.state_buckets.size() + cfg.action_buckets.size()));
  return std::make_unique<ContinuousTask>(std::move(env), std::move(grid), std::move(partition));
}

inline ModelDims model_dims_of(const Task& task) {
  return ModelDims{task.state_sizes(), task.action_sizes()};
}

inline ValueModel init_model(const ExperimentConfig& cfg, const ModelDims& dims) {
  return init_model_with(cfg.learner.kind, cfg.learner.config, dims);
}

}  // namespace lrvf
