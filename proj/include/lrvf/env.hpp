#pragma once

#include "lrvf/common.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace lrvf {

struct DimBounds {
  std::string name;
  double low = 0.0;
  double high = 0.0;
};

struct ContinuousSpec {
  std::vector<DimBounds> state_dims;
  std::vector<DimBounds> action_dims;
  double dt = 0.0;
  int max_steps = 0;

  void validate() const {
    require(dt > 0.0, "ContinuousSpec: dt must be positive");
    require(max_steps >= 1, "ContinuousSpec: max_steps must be >= 1");
    require(state_dims.size() + action_dims.size() >= 2, "ContinuousSpec: needs >= 2 dimensions");
    for (const DimBounds& d : state_dims) require(d.low < d.high, "ContinuousSpec: state bounds");
    for (const DimBounds& d : action_dims) require(d.low < d.high, "ContinuousSpec: action bounds");
  }
};

struct Transition {
  Vec state;
  Vec action;  // after clipping to the action bounds
  double reward = 0.0;
  Vec next_state;
  bool terminal = false;
  bool action_clipped = false;
};

// Wrap to [-pi, pi).
inline double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return theta - two_pi * std::floor((theta + std::numbers::pi) / two_pi);
}

namespace detail {

inline Vec clip_to(const Vec& v, const std::vector<DimBounds>& bounds, bool* clipped) {
  Vec out = v;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double lo = bounds[i].low, hi = bounds[i].high;
    if (out[i] < lo) {
      out[i] = lo;
      *clipped = true;
    } else if (out[i] > hi) {
      out[i] = hi;
      *clipped = true;
    }
  }
  return out;
}

inline void check_finite(const Vec& state, const std::string& env_name) {
  if (!state.allFinite())
    fail(env_name + ": non-finite state produced (check dt and bounds)");
}

}  // namespace detail

// A continuous-control task. step is deterministic given (state, action);
// the only randomness is the seeded reset. Episode truncation at max_steps
// is enforced by the rollout layer, not here.
class Env {
 public:
  virtual ~Env() = default;
  virtual const std::string& name() const = 0;
  virtual const ContinuousSpec& spec() const = 0;
  virtual Vec reset(std::uint64_t seed) const = 0;
  virtual Transition step(const Vec& state, const Vec& action) const = 0;

 protected:
  Transition make_transition(const Vec& state, const Vec& action) const {
    Transition tr;
    tr.state = state;
    tr.action_clipped = false;
    tr.action = detail::clip_to(action, spec().action_dims, &tr.action_clipped);
    return tr;
  }
};

// Torque-limited rigid pendulum, semi-implicit Euler, angle wrapped to
// [-pi, pi) with 0 = upright. The reward pays an uprightness bonus
// upright_bonus * (cos(theta) + 1) / 2 and penalizes angle, speed and
// torque magnitude, so holding the pole up earns a positive return.
struct PendulumParams {
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;
  double action_penalty = 0.001;  // lambda on ||u||^2
  double upright_bonus = 5.0;
  double angle_penalty = 0.1;
  double speed_penalty = 0.01;
  int max_steps = 100;
};

class PendulumEnv : public Env {
 public:
  explicit PendulumEnv(const PendulumParams& p = {}) : params_(p) {
    spec_.state_dims = {{"angle", -std::numbers::pi, std::numbers::pi},
                        {"angular_velocity", -p.max_speed, p.max_speed}};
    spec_.action_dims = {{"torque", -p.max_torque, p.max_torque}};
    spec_.dt = p.dt;
    spec_.max_steps = p.max_steps;
    spec_.validate();
  }

  const std::string& name() const override {
    static const std::string n = "pendulum";
    return n;
  }
  const ContinuousSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t seed) const override {
    Rng rng(seed);
    Vec s(2);
    s[0] = rng.uniform(-std::numbers::pi, std::numbers::pi);
    s[1] = rng.uniform(-1.0, 1.0);
    return s;
  }

  Transition step(const Vec& state, const Vec& action) const override {
    Transition tr = make_transition(state, action);
    const double u = tr.action[0];
    const double theta = state[0], omega = state[1];
    const double accel = 3.0 * params_.gravity / (2.0 * params_.length) * std::sin(theta) +
                         3.0 / (params_.mass * params_.length * params_.length) * u;
    double next_omega = omega + accel * params_.dt;
    next_omega = std::clamp(next_omega, -params_.max_speed, params_.max_speed);
    const double next_theta = wrap_angle(theta + next_omega * params_.dt);
    tr.next_state = Vec(2);
    tr.next_state[0] = next_theta;
    tr.next_state[1] = next_omega;
    detail::check_finite(tr.next_state, name());
    const double bonus = params_.upright_bonus * (std::cos(next_theta) + 1.0) / 2.0;
    tr.reward = bonus - params_.angle_penalty * next_theta * next_theta -
                params_.speed_penalty * next_omega * next_omega -
                params_.action_penalty * u * u;
    tr.terminal = false;
    return tr;
  }

  const PendulumParams& params() const { return params_; }

 private:
  PendulumParams params_;
  ContinuousSpec spec_;
};

// Cart with a hinged pole, continuous force input, explicit Euler. Episodes
// fail (terminal) when the cart leaves the track or the pole passes the
// failure angle; the reward pays staying alive.
struct CartpoleParams {
  double gravity = 9.8;
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double max_force = 10.0;
  double dt = 0.02;
  double position_threshold = 2.4;
  double angle_threshold = 0.2095;
  double velocity_bound = 3.0;          // discretization bound on |xdot|
  double angular_velocity_bound = 3.5;  // discretization bound on |thetadot|
  double action_penalty = 0.001;
  double alive_bonus = 1.0;
  int max_steps = 200;
};

class CartpoleEnv : public Env {
 public:
  explicit CartpoleEnv(const CartpoleParams& p = {}) : params_(p) {
    spec_.state_dims = {{"position", -p.position_threshold, p.position_threshold},
                        {"velocity", -p.velocity_bound, p.velocity_bound},
                        {"angle", -p.angle_threshold, p.angle_threshold},
                        {"angular_velocity", -p.angular_velocity_bound, p.angular_velocity_bound}};
    spec_.action_dims = {{"force", -p.max_force, p.max_force}};
    spec_.dt = p.dt;
    spec_.max_steps = p.max_steps;
    spec_.validate();
  }

  const std::string& name() const override {
    static const std::string n = "cartpole";
    return n;
  }
  const ContinuousSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t seed) const override {
    Rng rng(seed);
    Vec s(4);
    for (int i = 0; i < 4; ++i) s[i] = rng.uniform(-0.05, 0.05);
    return s;
  }

  Transition step(const Vec& state, const Vec& action) const override {
    Transition tr = make_transition(state, action);
    const double force = tr.action[0];
    const double x = state[0], xdot = state[1], theta = state[2], thetadot = state[3];
    const double sin_t = std::sin(theta), cos_t = std::cos(theta);
    const double total_mass = params_.cart_mass + params_.pole_mass;
    const double pole_ml = params_.pole_mass * params_.pole_half_length;
    const double temp = (force + pole_ml * thetadot * thetadot * sin_t) / total_mass;
    const double theta_acc =
        (params_.gravity * sin_t - cos_t * temp) /
        (params_.pole_half_length * (4.0 / 3.0 - params_.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

    tr.next_state = Vec(4);
    tr.next_state[0] = x + params_.dt * xdot;
    tr.next_state[1] = xdot + params_.dt * x_acc;
    tr.next_state[2] = theta + params_.dt * thetadot;
    tr.next_state[3] = thetadot + params_.dt * theta_acc;
    detail::check_finite(tr.next_state, name());

    tr.terminal = std::abs(tr.next_state[0]) > params_.position_threshold ||
                  std::abs(tr.next_state[2]) > params_.angle_threshold;
    tr.reward = params_.alive_bonus - params_.action_penalty * force * force;
    return tr;
  }

  const CartpoleParams& params() const { return params_; }

 private:
  CartpoleParams params_;
  ContinuousSpec spec_;
};

// Under-powered car in a valley, continuous throttle. Reaching the goal
// position pays a bonus and ends the episode; every step costs.
struct MountainCarParams {
  double power = 0.0015;
  double gravity = 0.0025;
  double min_position = -1.2;
  double max_position = 0.6;
  double max_speed = 0.07;
  double goal_position = 0.45;
  double step_penalty = 1.0;
  double goal_bonus = 100.0;
  double action_penalty = 0.001;
  int max_steps = 200;
};

class MountainCarEnv : public Env {
 public:
  explicit MountainCarEnv(const MountainCarParams& p = {}) : params_(p) {
    spec_.state_dims = {{"position", p.min_position, p.max_position},
                        {"velocity", -p.max_speed, p.max_speed}};
    spec_.action_dims = {{"throttle", -1.0, 1.0}};
    spec_.dt = 1.0;
    spec_.max_steps = p.max_steps;
    spec_.validate();
  }

  const std::string& name() const override {
    static const std::string n = "mountain_car";
    return n;
  }
  const ContinuousSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t seed) const override {
    Rng rng(seed);
    Vec s(2);
    s[0] = rng.uniform(-0.6, -0.4);
    s[1] = 0.0;
    return s;
  }

  Transition step(const Vec& state, const Vec& action) const override {
    Transition tr = make_transition(state, action);
    const double u = tr.action[0];
    double velocity = state[1] + u * params_.power - params_.gravity * std::cos(3.0 * state[0]);
    velocity = std::clamp(velocity, -params_.max_speed, params_.max_speed);
    double position = state[0] + velocity;
    position = std::clamp(position, params_.min_position, params_.max_position);
    if (position <= params_.min_position && velocity < 0.0) velocity = 0.0;
    tr.next_state = Vec(2);
    tr.next_state[0] = position;
    tr.next_state[1] = velocity;
    detail::check_finite(tr.next_state, name());
    tr.terminal = position >= params_.goal_position;
    tr.reward = -params_.step_penalty - params_.action_penalty * u * u +
                (tr.terminal ? params_.goal_bonus : 0.0);
    return tr;
  }

  const MountainCarParams& params() const { return params_; }

 private:
  MountainCarParams params_;
  ContinuousSpec spec_;
};

// Vertical rocket ascent: altitude, velocity and remaining fuel, throttle
// action in [0, 1], quadratic drag. Reward is the altitude held each step
// minus the throttle penalty, so the cumulative reward integrates height
// over the flight.
struct GoddardParams {
  double gravity = 1.0;
  double dry_mass = 1.0;
  double initial_fuel = 1.0;
  double max_thrust = 4.0;
  double burn_rate = 1.0;
  double drag = 0.05;
  double dt = 0.05;
  double max_altitude = 10.0;  // discretization bound
  double min_velocity = -5.0;
  double max_velocity = 10.0;
  double action_penalty = 0.001;
  int max_steps = 100;
};

class GoddardEnv : public Env {
 public:
  explicit GoddardEnv(const GoddardParams& p = {}) : params_(p) {
    spec_.state_dims = {{"altitude", 0.0, p.max_altitude},
                        {"velocity", p.min_velocity, p.max_velocity},
                        {"fuel", 0.0, p.initial_fuel}};
    spec_.action_dims = {{"throttle", 0.0, 1.0}};
    spec_.dt = p.dt;
    spec_.max_steps = p.max_steps;
    spec_.validate();
  }

  const std::string& name() const override {
    static const std::string n = "goddard";
    return n;
  }
  const ContinuousSpec& spec() const override { return spec_; }

  Vec reset(std::uint64_t /*seed*/) const override {
    Vec s(3);
    s[0] = 0.0;
    s[1] = 0.0;
    s[2] = params_.initial_fuel;
    return s;
  }

  Transition step(const Vec& state, const Vec& action) const override {
    Transition tr = make_transition(state, action);
    const double u = tr.action[0];
    const double altitude = state[0], velocity = state[1], fuel = state[2];
    const double mass = params_.dry_mass + fuel;
    const double thrust = fuel > 0.0 ? params_.max_thrust * u : 0.0;
    const double accel =
        (thrust - params_.drag * velocity * std::abs(velocity)) / mass - params_.gravity;
    double next_velocity = velocity + accel * params_.dt;
    double next_altitude = altitude + next_velocity * params_.dt;
    if (next_altitude < 0.0) {
      next_altitude = 0.0;
      next_velocity = 0.0;
    }
    next_altitude = std::min(next_altitude, params_.max_altitude);
    next_velocity = std::clamp(next_velocity, params_.min_velocity, params_.max_velocity);
    const double next_fuel = std::max(0.0, fuel - params_.burn_rate * u * params_.dt);
    tr.next_state = Vec(3);
    tr.next_state[0] = next_altitude;
    tr.next_state[1] = next_velocity;
    tr.next_state[2] = next_fuel;
    detail::check_finite(tr.next_state, name());
    tr.terminal = false;
    tr.reward = next_altitude - params_.action_penalty * u * u;
    return tr;
  }

  const GoddardParams& params() const { return params_; }

 private:
  GoddardParams params_;
  ContinuousSpec spec_;
};

}  // namespace lrvf
