#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "advest/rng.hpp"
#include "advest/serialize.hpp"
#include "advest/tabular.hpp"
#include "advest/types.hpp"

namespace advest {

struct EnvSpec {
  int observation_dim = 0;
  bool discrete_actions = true;
  int n_actions = 0;    // discrete spaces
  int action_dim = 0;   // continuous spaces
  int max_episode_steps = 0;
};

/// Deterministic, dependency-free environment. An instance is owned by a
/// single actor; all randomness flows from the seed passed to reset().
class Env {
 public:
  struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool done = false;
  };

  virtual ~Env() = default;
  virtual EnvSpec spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Action& action) = 0;
  /// Whether the finished episode counts as a success (goal reached, full
  /// horizon survived, ...). Meaningful once a step returned done = true.
  virtual bool success() const = 0;
  virtual void save(BinaryWriter& w) const = 0;
  virtual void load(BinaryReader& r) = 0;
};

/// Rollout interface over an exact TabularMDP; observations are one-hot
/// state indicators. Episodes end at MDP terminal states or the horizon.
class ChainEnv : public Env {
 public:
  ChainEnv(TabularMDP mdp, int max_episode_steps);

  EnvSpec spec() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const Action& action) override;
  bool success() const override { return reached_terminal_; }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

  const TabularMDP& mdp() const { return mdp_; }
  int current_state() const { return state_; }

 private:
  std::vector<double> one_hot(int s) const;
  TabularMDP mdp_;
  int horizon_;
  Rng rng_{0};
  int state_ = 0;
  int steps_ = 0;
  bool done_ = true;
  bool reached_terminal_ = false;
};

/// 12x12 grid, four moves, single goal cell worth reward 1, horizon 400.
/// Start is the top-left corner, goal the bottom-right; walls clamp moves.
/// Observations are one-hot cell indicators.
class SparseGrid : public Env {
 public:
  static constexpr int kSize = 12;
  static constexpr int kHorizon = 400;

  EnvSpec spec() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const Action& action) override;
  bool success() const override { return reached_goal_; }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  std::vector<double> observation() const;
  int x_ = 0, y_ = 0;
  int steps_ = 0;
  bool done_ = true;
  bool reached_goal_ = false;
};

/// Inverted pendulum on a cart, integrated with explicit Euler steps.
/// Two discrete actions push the cart left or right; reward is +1 per step;
/// the episode ends when the pole or cart leaves its bounds or after 500
/// steps. All constants are fixed here and are artifact constants.
class CartPoleLike : public Env {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kPoleHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kTimeStep = 0.02;
  static constexpr double kAngleLimitRadians = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr double kPositionLimit = 2.4;
  static constexpr int kHorizon = 500;

  EnvSpec spec() const override;
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const Action& action) override;
  bool success() const override { return survived_horizon_; }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r) override;

 private:
  std::vector<double> observation() const;
  double state_[4] = {0, 0, 0, 0};  // x, x_dot, theta, theta_dot
  int steps_ = 0;
  bool done_ = true;
  bool survived_horizon_ = false;
};

/// Environment factory. Known names: "cartpole", "sparse_grid", and
/// "chain:<mdp>" for any builtin MDP name (horizon 2048).
std::unique_ptr<Env> make_env(const std::string& name);

}  // namespace advest
