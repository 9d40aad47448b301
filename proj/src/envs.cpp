#include "advest/envs.hpp"

#include <cmath>
#include <stdexcept>

namespace advest {

namespace {

int checked_discrete(const Action& action, int n_actions, bool done) {
  if (done)
    throw std::logic_error("step() on a finished episode; call reset()");
  if (!is_discrete(action))
    throw std::invalid_argument("environment expects a discrete action");
  const int a = discrete_id(action);
  if (a < 0 || a >= n_actions)
    throw std::invalid_argument("action id " + std::to_string(a) +
                                " outside [0, " + std::to_string(n_actions) +
                                ")");
  return a;
}

}  // namespace

// --- ChainEnv ---------------------------------------------------------------

ChainEnv::ChainEnv(TabularMDP mdp, int max_episode_steps)
    : mdp_(std::move(mdp)), horizon_(max_episode_steps) {
  mdp_.validate();
  if (horizon_ < 1) throw std::invalid_argument("horizon must be positive");
}

EnvSpec ChainEnv::spec() const {
  return {mdp_.n_states, true, mdp_.n_actions, 0, horizon_};
}

std::vector<double> ChainEnv::one_hot(int s) const {
  std::vector<double> obs(static_cast<std::size_t>(mdp_.n_states), 0.0);
  obs[static_cast<std::size_t>(s)] = 1.0;
  return obs;
}

std::vector<double> ChainEnv::reset(std::uint64_t seed) {
  rng_.set_state(seed);
  state_ = rng_.categorical(mdp_.initial_distribution);
  steps_ = 0;
  done_ = false;
  reached_terminal_ = false;
  return one_hot(state_);
}

Env::StepResult ChainEnv::step(const Action& action) {
  const int a = checked_discrete(action, mdp_.n_actions, done_);
  std::vector<double> row(static_cast<std::size_t>(mdp_.n_states));
  for (int s2 = 0; s2 < mdp_.n_states; ++s2) row[s2] = mdp_.p(state_, a, s2);
  const int next = rng_.categorical(row);
  const double reward = mdp_.r(state_, a);
  state_ = next;
  ++steps_;
  reached_terminal_ = mdp_.is_terminal(state_);
  done_ = reached_terminal_ || steps_ >= horizon_;
  return {one_hot(state_), reward, done_};
}

void ChainEnv::save(BinaryWriter& w) const {
  w.u64(rng_.state());
  w.i64(state_);
  w.i64(steps_);
  w.u8(done_ ? 1 : 0);
  w.u8(reached_terminal_ ? 1 : 0);
}

void ChainEnv::load(BinaryReader& r) {
  rng_.set_state(r.u64());
  state_ = static_cast<int>(r.i64());
  steps_ = static_cast<int>(r.i64());
  done_ = r.u8() != 0;
  reached_terminal_ = r.u8() != 0;
}

// --- SparseGrid -------------------------------------------------------------

EnvSpec SparseGrid::spec() const {
  return {kSize * kSize, true, 4, 0, kHorizon};
}

std::vector<double> SparseGrid::observation() const {
  std::vector<double> obs(kSize * kSize, 0.0);
  obs[static_cast<std::size_t>(y_ * kSize + x_)] = 1.0;
  return obs;
}

std::vector<double> SparseGrid::reset(std::uint64_t /*seed*/) {
  x_ = 0;
  y_ = 0;
  steps_ = 0;
  done_ = false;
  reached_goal_ = false;
  return observation();
}

Env::StepResult SparseGrid::step(const Action& action) {
  const int a = checked_discrete(action, 4, done_);
  static constexpr int dx[4] = {0, 0, -1, 1};  // up, down, left, right
  static constexpr int dy[4] = {-1, 1, 0, 0};
  x_ = std::min(kSize - 1, std::max(0, x_ + dx[a]));
  y_ = std::min(kSize - 1, std::max(0, y_ + dy[a]));
  ++steps_;
  reached_goal_ = (x_ == kSize - 1 && y_ == kSize - 1);
  done_ = reached_goal_ || steps_ >= kHorizon;
  return {observation(), reached_goal_ ? 1.0 : 0.0, done_};
}

void SparseGrid::save(BinaryWriter& w) const {
  w.i64(x_);
  w.i64(y_);
  w.i64(steps_);
  w.u8(done_ ? 1 : 0);
  w.u8(reached_goal_ ? 1 : 0);
}

void SparseGrid::load(BinaryReader& r) {
  x_ = static_cast<int>(r.i64());
  y_ = static_cast<int>(r.i64());
  steps_ = static_cast<int>(r.i64());
  done_ = r.u8() != 0;
  reached_goal_ = r.u8() != 0;
}

// --- CartPoleLike -----------------------------------------------------------

EnvSpec CartPoleLike::spec() const { return {4, true, 2, 0, kHorizon}; }

std::vector<double> CartPoleLike::observation() const {
  return {state_[0], state_[1], state_[2], state_[3]};
}

std::vector<double> CartPoleLike::reset(std::uint64_t seed) {
  Rng rng(seed);
  for (double& v : state_) v = rng.uniform(-0.05, 0.05);
  steps_ = 0;
  done_ = false;
  survived_horizon_ = false;
  return observation();
}

Env::StepResult CartPoleLike::step(const Action& action) {
  const int a = checked_discrete(action, 2, done_);
  const double force = (a == 1) ? kForce : -kForce;
  const double total_mass = kCartMass + kPoleMass;
  const double pole_mass_length = kPoleMass * kPoleHalfLength;

  double x = state_[0], x_dot = state_[1];
  double theta = state_[2], theta_dot = state_[3];
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp =
      (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  x += kTimeStep * x_dot;
  x_dot += kTimeStep * x_acc;
  theta += kTimeStep * theta_dot;
  theta_dot += kTimeStep * theta_acc;
  state_[0] = x;
  state_[1] = x_dot;
  state_[2] = theta;
  state_[3] = theta_dot;

  ++steps_;
  const bool out_of_bounds = x < -kPositionLimit || x > kPositionLimit ||
                             theta < -kAngleLimitRadians ||
                             theta > kAngleLimitRadians;
  survived_horizon_ = !out_of_bounds && steps_ >= kHorizon;
  done_ = out_of_bounds || steps_ >= kHorizon;
  return {observation(), 1.0, done_};
}

void CartPoleLike::save(BinaryWriter& w) const {
  for (double v : state_) w.f64(v);
  w.i64(steps_);
  w.u8(done_ ? 1 : 0);
  w.u8(survived_horizon_ ? 1 : 0);
}

void CartPoleLike::load(BinaryReader& r) {
  for (double& v : state_) v = r.f64();
  steps_ = static_cast<int>(r.i64());
  done_ = r.u8() != 0;
  survived_horizon_ = r.u8() != 0;
}

std::unique_ptr<Env> make_env(const std::string& name) {
  if (name == "cartpole") return std::make_unique<CartPoleLike>();
  if (name == "sparse_grid") return std::make_unique<SparseGrid>();
  if (name.rfind("chain:", 0) == 0)
    return std::make_unique<ChainEnv>(builtin_mdp(name.substr(6)), 2048);
  throw std::invalid_argument(
      "unknown environment '" + name +
      "' (known: cartpole, sparse_grid, chain:<mdp>)");
}

}  // namespace advest
