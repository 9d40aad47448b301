#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "advest/ppo.hpp"
#include "advest/tabular.hpp"
#include "advest/types.hpp"

namespace advest {

/// Configuration problems exit with a distinct code at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A training/sweep experiment: one environment, one trainer setup, and the
/// (T, epsilon) grids a sweep should cover. Unknown JSON keys are errors.
struct ExperimentConfig {
  std::string env_name = "cartpole";
  TrainerConfig trainer;
  std::vector<int> sweep_sample_lengths;
  std::vector<int> sweep_partial_coefs;
  int sweep_n_seeds = 3;
};

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin);
ExperimentConfig load_experiment_config(const std::string& path);

/// Hash over the fields that define a training run (environment plus every
/// trainer hyperparameter, including the seed). Stored in checkpoints and in
/// the leading comment of every emitted CSV.
std::uint64_t trainer_config_hash(const std::string& env_name,
                                  const TrainerConfig& trainer);
std::uint64_t experiment_config_hash(const ExperimentConfig& config);

/// Variance-profile run description. Tabular mode samples an exact MDP under
/// a fixed tabular policy and value function; env mode rolls out the policy
/// and value networks of a (possibly checkpointed) trainer setup, where no
/// exact advantage exists and the bias column is reported as nan.
struct ProfileConfig {
  enum class Mode { kTabular, kEnv };
  Mode mode = Mode::kTabular;

  // tabular mode
  std::optional<TabularMDP> mdp;
  std::optional<std::vector<double>> policy_matrix;  // [s][a]; empty = uniform
  enum class ValueSource { kExact, kZero, kVector };
  ValueSource value_source = ValueSource::kExact;
  std::vector<double> value_vector;

  // env mode
  std::optional<ExperimentConfig> experiment;
  std::string checkpoint_path;

  double gamma = 0.99;
  double lambda = 0.95;
  BootstrapMode bootstrap_mode = BootstrapMode::kZeroAtTruncation;
  int sample_length = 500;
  long rollouts = 2000;
  std::uint64_t seed = 1;
};

ProfileConfig parse_profile_config(const std::string& json_text,
                                   const std::string& origin);
ProfileConfig load_profile_config(const std::string& path);
std::uint64_t profile_config_hash(const ProfileConfig& config);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace advest
