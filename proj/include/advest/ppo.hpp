#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advest/envs.hpp"
#include "advest/nn.hpp"
#include "advest/trajectory.hpp"
#include "advest/types.hpp"

namespace advest {

/// All hyperparameters of the training loop. Defaults follow the common
/// settings this body of work uses: gamma 0.99, lambda 0.95, clip 0.2,
/// value coefficient 1, entropy coefficient 0.01, Adam at 2.5e-4, 64 actors,
/// 2 epochs.
struct TrainerConfig {
  enum class Algorithm { kPartial, kBaseline };

  double gamma = 0.99;
  double lambda = 0.95;
  int sample_length = 128;  // T
  int partial_coef = 128;   // epsilon; epsilon == T keeps every estimate
  double clip_coef = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  double learning_rate = 2.5e-4;
  int n_actors = 64;
  int epochs = 2;  // K
  int minibatch_size = 256;
  std::int64_t total_env_steps = 300000;
  BootstrapMode bootstrap_mode = BootstrapMode::kValueAtTruncation;
  bool normalize_advantages = false;
  bool value_clip = false;
  std::uint64_t seed = 1;
  std::vector<int> hidden_sizes{64, 64};
  Activation activation = Activation::kTanh;
  Algorithm algorithm = Algorithm::kPartial;
  int checkpoint_every = 0;  // iterations; 0 = final checkpoint only

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  std::int64_t env_steps = 0;
  double wall_clock_s = 0.0;  // reference only, excluded from determinism
  double mean_return_100 = 0.0;
  double success_rate_100 = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double adv_mean = 0.0;
  double adv_std = 0.0;
  double kept_fraction = 0.0;
};

struct RunLog {
  std::vector<IterationRecord> records;
};

/// Fixed runlog CSV schema shared by the CLI and the test suites.
extern const char* const kRunLogHeader;
std::string runlog_row(const IterationRecord& record);

/// -min(ratio * A, clip(ratio, 1-c, 1+c) * A) for one entry, with
/// ratio = exp(logp_new - logp_old).
double clipped_surrogate(double logp_new, double logp_old, double advantage,
                         double clip_coef);

/// Mean squared error against the targets; in clipped mode each entry takes
/// max((v - target)^2, (v_old + clip(v - v_old, -c, c) - target)^2).
double value_loss(std::span<const double> v_new, std::span<const double> v_old,
                  std::span<const double> target, double clip_coef,
                  bool value_clip);

/// One kept sample of the update batch.
struct UpdateRow {
  std::vector<double> observation;
  Action action = 0;
  double behavior_logprob = 0.0;
  double advantage = 0.0;  // raw, un-normalized
  double value_pred = 0.0;
  double value_target = 0.0;
};

/// Flattens kept entries across segments in actor order; masked-out entries
/// never reach the update step.
std::vector<UpdateRow> assemble_update_rows(
    std::vector<Segment>& segments,
    const std::vector<AdvantageBatch>& batches);

struct PpoLossParams {
  double clip_coef = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.01;
  bool value_clip = false;
};

struct LossStats {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;  // policy + value_coef*value - entropy_coef*entropy
};

struct LossGrads {
  std::vector<double> policy_net;
  std::vector<double> log_std;
  std::vector<double> value_net;
};

/// Total PPO loss over one minibatch; `advantages` aligns with `rows` and may
/// be the normalized copy. When `grads` is non-null the analytic gradients
/// are written there (vectors are resized and zeroed first).
LossStats ppo_loss(const PolicyHead& policy, const Mlp& value_net,
                   std::span<const UpdateRow> rows,
                   std::span<const double> advantages,
                   const PpoLossParams& params, LossGrads* grads);

/// Same loss over the subset rows[indices]; avoids gathering minibatch
/// copies during training. `advantages` still aligns with the full `rows`.
LossStats ppo_loss_indexed(const PolicyHead& policy, const Mlp& value_net,
                           std::span<const UpdateRow> rows,
                           std::span<const int> indices,
                           std::span<const double> advantages,
                           const PpoLossParams& params, LossGrads* grads);

using EnvFactory = std::function<std::unique_ptr<Env>()>;

class Trainer;

struct IterationHooks {
  /// Called after each iteration; return false to stop early.
  std::function<bool(const IterationRecord&)> on_record;
  /// Called whenever a checkpoint is due (checkpoint_every and final).
  std::function<void(const Trainer&, int iteration)> on_checkpoint;
};

/// Segment collection, advantage estimation, keep/discard with carryover,
/// and the clipped-surrogate update loop. Rollouts and updates alternate;
/// actors own their environments, the update phase owns the parameters.
class Trainer {
 public:
  Trainer(TrainerConfig config, const EnvFactory& env_factory);

  /// Runs until the env-step budget is exhausted (or a hook stops early) and
  /// returns one record per iteration. Fully deterministic given the seed,
  /// wall-clock column aside.
  RunLog run(const IterationHooks* hooks = nullptr);

  const TrainerConfig& config() const { return config_; }
  const PolicyHead& policy() const { return policy_; }
  const Mlp& value_net() const { return value_; }
  std::int64_t env_steps() const { return env_steps_; }
  int iteration() const { return iteration_; }

  /// Bit-exact state round-trip for checkpoint resume.
  void save_state(BinaryWriter& w) const;
  void load_state(BinaryReader& r);

 private:
  IterationRecord run_iteration(double wall_clock_s);
  void collect_segments(std::vector<Segment>& segments);
  std::uint64_t episode_seed(int actor, std::int64_t episode) const;

  TrainerConfig config_;
  std::vector<std::unique_ptr<Env>> envs_;
  PolicyHead policy_;
  Mlp value_;
  AdamState opt_policy_, opt_log_std_, opt_value_;
  RolloutBuffer buffer_;
  std::vector<Rng> actor_rng_;
  Rng shuffle_rng_;
  std::vector<std::vector<double>> current_obs_;
  std::vector<std::int64_t> episode_index_;
  std::vector<double> episode_return_;
  std::deque<double> recent_returns_;  // last 100 completed episodes
  std::deque<char> recent_success_;
  std::int64_t env_steps_ = 0;
  int iteration_ = 0;
};

/// Convenience wrapper over Trainer.
RunLog train(const TrainerConfig& config, const EnvFactory& env_factory,
             const IterationHooks* hooks = nullptr);

using ActionSampler =
    std::function<Action(std::span<const double> observation, Rng& rng,
                         bool greedy)>;

ActionSampler policy_sampler(const PolicyHead& policy);

struct EvalResult {
  double mean_return = 0.0;
  double success_rate = 0.0;
};

/// Runs n_episodes with per-episode derived seeds; greedy switches the
/// sampler to its mode-seeking branch.
EvalResult evaluate(const ActionSampler& act, Env& env, int n_episodes,
                    std::uint64_t seed, bool greedy);

}  // namespace advest
