#include "advest/profile.hpp"

#include <cmath>

#include "advest/checkpoint.hpp"
#include "advest/envs.hpp"
#include "advest/estimators.hpp"
#include "advest/stats.hpp"

namespace advest {

namespace {

constexpr std::uint64_t kProfileStreamTag = 0x50524F46ULL;  // "PROF"

StudyTable profile_with_nets(const ProfileConfig& config) {
  const ExperimentConfig& exp = *config.experiment;
  Trainer trainer(exp.trainer,
                  [&]() { return make_env(exp.env_name); });
  if (!config.checkpoint_path.empty())
    load_checkpoint(config.checkpoint_path, trainer,
                    trainer_config_hash(exp.env_name, exp.trainer));
  const PolicyHead& policy = trainer.policy();
  const Mlp& value = trainer.value_net();
  std::unique_ptr<Env> env = make_env(exp.env_name);

  const EstimatorParams est{config.gamma, config.lambda,
                            config.bootstrap_mode};
  const int horizon = config.sample_length;
  std::vector<RunningStats> adv_acc(horizon), reward_acc(horizon),
      value_acc(horizon);

  for (long rollout = 0; rollout < config.rollouts; ++rollout) {
    Rng rng(derive_stream(config.seed, kProfileStreamTag,
                          static_cast<std::uint64_t>(rollout), 1));
    std::vector<double> obs = env->reset(
        derive_stream(config.seed, kProfileStreamTag,
                      static_cast<std::uint64_t>(rollout), 2));
    Segment seg;
    bool done = false;
    for (int step = 0; step < horizon && !done; ++step) {
      const PolicyHead::Sampled sampled = policy.sample(obs, rng);
      Transition tr;
      tr.observation = obs;
      tr.action = sampled.action;
      tr.behavior_logprob = sampled.logprob;
      tr.value_pred = value.evaluate1(obs);
      const Env::StepResult result = env->step(sampled.action);
      tr.reward = result.reward;
      tr.done = result.done;
      done = result.done;
      obs = result.observation;
      seg.transitions.push_back(std::move(tr));
    }
    seg.bootstrap_value = done ? 0.0 : value.evaluate1(obs);

    const std::vector<double> adv = gae_truncated(seg, est);
    for (int t = 1; t <= seg.length(); ++t) {
      adv_acc[static_cast<std::size_t>(t - 1)].add(
          adv[static_cast<std::size_t>(t - 1)]);
      const Decomposition parts = decompose(seg, t, est);
      reward_acc[static_cast<std::size_t>(t - 1)].add(parts.reward_part);
      value_acc[static_cast<std::size_t>(t - 1)].add(parts.value_part);
    }
  }

  StudyTable table;
  table.rows.resize(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    StudyRow& row = table.rows[static_cast<std::size_t>(t - 1)];
    const RunningStats& a = adv_acc[static_cast<std::size_t>(t - 1)];
    row.t = t;
    row.n = a.n;
    row.bias = std::nan("");  // no exact advantage outside tabular mode
    if (a.n == 0) {
      row.mean_adv = row.std_adv = row.std_reward_part = row.std_value_part =
          std::nan("");
      continue;
    }
    row.mean_adv = a.mean();
    row.std_adv = a.pop_std();
    row.std_reward_part =
        reward_acc[static_cast<std::size_t>(t - 1)].pop_std();
    row.std_value_part = value_acc[static_cast<std::size_t>(t - 1)].pop_std();
  }
  return table;
}

}  // namespace

StudyTable run_profile(const ProfileConfig& config) {
  if (config.mode == ProfileConfig::Mode::kEnv)
    return profile_with_nets(config);

  const TabularMDP& mdp = *config.mdp;
  TabularPolicy policy =
      TabularPolicy::uniform(mdp.n_states, mdp.n_actions);
  if (config.policy_matrix) {
    policy.action_probs = *config.policy_matrix;
    policy.validate();
  }

  std::vector<double> values;
  switch (config.value_source) {
    case ProfileConfig::ValueSource::kExact:
      values = exact_state_values(mdp, policy);
      break;
    case ProfileConfig::ValueSource::kZero:
      values.assign(static_cast<std::size_t>(mdp.n_states), 0.0);
      break;
    case ProfileConfig::ValueSource::kVector:
      values = config.value_vector;
      if (values.size() != static_cast<std::size_t>(mdp.n_states))
        throw ConfigError("value vector length does not match state count");
      break;
  }

  StudyParams params;
  params.estimator = {config.gamma, config.lambda, config.bootstrap_mode};
  params.segment_length = config.sample_length;
  params.n_rollouts = config.rollouts;
  params.seed = config.seed;
  return estimator_study(mdp, policy,
                         [&values](int s) {
                           return values[static_cast<std::size_t>(s)];
                         },
                         params);
}

}  // namespace advest
