#include "advest/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "advest/csv.hpp"
#include "advest/estimators.hpp"

namespace advest {

namespace {

// Stream tags for deriving independent RNG streams from the master seed.
constexpr std::uint64_t kPolicyInitTag = 1;
constexpr std::uint64_t kValueInitTag = 2;
constexpr std::uint64_t kActorTag = 3;
constexpr std::uint64_t kEnvTag = 4;
constexpr std::uint64_t kShuffleTag = 5;
constexpr std::uint64_t kEvalEnvTag = 6;
constexpr std::uint64_t kEvalActTag = 7;

void save_transition(BinaryWriter& w, const Transition& t) {
  w.vec_f64(t.observation);
  if (is_discrete(t.action)) {
    w.u8(0);
    w.i64(discrete_id(t.action));
  } else {
    w.u8(1);
    w.vec_f64(continuous_values(t.action));
  }
  w.f64(t.reward);
  w.u8(t.done ? 1 : 0);
  w.f64(t.value_pred);
  w.f64(t.behavior_logprob);
}

Transition load_transition(BinaryReader& r) {
  Transition t;
  t.observation = r.vec_f64();
  if (r.u8() == 0)
    t.action = static_cast<int>(r.i64());
  else
    t.action = r.vec_f64();
  t.reward = r.f64();
  t.done = r.u8() != 0;
  t.value_pred = r.f64();
  t.behavior_logprob = r.f64();
  return t;
}

}  // namespace

const char* const kRunLogHeader =
    "iteration,env_steps,wall_clock_s,mean_return_100,success_rate_100,"
    "policy_loss,value_loss,entropy,adv_mean,adv_std,kept_fraction";

std::string runlog_row(const IterationRecord& r) {
  std::string row = std::to_string(r.iteration);
  row += ',';
  row += std::to_string(r.env_steps);
  for (const double v :
       {r.wall_clock_s, r.mean_return_100, r.success_rate_100, r.policy_loss,
        r.value_loss, r.entropy, r.adv_mean, r.adv_std, r.kept_fraction}) {
    row += ',';
    row += csv::fmt(v);
  }
  return row;
}

void TrainerConfig::validate() const {
  if (sample_length < 1)
    throw std::invalid_argument("sample_length must be positive");
  if (partial_coef < 1 || partial_coef > sample_length)
    throw std::invalid_argument(
        "partial_coef=" + std::to_string(partial_coef) +
        " must lie in [1, sample_length=" + std::to_string(sample_length) +
        "]");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("lambda must be in [0, 1]");
  if (clip_coef <= 0.0)
    throw std::invalid_argument("clip_coef must be positive");
  if (n_actors < 1) throw std::invalid_argument("n_actors must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (minibatch_size < 1)
    throw std::invalid_argument("minibatch_size must be positive");
  if (total_env_steps < 1)
    throw std::invalid_argument("total_env_steps must be positive");
  if (learning_rate <= 0.0)
    throw std::invalid_argument("learning_rate must be positive");
  if (hidden_sizes.empty())
    throw std::invalid_argument("need at least one hidden layer");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("hidden sizes must be positive");
  if (checkpoint_every < 0)
    throw std::invalid_argument("checkpoint_every must be >= 0");
}

double clipped_surrogate(double logp_new, double logp_old, double advantage,
                         double clip_coef) {
  const double ratio = std::exp(logp_new - logp_old);
  const double clipped =
      std::clamp(ratio, 1.0 - clip_coef, 1.0 + clip_coef) * advantage;
  return -std::min(ratio * advantage, clipped);
}

double value_loss(std::span<const double> v_new, std::span<const double> v_old,
                  std::span<const double> target, double clip_coef,
                  bool value_clip) {
  if (v_new.size() != target.size() ||
      (value_clip && v_old.size() != v_new.size()))
    throw std::invalid_argument("value_loss: batch size mismatch");
  if (v_new.empty()) throw std::invalid_argument("value_loss: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < v_new.size(); ++i) {
    const double unclipped = (v_new[i] - target[i]) * (v_new[i] - target[i]);
    if (!value_clip) {
      acc += unclipped;
      continue;
    }
    const double v_c =
        v_old[i] + std::clamp(v_new[i] - v_old[i], -clip_coef, clip_coef);
    acc += std::max(unclipped, (v_c - target[i]) * (v_c - target[i]));
  }
  return acc / static_cast<double>(v_new.size());
}

std::vector<UpdateRow> assemble_update_rows(
    std::vector<Segment>& segments,
    const std::vector<AdvantageBatch>& batches) {
  if (segments.size() != batches.size())
    throw std::invalid_argument("segment/batch count mismatch");
  std::vector<UpdateRow> rows;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    Segment& seg = segments[s];
    const AdvantageBatch& b = batches[s];
    if (b.size() != seg.length())
      throw std::invalid_argument("advantage batch length mismatch");
    for (int j = 0; j < seg.length(); ++j) {
      if (!b.keep_mask[static_cast<std::size_t>(j)]) continue;
      Transition& t = seg.transitions[static_cast<std::size_t>(j)];
      UpdateRow row;
      row.observation = std::move(t.observation);
      row.action = t.action;
      row.behavior_logprob = t.behavior_logprob;
      row.advantage = b.advantages[static_cast<std::size_t>(j)];
      row.value_pred = t.value_pred;
      row.value_target = b.value_targets[static_cast<std::size_t>(j)];
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

LossStats ppo_loss_indexed(const PolicyHead& policy, const Mlp& value_net,
                           std::span<const UpdateRow> rows,
                           std::span<const int> indices,
                           std::span<const double> advantages,
                           const PpoLossParams& params, LossGrads* grads) {
  const int n = static_cast<int>(indices.size());
  if (n == 0) throw std::invalid_argument("empty minibatch");
  if (advantages.size() != rows.size())
    throw std::invalid_argument("advantages must align with rows");

  const int obs_dim = policy.net().input_dim();
  const int pol_dim = policy.net().output_dim();
  std::vector<double> inputs(static_cast<std::size_t>(n) * obs_dim);
  for (int r = 0; r < n; ++r) {
    const UpdateRow& row = rows[static_cast<std::size_t>(indices[r])];
    if (static_cast<int>(row.observation.size()) != obs_dim)
      throw std::invalid_argument("observation width mismatch");
    std::copy(row.observation.begin(), row.observation.end(),
              inputs.begin() + static_cast<std::size_t>(r) * obs_dim);
  }

  Mlp::Cache policy_cache, value_cache;
  std::vector<double> pol_out, val_out;
  policy.net().forward(inputs.data(), n, pol_out,
                       grads ? &policy_cache : nullptr);
  value_net.forward(inputs.data(), n, val_out, grads ? &value_cache : nullptr);

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> upstream_pol(
      grads ? static_cast<std::size_t>(n) * pol_dim : 0, 0.0);
  std::vector<double> upstream_val(grads ? static_cast<std::size_t>(n) : 0,
                                   0.0);
  std::vector<double> log_std_grad(policy.log_std().size(), 0.0);

  const std::vector<double> lsd = policy.clamped_log_std();
  std::vector<double> ls(static_cast<std::size_t>(pol_dim));

  LossStats stats;
  for (int r = 0; r < n; ++r) {
    const UpdateRow& row = rows[static_cast<std::size_t>(indices[r])];
    const double adv = advantages[static_cast<std::size_t>(indices[r])];
    const std::span<const double> head(
        pol_out.data() + static_cast<std::size_t>(r) * pol_dim,
        static_cast<std::size_t>(pol_dim));

    double logp_new, entropy_row;
    if (policy.kind() == PolicyKind::kDiscrete) {
      log_softmax_row(head, ls);
      logp_new = ls[static_cast<std::size_t>(discrete_id(row.action))];
      entropy_row = 0.0;
      for (double l : ls) entropy_row -= std::exp(l) * l;
    } else {
      logp_new = gaussian_logprob(head, lsd, continuous_values(row.action));
      entropy_row = gaussian_entropy(lsd);
    }

    const double ratio = std::exp(logp_new - row.behavior_logprob);
    const double unclipped = ratio * adv;
    const double clipped =
        std::clamp(ratio, 1.0 - params.clip_coef, 1.0 + params.clip_coef) *
        adv;
    stats.policy +=
        clipped_surrogate(logp_new, row.behavior_logprob, adv,
                          params.clip_coef);
    // d(-min)/dlogp: the clipped branch has zero slope wherever it is the
    // active minimum.
    const double dsurr_dlogp =
        unclipped <= clipped ? -unclipped : 0.0;
    stats.entropy += entropy_row;

    const double v = val_out[static_cast<std::size_t>(r)];
    const double err = v - row.value_target;
    double vloss_row = err * err;
    double dv = 2.0 * err;
    if (params.value_clip) {
      const double v_c =
          row.value_pred +
          std::clamp(v - row.value_pred, -params.clip_coef, params.clip_coef);
      const double cerr = v_c - row.value_target;
      if (cerr * cerr > vloss_row) {
        vloss_row = cerr * cerr;
        dv = std::abs(v - row.value_pred) < params.clip_coef ? 2.0 * cerr
                                                             : 0.0;
      }
    }
    stats.value += vloss_row;

    if (!grads) continue;
    if (policy.kind() == PolicyKind::kDiscrete) {
      const int aid = discrete_id(row.action);
      double* up = upstream_pol.data() + static_cast<std::size_t>(r) * pol_dim;
      for (int j = 0; j < pol_dim; ++j) {
        const double p_j = std::exp(ls[static_cast<std::size_t>(j)]);
        const double dh_dz =
            -p_j * (ls[static_cast<std::size_t>(j)] + entropy_row);
        up[j] = inv_n * (dsurr_dlogp * ((j == aid ? 1.0 : 0.0) - p_j) -
                         params.entropy_coef * dh_dz);
      }
    } else {
      const std::vector<double>& act = continuous_values(row.action);
      double* up = upstream_pol.data() + static_cast<std::size_t>(r) * pol_dim;
      for (int d = 0; d < pol_dim; ++d) {
        const double sigma = std::exp(lsd[static_cast<std::size_t>(d)]);
        const double z = (act[static_cast<std::size_t>(d)] - head[d]) / sigma;
        up[d] = inv_n * dsurr_dlogp * (z / sigma);
        const double raw = policy.log_std()[static_cast<std::size_t>(d)];
        const bool clamp_open = raw > PolicyHead::kLogStdMin &&
                                raw < PolicyHead::kLogStdMax;
        if (clamp_open)
          log_std_grad[static_cast<std::size_t>(d)] +=
              inv_n * (dsurr_dlogp * (z * z - 1.0) - params.entropy_coef);
      }
    }
    upstream_val[static_cast<std::size_t>(r)] =
        inv_n * params.value_coef * dv;
  }

  stats.policy *= inv_n;
  stats.value *= inv_n;
  stats.entropy *= inv_n;
  stats.total = stats.policy + params.value_coef * stats.value -
                params.entropy_coef * stats.entropy;

  if (grads) {
    grads->policy_net.assign(
        static_cast<std::size_t>(policy.net().param_count()), 0.0);
    grads->value_net.assign(
        static_cast<std::size_t>(value_net.param_count()), 0.0);
    grads->log_std = std::move(log_std_grad);
    policy.net().backward(policy_cache, upstream_pol.data(),
                          grads->policy_net.data());
    value_net.backward(value_cache, upstream_val.data(),
                       grads->value_net.data());
  }
  return stats;
}

LossStats ppo_loss(const PolicyHead& policy, const Mlp& value_net,
                   std::span<const UpdateRow> rows,
                   std::span<const double> advantages,
                   const PpoLossParams& params, LossGrads* grads) {
  std::vector<int> indices(rows.size());
  std::iota(indices.begin(), indices.end(), 0);
  return ppo_loss_indexed(policy, value_net, rows, indices, advantages,
                          params, grads);
}

// --- Trainer ----------------------------------------------------------------

Trainer::Trainer(TrainerConfig config, const EnvFactory& env_factory)
    : config_(std::move(config)),
      buffer_(std::max(1, config_.n_actors), std::max(1, config_.sample_length)) {
  config_.validate();
  envs_.reserve(static_cast<std::size_t>(config_.n_actors));
  for (int i = 0; i < config_.n_actors; ++i) envs_.push_back(env_factory());
  const EnvSpec spec = envs_[0]->spec();

  std::vector<int> policy_sizes{spec.observation_dim};
  for (int h : config_.hidden_sizes) policy_sizes.push_back(h);
  policy_sizes.push_back(spec.discrete_actions ? spec.n_actions
                                               : spec.action_dim);
  Mlp policy_net(policy_sizes, config_.activation);
  Rng policy_init(derive_stream(config_.seed, kPolicyInitTag));
  policy_net.init_uniform_fan_in(policy_init);
  policy_ = spec.discrete_actions ? PolicyHead::discrete(std::move(policy_net))
                                  : PolicyHead::gaussian(std::move(policy_net));

  std::vector<int> value_sizes{spec.observation_dim};
  for (int h : config_.hidden_sizes) value_sizes.push_back(h);
  value_sizes.push_back(1);
  value_ = Mlp(value_sizes, config_.activation);
  Rng value_init(derive_stream(config_.seed, kValueInitTag));
  value_.init_uniform_fan_in(value_init);

  opt_policy_ = AdamState(policy_.net().param_count(), config_.learning_rate);
  opt_log_std_ = AdamState(static_cast<int>(policy_.log_std().size()),
                           config_.learning_rate);
  opt_value_ = AdamState(value_.param_count(), config_.learning_rate);

  actor_rng_.reserve(static_cast<std::size_t>(config_.n_actors));
  for (int i = 0; i < config_.n_actors; ++i)
    actor_rng_.emplace_back(
        derive_stream(config_.seed, kActorTag, static_cast<std::uint64_t>(i)));
  shuffle_rng_ = Rng(derive_stream(config_.seed, kShuffleTag));

  current_obs_.resize(static_cast<std::size_t>(config_.n_actors));
  episode_index_.assign(static_cast<std::size_t>(config_.n_actors), 0);
  episode_return_.assign(static_cast<std::size_t>(config_.n_actors), 0.0);
  for (int i = 0; i < config_.n_actors; ++i)
    current_obs_[static_cast<std::size_t>(i)] =
        envs_[static_cast<std::size_t>(i)]->reset(episode_seed(i, 0));
}

std::uint64_t Trainer::episode_seed(int actor, std::int64_t episode) const {
  return derive_stream(config_.seed, kEnvTag, static_cast<std::uint64_t>(actor),
                       static_cast<std::uint64_t>(episode));
}

void Trainer::collect_segments(std::vector<Segment>& segments) {
  segments.clear();
  segments.reserve(static_cast<std::size_t>(config_.n_actors));
  for (int actor = 0; actor < config_.n_actors; ++actor) {
    // Carried transitions keep their behavior log-probs from collection time
    // but their value predictions are refreshed with the current network
    // before advantages are recomputed.
    buffer_.for_each_pending(actor, [this](Transition& t) {
      t.value_pred = value_.evaluate1(t.observation);
    });

    Env& env = *envs_[static_cast<std::size_t>(actor)];
    std::vector<double>& obs = current_obs_[static_cast<std::size_t>(actor)];
    while (!buffer_.full(actor)) {
      const PolicyHead::Sampled sampled =
          policy_.sample(obs, actor_rng_[static_cast<std::size_t>(actor)]);
      Transition tr;
      tr.observation = obs;
      tr.action = sampled.action;
      tr.behavior_logprob = sampled.logprob;
      tr.value_pred = value_.evaluate1(obs);

      const Env::StepResult result = env.step(sampled.action);
      ++env_steps_;
      tr.reward = result.reward;
      tr.done = result.done;
      episode_return_[static_cast<std::size_t>(actor)] += result.reward;
      buffer_.push(actor, std::move(tr));

      if (result.done) {
        recent_returns_.push_back(
            episode_return_[static_cast<std::size_t>(actor)]);
        recent_success_.push_back(env.success() ? 1 : 0);
        while (recent_returns_.size() > 100) {
          recent_returns_.pop_front();
          recent_success_.pop_front();
        }
        episode_return_[static_cast<std::size_t>(actor)] = 0.0;
        ++episode_index_[static_cast<std::size_t>(actor)];
        obs = env.reset(episode_seed(
            actor, episode_index_[static_cast<std::size_t>(actor)]));
      } else {
        obs = result.observation;
      }
    }
    const double bootstrap = value_.evaluate1(obs);
    segments.push_back(buffer_.take_segment(actor, bootstrap));
  }
}

IterationRecord Trainer::run_iteration(double wall_clock_s) {
  std::vector<Segment> segments;
  collect_segments(segments);

  const EstimatorParams est{config_.gamma, config_.lambda,
                            config_.bootstrap_mode};
  const bool partial =
      config_.algorithm == TrainerConfig::Algorithm::kPartial;

  std::vector<AdvantageBatch> batches(segments.size());
  std::vector<std::vector<Transition>> carry_tails(segments.size());
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    AdvantageBatch& b = batches[s];
    b.advantages = gae_truncated(seg, est);
    std::vector<double> preds(static_cast<std::size_t>(seg.length()));
    for (int j = 0; j < seg.length(); ++j)
      preds[static_cast<std::size_t>(j)] =
          seg.transitions[static_cast<std::size_t>(j)].value_pred;
    b.value_targets = value_targets(b.advantages, preds);
    b.t_index.resize(static_cast<std::size_t>(seg.length()));
    for (int j = 0; j < seg.length(); ++j)
      b.t_index[static_cast<std::size_t>(j)] = j + 1;
    if (partial) {
      SplitResult split = split_partial(seg, config_.partial_coef);
      b.keep_mask = std::move(split.keep_mask);
      carry_tails[s] = std::move(split.carry_tail);
    } else {
      b.keep_mask.assign(static_cast<std::size_t>(seg.length()), 1);
    }
  }

  std::vector<UpdateRow> rows = assemble_update_rows(segments, batches);
  if (partial)
    for (std::size_t s = 0; s < segments.size(); ++s)
      if (!carry_tails[s].empty())
        buffer_.carryover(segments[s].actor_id, std::move(carry_tails[s]));

  const std::size_t m = rows.size();
  double adv_mean = 0.0, adv_std = 0.0;
  for (const UpdateRow& r : rows) adv_mean += r.advantage;
  adv_mean /= static_cast<double>(m);
  for (const UpdateRow& r : rows)
    adv_std += (r.advantage - adv_mean) * (r.advantage - adv_mean);
  adv_std = std::sqrt(adv_std / static_cast<double>(m));

  std::vector<double> advantages(m);
  for (std::size_t i = 0; i < m; ++i) advantages[i] = rows[i].advantage;
  if (config_.normalize_advantages) {
    AdvantageBatch flat;
    flat.advantages = advantages;
    flat.value_targets.assign(m, 0.0);
    flat.keep_mask.assign(m, 1);
    flat.t_index.assign(m, 0);
    advantages = normalize_advantages(flat).advantages;
  }

  const PpoLossParams loss_params{config_.clip_coef, config_.value_coef,
                                  config_.entropy_coef, config_.value_clip};
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  LossGrads grads;
  double policy_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0;
  long weight = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    shuffle(order, shuffle_rng_);
    for (std::size_t start = 0; start < m;
         start += static_cast<std::size_t>(config_.minibatch_size)) {
      const std::size_t end =
          std::min(m, start + static_cast<std::size_t>(config_.minibatch_size));
      const std::span<const int> idx(order.data() + start, end - start);
      const LossStats stats = ppo_loss_indexed(policy_, value_, rows, idx,
                                               advantages, loss_params,
                                               &grads);
      opt_policy_.update(policy_.net().params(), grads.policy_net);
      if (policy_.kind() == PolicyKind::kGaussian)
        opt_log_std_.update(policy_.log_std(), grads.log_std);
      opt_value_.update(value_.params(), grads.value_net);

      const long k = static_cast<long>(end - start);
      policy_sum += stats.policy * static_cast<double>(k);
      value_sum += stats.value * static_cast<double>(k);
      entropy_sum += stats.entropy * static_cast<double>(k);
      weight += k;
    }
  }

  ++iteration_;
  IterationRecord rec;
  rec.iteration = iteration_;
  rec.env_steps = env_steps_;
  rec.wall_clock_s = wall_clock_s;
  rec.mean_return_100 =
      recent_returns_.empty()
          ? std::nan("")
          : std::accumulate(recent_returns_.begin(), recent_returns_.end(),
                            0.0) /
                static_cast<double>(recent_returns_.size());
  rec.success_rate_100 =
      recent_success_.empty()
          ? std::nan("")
          : std::accumulate(recent_success_.begin(), recent_success_.end(),
                            0.0) /
                static_cast<double>(recent_success_.size());
  rec.policy_loss = policy_sum / static_cast<double>(weight);
  rec.value_loss = value_sum / static_cast<double>(weight);
  rec.entropy = entropy_sum / static_cast<double>(weight);
  rec.adv_mean = adv_mean;
  rec.adv_std = adv_std;
  rec.kept_fraction =
      static_cast<double>(m) /
      static_cast<double>(static_cast<std::size_t>(config_.n_actors) *
                          config_.sample_length);
  return rec;
}

RunLog Trainer::run(const IterationHooks* hooks) {
  RunLog log;
  const auto start = std::chrono::steady_clock::now();
  bool stopped = false;
  while (!stopped && env_steps_ < config_.total_env_steps) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const IterationRecord rec = run_iteration(elapsed);
    log.records.push_back(rec);
    if (hooks) {
      if (hooks->on_checkpoint && config_.checkpoint_every > 0 &&
          iteration_ % config_.checkpoint_every == 0)
        hooks->on_checkpoint(*this, iteration_);
      if (hooks->on_record && !hooks->on_record(rec)) stopped = true;
    }
  }
  if (hooks && hooks->on_checkpoint) hooks->on_checkpoint(*this, iteration_);
  return log;
}

void Trainer::save_state(BinaryWriter& w) const {
  w.u32(static_cast<std::uint32_t>(config_.n_actors));
  w.i64(env_steps_);
  w.i64(iteration_);
  policy_.save(w);
  value_.save(w);
  opt_policy_.save(w);
  opt_log_std_.save(w);
  opt_value_.save(w);
  w.u64(shuffle_rng_.state());
  for (int actor = 0; actor < config_.n_actors; ++actor) {
    const std::size_t i = static_cast<std::size_t>(actor);
    w.u64(actor_rng_[i].state());
    envs_[i]->save(w);
    w.vec_f64(current_obs_[i]);
    w.i64(episode_index_[i]);
    w.f64(episode_return_[i]);
    // At iteration boundaries a slot holds exactly its carried tail.
    const std::vector<Transition>& pending = buffer_.pending(actor);
    w.u64(pending.size());
    for (const Transition& t : pending) save_transition(w, t);
  }
  w.deque_f64(recent_returns_);
  w.deque_u8(recent_success_);
}

void Trainer::load_state(BinaryReader& r) {
  const std::uint32_t actors = r.u32();
  if (actors != static_cast<std::uint32_t>(config_.n_actors))
    throw std::runtime_error("checkpoint actor count mismatch");
  env_steps_ = r.i64();
  iteration_ = static_cast<int>(r.i64());
  policy_.load(r);
  value_.load(r);
  opt_policy_.load(r);
  opt_log_std_.load(r);
  opt_value_.load(r);
  shuffle_rng_.set_state(r.u64());
  buffer_ = RolloutBuffer(config_.n_actors, config_.sample_length);
  for (int actor = 0; actor < config_.n_actors; ++actor) {
    const std::size_t i = static_cast<std::size_t>(actor);
    actor_rng_[i].set_state(r.u64());
    envs_[i]->load(r);
    current_obs_[i] = r.vec_f64();
    episode_index_[i] = r.i64();
    episode_return_[i] = r.f64();
    const std::uint64_t pending = r.u64();
    if (pending > 0) {
      std::vector<Transition> tail;
      tail.reserve(pending);
      for (std::uint64_t k = 0; k < pending; ++k)
        tail.push_back(load_transition(r));
      buffer_.carryover(actor, std::move(tail));
    }
  }
  recent_returns_ = r.deque_f64();
  recent_success_ = r.deque_u8();
}

RunLog train(const TrainerConfig& config, const EnvFactory& env_factory,
             const IterationHooks* hooks) {
  Trainer trainer(config, env_factory);
  return trainer.run(hooks);
}

ActionSampler policy_sampler(const PolicyHead& policy) {
  // Captured by value: the sampler stays valid after the trainer is gone.
  return [head = policy](std::span<const double> obs, Rng& rng,
                         bool greedy) -> Action {
    if (greedy) return head.greedy(obs);
    return head.sample(obs, rng).action;
  };
}

EvalResult evaluate(const ActionSampler& act, Env& env, int n_episodes,
                    std::uint64_t seed, bool greedy) {
  if (n_episodes < 1)
    throw std::invalid_argument("evaluate needs n_episodes >= 1, got " +
                                std::to_string(n_episodes));
  double return_sum = 0.0;
  double success_sum = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    std::vector<double> obs = env.reset(
        derive_stream(seed, kEvalEnvTag, static_cast<std::uint64_t>(ep)));
    Rng rng(derive_stream(seed, kEvalActTag, static_cast<std::uint64_t>(ep)));
    double ret = 0.0;
    bool done = false;
    while (!done) {
      const Env::StepResult result = env.step(act(obs, rng, greedy));
      ret += result.reward;
      done = result.done;
      obs = result.observation;
    }
    return_sum += ret;
    success_sum += env.success() ? 1.0 : 0.0;
  }
  return {return_sum / n_episodes, success_sum / n_episodes};
}

}  // namespace advest
