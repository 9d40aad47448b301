#include "advest/study.hpp"

#include <cmath>
#include <stdexcept>

#include "advest/csv.hpp"
#include "advest/estimators.hpp"
#include "advest/rng.hpp"
#include "advest/stats.hpp"

namespace advest {

namespace {

constexpr std::uint64_t kStudyStreamTag = 0x5354554459ULL;  // "STUDY"

}  // namespace

StudyTable estimator_study(const TabularMDP& mdp, const TabularPolicy& policy,
                           const std::function<double(int)>& value_fn,
                           const StudyParams& params) {
  mdp.validate();
  policy.validate();
  if (params.segment_length < 1)
    throw std::invalid_argument("segment_length must be positive");
  if (params.n_rollouts < 100)
    throw std::invalid_argument("need at least 100 rollouts, got " +
                                std::to_string(params.n_rollouts));

  const std::vector<double> exact_v = exact_state_values(mdp, policy);
  const std::vector<double> exact_adv = exact_advantage(mdp, policy, exact_v);

  const int horizon = params.segment_length;
  std::vector<RunningStats> adv_acc(horizon), reward_acc(horizon),
      value_acc(horizon), bias_acc(horizon);

  std::vector<double> policy_row(static_cast<std::size_t>(mdp.n_actions));
  std::vector<double> trans_row(static_cast<std::size_t>(mdp.n_states));
  std::vector<int> states, actions;

  for (long rollout = 0; rollout < params.n_rollouts; ++rollout) {
    Rng rng(derive_stream(params.seed, kStudyStreamTag,
                          static_cast<std::uint64_t>(rollout)));
    int s = rng.categorical(mdp.initial_distribution);
    if (mdp.is_terminal(s)) continue;  // degenerate start, no samples

    Segment seg;
    states.clear();
    actions.clear();
    bool terminated = false;
    for (int step = 0; step < horizon && !terminated; ++step) {
      for (int a = 0; a < mdp.n_actions; ++a)
        policy_row[static_cast<std::size_t>(a)] = policy.prob(s, a);
      const int a = rng.categorical(policy_row);
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        trans_row[static_cast<std::size_t>(s2)] = mdp.p(s, a, s2);
      const int next = rng.categorical(trans_row);
      terminated = mdp.is_terminal(next);

      Transition tr;
      tr.action = a;
      tr.reward = mdp.r(s, a);
      tr.done = terminated;
      tr.value_pred = value_fn(s);
      seg.transitions.push_back(std::move(tr));
      states.push_back(s);
      actions.push_back(a);
      s = next;
    }
    seg.bootstrap_value = terminated ? 0.0 : value_fn(s);

    const std::vector<double> adv = gae_truncated(seg, params.estimator);
    for (int t = 1; t <= seg.length(); ++t) {
      const std::size_t i = static_cast<std::size_t>(t - 1);
      adv_acc[i].add(adv[i]);
      const double exact =
          exact_adv[static_cast<std::size_t>(states[i]) * mdp.n_actions +
                    actions[i]];
      bias_acc[i].add(adv[i] - exact);
      const Decomposition parts = decompose(seg, t, params.estimator);
      reward_acc[i].add(parts.reward_part);
      value_acc[i].add(parts.value_part);
    }
  }

  StudyTable table;
  table.rows.resize(static_cast<std::size_t>(horizon));
  for (int t = 1; t <= horizon; ++t) {
    StudyRow& row = table.rows[static_cast<std::size_t>(t - 1)];
    const RunningStats& a = adv_acc[static_cast<std::size_t>(t - 1)];
    row.t = t;
    row.n = a.n;
    if (a.n == 0) {
      row.mean_adv = row.std_adv = row.bias = row.std_reward_part =
          row.std_value_part = std::nan("");
      continue;
    }
    row.mean_adv = a.mean();
    row.std_adv = a.pop_std();
    row.bias = bias_acc[static_cast<std::size_t>(t - 1)].mean();
    row.std_reward_part = reward_acc[static_cast<std::size_t>(t - 1)].pop_std();
    row.std_value_part = value_acc[static_cast<std::size_t>(t - 1)].pop_std();
  }
  return table;
}

void write_study_csv(std::ostream& out, const StudyTable& table,
                     std::uint64_t config_hash) {
  csv::write_config_hash(out, config_hash);
  out << "t,n,mean_adv,std_adv,bias,std_reward_part,std_value_part\n";
  for (const StudyRow& r : table.rows) {
    out << r.t << ',' << r.n << ',' << csv::fmt(r.mean_adv) << ','
        << csv::fmt(r.std_adv) << ',' << csv::fmt(r.bias) << ','
        << csv::fmt(r.std_reward_part) << ',' << csv::fmt(r.std_value_part)
        << '\n';
  }
}

}  // namespace advest
