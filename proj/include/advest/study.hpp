#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "advest/tabular.hpp"
#include "advest/types.hpp"

namespace advest {

/// Per-position sampling statistics of the truncated GAE and of its
/// reward/value decomposition against tabular ground truth. `bias` is the
/// mean of (estimate - exact advantage at the visited state-action pair).
struct StudyRow {
  int t = 0;
  long n = 0;
  double mean_adv = 0.0;
  double std_adv = 0.0;
  double bias = 0.0;
  double std_reward_part = 0.0;
  double std_value_part = 0.0;
};

struct StudyTable {
  std::vector<StudyRow> rows;
};

struct StudyParams {
  EstimatorParams estimator;
  int segment_length = 0;
  long n_rollouts = 0;
  std::uint64_t seed = 0;
};

/// Rolls out `n_rollouts` segments of up to `segment_length` steps under the
/// fixed policy, evaluates value_fn for bootstrapping, and aggregates
/// per-position statistics. Episodes ending before the segment length leave
/// later positions unsampled (their row keeps n = 0 shares). Deterministic
/// for a given seed: per-rollout streams are derived from (seed, index) and
/// reduced in index order.
StudyTable estimator_study(const TabularMDP& mdp, const TabularPolicy& policy,
                           const std::function<double(int)>& value_fn,
                           const StudyParams& params);

/// CSV schema: t,n,mean_adv,std_adv,bias,std_reward_part,std_value_part with
/// a leading "# config_hash=..." comment line.
void write_study_csv(std::ostream& out, const StudyTable& table,
                     std::uint64_t config_hash);

}  // namespace advest
