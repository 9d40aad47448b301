#pragma once

#include <cstdint>
#include <variant>
#include <vector>

namespace advest {

/// Either a discrete action id or a continuous action vector.
using Action = std::variant<int, std::vector<double>>;

inline bool is_discrete(const Action& a) {
  return std::holds_alternative<int>(a);
}
inline int discrete_id(const Action& a) { return std::get<int>(a); }
inline const std::vector<double>& continuous_values(const Action& a) {
  return std::get<std::vector<double>>(a);
}

/// One environment step as stored in a rollout segment. value_pred and
/// behavior_logprob are frozen at collection time; value_pred may later be
/// refreshed for carried-over steps, behavior_logprob never is.
struct Transition {
  std::vector<double> observation;
  Action action = 0;
  double reward = 0.0;
  bool done = false;
  double value_pred = 0.0;        // V(s_t) at collection time
  double behavior_logprob = 0.0;  // log pi_old(a_t | s_t) at collection time
};

/// Fixed-length rollout of T transitions from one actor. bootstrap_value is
/// V(s_{T+1}) for the observation following the last step, 0 when that step
/// is terminal. carried_count transitions at the front were carried over from
/// the previous segment of the same actor.
struct Segment {
  std::vector<Transition> transitions;
  int carried_count = 0;
  int actor_id = 0;
  double bootstrap_value = 0.0;

  int length() const { return static_cast<int>(transitions.size()); }
};

/// Per-step advantage estimates and value-regression targets together with
/// the keep/discard mask. t_index is the 1-based position within the segment.
struct AdvantageBatch {
  std::vector<double> advantages;
  std::vector<double> value_targets;
  std::vector<char> keep_mask;
  std::vector<int> t_index;

  int size() const { return static_cast<int>(advantages.size()); }
};

/// What stands in for V(s_{T+1}) when a segment ends without termination:
/// kZeroAtTruncation drops the bootstrap entirely (delta_T = r_T - V(s_T)),
/// kValueAtTruncation uses the value prediction of the next observation.
enum class BootstrapMode { kZeroAtTruncation, kValueAtTruncation };

struct EstimatorParams {
  double gamma = 0.99;
  double lambda = 0.95;
  BootstrapMode bootstrap_mode = BootstrapMode::kZeroAtTruncation;
};

}  // namespace advest
