#pragma once

#include <string>
#include <vector>

namespace advest {

/// Exact finite MDP used as ground truth for estimator bias studies.
/// Transition rows must sum to one; terminal states self-loop with zero
/// reward so value and advantage vanish there.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // [s][a][s'], row-major
  std::vector<double> reward;      // [s][a]
  double gamma = 0.99;
  std::vector<char> terminal;               // per state
  std::vector<double> initial_distribution;  // per state

  double p(int s, int a, int s2) const {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) *
                          n_states +
                      s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(static_cast<std::size_t>(s) * n_actions + a) *
                          n_states +
                      s2];
  }
  double r(int s, int a) const {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
  double& r(int s, int a) {
    return reward[static_cast<std::size_t>(s) * n_actions + a];
  }
  bool is_terminal(int s) const { return terminal[s] != 0; }

  /// Throws std::invalid_argument when shapes, row sums (1 +- 1e-12),
  /// sign constraints, or terminal self-loop conventions are violated.
  void validate() const;
};

struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> action_probs;  // [s][a]

  double prob(int s, int a) const {
    return action_probs[static_cast<std::size_t>(s) * n_actions + a];
  }
  double& prob(int s, int a) {
    return action_probs[static_cast<std::size_t>(s) * n_actions + a];
  }
  void validate() const;

  static TabularPolicy uniform(int n_states, int n_actions);
};

/// Solves the Bellman linear system for V^pi. Terminal states are pinned to
/// zero; up to 64 unknowns use a dense direct solve, larger systems an
/// iterative sweep. The returned values satisfy
/// max_s |V - (R^pi + gamma P^pi V)| < 1e-10 or the call throws.
std::vector<double> exact_state_values(const TabularMDP& mdp,
                                       const TabularPolicy& policy);

/// A(s,a) = r(s,a) + gamma * sum_s' P(s'|s,a) V(s') - V(s), flattened [s][a].
std::vector<double> exact_advantage(const TabularMDP& mdp,
                                    const TabularPolicy& policy,
                                    const std::vector<double>& values);

// --- desk-scale MDP catalog ------------------------------------------------

/// Five-state loop with two actions (back/forward); moving forward from the
/// last state pays 1 and teleports to the start. Non-episodic, gamma 0.95.
TabularMDP make_chain5();

/// Five-state episodic walk: action 1 steps toward an absorbing goal state
/// that pays 1 on entry, action 0 steps back. Uniform start over the four
/// non-terminal states, gamma 0.9.
TabularMDP make_walk5();

/// Deterministic six-state ring with a single action and per-state rewards;
/// non-episodic, gamma 0.95. Useful when a noise-free rollout is wanted.
TabularMDP make_ring6();

/// Lookup by name ("chain5", "walk5", "ring6"); throws on unknown names.
TabularMDP builtin_mdp(const std::string& name);

}  // namespace advest
