#include "advest/tabular.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace advest {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr int kDenseSolveLimit = 64;

void check_distribution(const std::vector<double>& row, int n,
                        const std::string& what) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (row[i] < 0.0)
      throw std::invalid_argument(what + ": negative probability");
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > kRowSumTol)
    throw std::invalid_argument(what + ": probabilities sum to " +
                                std::to_string(sum) + ", expected 1");
}

}  // namespace

void TabularMDP::validate() const {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("MDP needs at least one state and action");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("MDP gamma must be in (0, 1]");
  const std::size_t ns = static_cast<std::size_t>(n_states);
  const std::size_t na = static_cast<std::size_t>(n_actions);
  if (transition.size() != ns * na * ns || reward.size() != ns * na ||
      terminal.size() != ns || initial_distribution.size() != ns)
    throw std::invalid_argument("MDP tensor shapes inconsistent");

  std::vector<double> row(ns);
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      for (int s2 = 0; s2 < n_states; ++s2) row[s2] = p(s, a, s2);
      check_distribution(row, n_states,
                         "transition row s=" + std::to_string(s) +
                             " a=" + std::to_string(a));
      if (is_terminal(s)) {
        if (std::abs(p(s, a, s) - 1.0) > kRowSumTol)
          throw std::invalid_argument("terminal state " + std::to_string(s) +
                                      " must self-loop");
        if (r(s, a) != 0.0)
          throw std::invalid_argument("terminal state " + std::to_string(s) +
                                      " must have zero reward");
      }
    }
  check_distribution(initial_distribution, n_states, "initial distribution");
}

void TabularPolicy::validate() const {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("policy needs at least one state and action");
  if (action_probs.size() !=
      static_cast<std::size_t>(n_states) * n_actions)
    throw std::invalid_argument("policy shape inconsistent");
  std::vector<double> row(static_cast<std::size_t>(n_actions));
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) row[a] = prob(s, a);
    check_distribution(row, n_actions, "policy row s=" + std::to_string(s));
  }
}

TabularPolicy TabularPolicy::uniform(int n_states, int n_actions) {
  TabularPolicy pi;
  pi.n_states = n_states;
  pi.n_actions = n_actions;
  pi.action_probs.assign(
      static_cast<std::size_t>(n_states) * n_actions,
      1.0 / static_cast<double>(n_actions));
  return pi;
}

namespace {

// Gaussian elimination with partial pivoting on the dense system A x = b.
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b,
                                int n) {
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col]))
        pivot = row;
    if (std::abs(a[pivot * n + col]) < 1e-12)
      throw std::runtime_error(
          "Bellman system is singular (gamma = 1 with a non-episodic "
          "chain?)");
    if (pivot != col) {
      for (int k = col; k < n; ++k)
        std::swap(a[pivot * n + k], a[col * n + k]);
      std::swap(b[pivot], b[col]);
    }
    for (int row = col + 1; row < n; ++row) {
      const double f = a[row * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (int k = col; k < n; ++k) a[row * n + k] -= f * a[col * n + k];
      b[row] -= f * b[col];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int row = n - 1; row >= 0; --row) {
    double acc = b[row];
    for (int k = row + 1; k < n; ++k) acc -= a[row * n + k] * x[k];
    x[row] = acc / a[row * n + row];
  }
  return x;
}

// Gauss-Seidel sweeps for systems past the dense-solve size.
std::vector<double> solve_sweep(const std::vector<double>& p_pi,
                                const std::vector<double>& r_pi,
                                double gamma, int n) {
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  for (long iter = 0; iter < 1000000; ++iter) {
    double max_change = 0.0;
    for (int s = 0; s < n; ++s) {
      double acc = r_pi[s];
      for (int s2 = 0; s2 < n; ++s2) acc += gamma * p_pi[s * n + s2] * v[s2];
      max_change = std::max(max_change, std::abs(acc - v[s]));
      v[s] = acc;
    }
    if (max_change < 1e-13) return v;
  }
  throw std::runtime_error("Bellman sweep did not converge");
}

}  // namespace

std::vector<double> exact_state_values(const TabularMDP& mdp,
                                       const TabularPolicy& policy) {
  mdp.validate();
  policy.validate();
  if (policy.n_states != mdp.n_states || policy.n_actions != mdp.n_actions)
    throw std::invalid_argument("policy shape does not match the MDP");

  const int n = mdp.n_states;
  std::vector<int> unknown;  // non-terminal states
  std::vector<int> index_of(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < n; ++s)
    if (!mdp.is_terminal(s)) {
      index_of[s] = static_cast<int>(unknown.size());
      unknown.push_back(s);
    }
  const int m = static_cast<int>(unknown.size());

  std::vector<double> values(static_cast<std::size_t>(n), 0.0);
  if (m == 0) return values;

  // Policy-averaged transition matrix and reward over non-terminal states.
  std::vector<double> p_pi(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> r_pi(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    const int s = unknown[i];
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      r_pi[i] += pa * mdp.r(s, a);
      for (int s2 = 0; s2 < n; ++s2) {
        if (index_of[s2] < 0) continue;  // terminal successor contributes 0
        p_pi[static_cast<std::size_t>(i) * m + index_of[s2]] +=
            pa * mdp.p(s, a, s2);
      }
    }
  }

  std::vector<double> solved;
  if (m <= kDenseSolveLimit) {
    std::vector<double> a(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        a[static_cast<std::size_t>(i) * m + j] =
            (i == j ? 1.0 : 0.0) - mdp.gamma * p_pi[i * m + j];
    solved = solve_dense(std::move(a), r_pi, m);
  } else {
    solved = solve_sweep(p_pi, r_pi, mdp.gamma, m);
  }
  for (int i = 0; i < m; ++i) values[unknown[i]] = solved[i];

  // Bellman residual gate.
  double residual = 0.0;
  for (int s = 0; s < n; ++s) {
    if (mdp.is_terminal(s)) continue;
    double rhs = 0.0;
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double pa = policy.prob(s, a);
      if (pa == 0.0) continue;
      double next = 0.0;
      for (int s2 = 0; s2 < n; ++s2) next += mdp.p(s, a, s2) * values[s2];
      rhs += pa * (mdp.r(s, a) + mdp.gamma * next);
    }
    residual = std::max(residual, std::abs(values[s] - rhs));
  }
  if (residual >= 1e-10)
    throw std::runtime_error("Bellman residual " + std::to_string(residual) +
                             " exceeds 1e-10");
  return values;
}

std::vector<double> exact_advantage(const TabularMDP& mdp,
                                    const TabularPolicy& policy,
                                    const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(mdp.n_states))
    throw std::invalid_argument("value vector shape mismatch");
  (void)policy;
  std::vector<double> adv(
      static_cast<std::size_t>(mdp.n_states) * mdp.n_actions, 0.0);
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      double next = 0.0;
      for (int s2 = 0; s2 < mdp.n_states; ++s2)
        next += mdp.p(s, a, s2) * values[s2];
      adv[static_cast<std::size_t>(s) * mdp.n_actions + a] =
          mdp.r(s, a) + mdp.gamma * next - values[s];
    }
  return adv;
}

TabularMDP make_chain5() {
  TabularMDP m;
  m.n_states = 5;
  m.n_actions = 2;
  m.gamma = 0.95;
  m.transition.assign(5 * 2 * 5, 0.0);
  m.reward.assign(5 * 2, 0.0);
  m.terminal.assign(5, 0);
  m.initial_distribution.assign(5, 0.0);
  m.initial_distribution[0] = 1.0;
  for (int s = 0; s < 5; ++s) {
    // action 0: back, action 1: forward; both slip in place w.p. 0.1
    const int back = std::max(0, s - 1);
    const int fwd = (s + 1) % 5;  // forward from the last state wraps to 0
    m.p(s, 0, back) += 0.9;
    m.p(s, 0, s) += 0.1;
    m.p(s, 1, fwd) += 0.9;
    m.p(s, 1, s) += 0.1;
  }
  m.r(4, 1) = 1.0;  // pay on the wrap-around move
  m.validate();
  return m;
}

TabularMDP make_walk5() {
  TabularMDP m;
  m.n_states = 5;
  m.n_actions = 2;
  m.gamma = 0.9;
  m.transition.assign(5 * 2 * 5, 0.0);
  m.reward.assign(5 * 2, 0.0);
  m.terminal.assign(5, 0);
  m.terminal[4] = 1;
  m.initial_distribution.assign(5, 0.25);
  m.initial_distribution[4] = 0.0;
  for (int s = 0; s < 4; ++s) {
    m.p(s, 0, std::max(0, s - 1)) = 1.0;
    m.p(s, 1, s + 1) = 1.0;
  }
  m.r(3, 1) = 1.0;  // entering the goal
  m.p(4, 0, 4) = 1.0;
  m.p(4, 1, 4) = 1.0;
  m.validate();
  return m;
}

TabularMDP make_ring6() {
  TabularMDP m;
  m.n_states = 6;
  m.n_actions = 1;
  m.gamma = 0.95;
  m.transition.assign(6 * 1 * 6, 0.0);
  m.reward.assign(6, 0.0);
  m.terminal.assign(6, 0);
  m.initial_distribution.assign(6, 0.0);
  m.initial_distribution[0] = 1.0;
  const double rewards[6] = {0.1, 0.9, 0.2, 0.7, 0.3, 0.5};
  for (int s = 0; s < 6; ++s) {
    m.p(s, 0, (s + 1) % 6) = 1.0;
    m.r(s, 0) = rewards[s];
  }
  m.validate();
  return m;
}

TabularMDP builtin_mdp(const std::string& name) {
  if (name == "chain5") return make_chain5();
  if (name == "walk5") return make_walk5();
  if (name == "ring6") return make_ring6();
  throw std::invalid_argument("unknown builtin MDP '" + name +
                              "' (known: chain5, walk5, ring6)");
}

}  // namespace advest
