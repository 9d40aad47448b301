#include "advest/verify.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "advest/estimators.hpp"
#include "advest/nn.hpp"
#include "advest/ppo.hpp"
#include "advest/rng.hpp"
#include "advest/tabular.hpp"
#include "advest/trajectory.hpp"

namespace advest {

namespace {

constexpr double kGammaGrid[3] = {0.5, 0.9, 0.99};
constexpr double kLambdaGrid[3] = {0.0, 0.5, 0.95};

Segment random_segment(Rng& rng, int max_len, bool terminated,
                       int min_len = 1) {
  Segment seg;
  const int n =
      min_len + static_cast<int>(rng.below(
                    static_cast<std::uint64_t>(max_len - min_len + 1)));
  seg.transitions.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Transition& t = seg.transitions[static_cast<std::size_t>(j)];
    t.reward = rng.uniform(-1.0, 1.0);
    t.value_pred = rng.uniform(-1.0, 1.0);
    t.done = terminated && j == n - 1;
  }
  seg.bootstrap_value = terminated ? 0.0 : rng.uniform(-1.0, 1.0);
  return seg;
}

EstimatorParams grid_params(long index, BootstrapMode mode) {
  EstimatorParams p;
  p.gamma = kGammaGrid[index % 3];
  p.lambda = kLambdaGrid[(index / 3) % 3];
  p.bootstrap_mode = mode;
  return p;
}

// Independent route: the direct double sum over TD residuals, written
// without the backward recursion.
std::vector<double> direct_sum_gae(const Segment& seg,
                                   const EstimatorParams& p) {
  const int n = seg.length();
  std::vector<double> delta(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const Transition& x = seg.transitions[static_cast<std::size_t>(j)];
    double next_v = 0.0;
    if (!x.done && j + 1 < n)
      next_v = seg.transitions[static_cast<std::size_t>(j) + 1].value_pred;
    else if (!x.done && p.bootstrap_mode == BootstrapMode::kValueAtTruncation)
      next_v = seg.bootstrap_value;
    delta[static_cast<std::size_t>(j)] = x.reward + p.gamma * next_v -
                                         x.value_pred;
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (int j = t; j < n; ++j) {
      acc += w * delta[static_cast<std::size_t>(j)];
      if (seg.transitions[static_cast<std::size_t>(j)].done) break;
      w *= p.gamma * p.lambda;
    }
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

std::string fmt_err(double err, double tol) {
  std::ostringstream ss;
  ss << "max error " << err << " (tolerance " << tol << ")";
  return ss.str();
}

CheckResult check_recursion_vs_direct(const EstimatorRoutes& routes) {
  Rng rng(20240901);
  double max_err = 0.0;
  for (long i = 0; i < 1000; ++i) {
    const Segment seg = random_segment(rng, 64, false);
    const EstimatorParams p = grid_params(
        i, i % 2 == 0 ? BootstrapMode::kZeroAtTruncation
                      : BootstrapMode::kValueAtTruncation);
    const std::vector<double> rec = routes.gae(seg, p);
    const std::vector<double> direct = direct_sum_gae(seg, p);
    for (int t = 0; t < seg.length(); ++t)
      max_err = std::max(max_err,
                         std::abs(rec[static_cast<std::size_t>(t)] -
                                  direct[static_cast<std::size_t>(t)]));
  }
  return {"estimators.recursion_vs_direct", max_err < 1e-10,
          fmt_err(max_err, 1e-10)};
}

CheckResult check_exponential_form(const EstimatorRoutes& routes) {
  Rng rng(20240902);
  double max_err = 0.0;
  for (long i = 0; i < 1000; ++i) {
    const Segment seg = random_segment(rng, 64, false);
    const EstimatorParams p = grid_params(
        i, i % 2 == 0 ? BootstrapMode::kZeroAtTruncation
                      : BootstrapMode::kValueAtTruncation);
    const std::vector<double> rec = routes.gae(seg, p);
    for (int t = 1; t <= seg.length(); ++t)
      max_err = std::max(
          std::abs(gae_exponential_form(seg, t, p) -
                   rec[static_cast<std::size_t>(t - 1)]),
          max_err);
  }
  return {"estimators.exponential_form", max_err < 1e-8,
          fmt_err(max_err, 1e-8)};
}

CheckResult check_bias_identity(const EstimatorRoutes& routes) {
  Rng rng(20240903);
  double max_rel = 0.0;   // closed-form identity
  double max_diff = 0.0;  // explicit sum vs complete-minus-truncated route
  for (long i = 0; i < 1000; ++i) {
    const Segment traj = random_segment(rng, 64, true, 2);
    const int d = traj.length();
    const int trunc = 1 + static_cast<int>(rng.below(
                              static_cast<std::uint64_t>(d - 1)));
    const EstimatorParams p =
        grid_params(i, BootstrapMode::kZeroAtTruncation);

    const double b_trunc = bias_term(traj, trunc, trunc, p);
    const std::vector<double> complete = routes.gae(traj, p);
    Segment prefix;
    prefix.transitions.assign(traj.transitions.begin(),
                              traj.transitions.begin() + trunc);
    prefix.bootstrap_value = 0.0;
    const std::vector<double> truncated = routes.gae(prefix, p);
    for (int t = 1; t <= trunc; ++t) {
      const double b_t = bias_term(traj, t, trunc, p);
      const double closed =
          std::pow(p.gamma * p.lambda, trunc - t) * b_trunc;
      max_rel = std::max(max_rel,
                         std::abs(b_t - closed) /
                             std::max({1.0, std::abs(b_t),
                                       std::abs(closed)}));
      const double diff = complete[static_cast<std::size_t>(t - 1)] -
                          truncated[static_cast<std::size_t>(t - 1)];
      max_diff = std::max(max_diff, std::abs(b_t - diff) /
                                        std::max(1.0, std::abs(diff)));
    }
  }
  const bool ok = max_rel < 1e-12 && max_diff < 1e-10;
  std::ostringstream ss;
  ss << "closed-form rel err " << max_rel
     << " (tol 1e-12), route diff " << max_diff << " (tol 1e-10)";
  return {"estimators.bias_identity", ok, ss.str()};
}

CheckResult check_decomposition(const EstimatorRoutes& routes) {
  Rng rng(20240904);
  double max_err = 0.0;
  for (long i = 0; i < 1000; ++i) {
    const Segment seg = random_segment(rng, 64, false);
    const EstimatorParams p = grid_params(
        i, i % 2 == 0 ? BootstrapMode::kZeroAtTruncation
                      : BootstrapMode::kValueAtTruncation);
    const std::vector<double> rec = routes.gae(seg, p);
    for (int t = 1; t <= seg.length(); ++t) {
      const Decomposition parts = decompose(seg, t, p);
      max_err = std::max(max_err,
                         std::abs(parts.reward_part + parts.value_part -
                                  rec[static_cast<std::size_t>(t - 1)]));
    }
  }
  return {"estimators.decomposition", max_err < 1e-10,
          fmt_err(max_err, 1e-10)};
}

CheckResult check_gradients() {
  double worst = 0.0;

  // Plain network under a squared loss against fixed targets.
  {
    Rng rng(20240905);
    Mlp net({4, 8, 3}, Activation::kTanh);
    net.init_uniform_fan_in(rng);
    const int batch = 5;
    std::vector<double> x(4 * batch), target(3 * batch);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : target) v = rng.uniform(-1.0, 1.0);
    auto loss_value = [&]() {
      std::vector<double> out;
      net.forward(x.data(), batch, out);
      double acc = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i)
        acc += (out[i] - target[i]) * (out[i] - target[i]);
      return acc / static_cast<double>(batch);
    };
    Mlp::Cache cache;
    std::vector<double> out;
    net.forward(x.data(), batch, out, &cache);
    std::vector<double> upstream(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      upstream[i] = 2.0 * (out[i] - target[i]) / batch;
    std::vector<double> grad(static_cast<std::size_t>(net.param_count()),
                             0.0);
    net.backward(cache, upstream.data(), grad.data());
    worst = std::max(
        worst,
        finite_difference_check(net.params(), loss_value, grad).max_rel_error);
  }

  // Full PPO loss, discrete and gaussian heads.
  for (const bool discrete : {true, false}) {
    Rng rng(discrete ? 20240906 : 20240907);
    const int obs_dim = 4, act_dim = 3, batch = 8;
    Mlp pnet({obs_dim, 8, act_dim}, Activation::kTanh);
    pnet.init_uniform_fan_in(rng);
    PolicyHead policy = discrete ? PolicyHead::discrete(std::move(pnet))
                                 : PolicyHead::gaussian(std::move(pnet));
    if (!discrete)
      for (double& ls : policy.log_std()) ls = rng.uniform(-1.0, 0.5);
    Mlp value({obs_dim, 8, 1}, Activation::kTanh);
    value.init_uniform_fan_in(rng);

    std::vector<UpdateRow> rows(batch);
    std::vector<double> advs(batch);
    for (int i = 0; i < batch; ++i) {
      UpdateRow& row = rows[static_cast<std::size_t>(i)];
      row.observation.resize(obs_dim);
      for (double& v : row.observation) v = rng.uniform(-1.0, 1.0);
      if (discrete)
        row.action = static_cast<int>(rng.below(act_dim));
      else {
        std::vector<double> a(act_dim);
        for (double& v : a) v = rng.uniform(-1.0, 1.0);
        row.action = std::move(a);
      }
      row.behavior_logprob = policy.logprob(row.observation, row.action) +
                             rng.uniform(-0.2, 0.2);
      row.advantage = rng.uniform(-1.0, 1.0);
      row.value_pred = rng.uniform(-1.0, 1.0);
      row.value_target = rng.uniform(-1.0, 1.0);
      advs[static_cast<std::size_t>(i)] = row.advantage;
    }
    const PpoLossParams params{0.2, 1.0, 0.01, true};
    auto loss_value = [&]() {
      return ppo_loss(policy, value, rows, advs, params, nullptr).total;
    };
    LossGrads grads;
    ppo_loss(policy, value, rows, advs, params, &grads);
    worst = std::max(worst,
                     finite_difference_check(policy.net().params(), loss_value,
                                             grads.policy_net)
                         .max_rel_error);
    worst = std::max(
        worst,
        finite_difference_check(value.params(), loss_value, grads.value_net)
            .max_rel_error);
    if (!discrete)
      worst = std::max(worst,
                       finite_difference_check(policy.log_std(), loss_value,
                                               grads.log_std)
                           .max_rel_error);
  }
  return {"nn.gradient_check", worst < 1e-4, fmt_err(worst, 1e-4)};
}

CheckResult check_tabular_oracle() {
  std::ostringstream detail;
  bool ok = true;

  // Deterministic five-state walk: V(s_i) = 0.9^(4-i) in closed form
  // (1-based states, reward 1 on the final transition into absorbing s_5).
  {
    TabularMDP m;
    m.n_states = 5;
    m.n_actions = 1;
    m.gamma = 0.9;
    m.transition.assign(5 * 5, 0.0);
    m.reward.assign(5, 0.0);
    m.terminal.assign(5, 0);
    m.terminal[4] = 1;
    m.initial_distribution.assign(5, 0.0);
    m.initial_distribution[0] = 1.0;
    for (int s = 0; s < 4; ++s) m.p(s, 0, s + 1) = 1.0;
    m.p(4, 0, 4) = 1.0;
    m.r(3, 0) = 1.0;
    const TabularPolicy pi = TabularPolicy::uniform(5, 1);
    const std::vector<double> v = exact_state_values(m, pi);
    double err = 0.0;
    for (int i = 1; i <= 4; ++i)
      err = std::max(err, std::abs(v[static_cast<std::size_t>(i - 1)] -
                                   std::pow(0.9, 4 - i)));
    if (err > 1e-12) {
      ok = false;
      detail << "closed-form chain error " << err << "; ";
    }
  }

  // Policy-weighted advantage must vanish state-wise.
  {
    const TabularMDP m = make_chain5();
    TabularPolicy pi = TabularPolicy::uniform(m.n_states, m.n_actions);
    for (int s = 0; s < m.n_states; ++s) {
      pi.prob(s, 0) = 0.2;
      pi.prob(s, 1) = 0.8;
    }
    const std::vector<double> v = exact_state_values(m, pi);
    const std::vector<double> adv = exact_advantage(m, pi, v);
    double err = 0.0;
    for (int s = 0; s < m.n_states; ++s) {
      double mean = 0.0;
      for (int a = 0; a < m.n_actions; ++a)
        mean += pi.prob(s, a) *
                adv[static_cast<std::size_t>(s) * m.n_actions + a];
      err = std::max(err, std::abs(mean));
    }
    if (err > 1e-10) {
      ok = false;
      detail << "policy-weighted advantage " << err << "; ";
    }
  }

  // Zero rewards give the homogeneous solution.
  {
    TabularMDP m = make_chain5();
    m.reward.assign(m.reward.size(), 0.0);
    const TabularPolicy pi = TabularPolicy::uniform(m.n_states, m.n_actions);
    const std::vector<double> v = exact_state_values(m, pi);
    for (double x : v)
      if (std::abs(x) > 1e-12) {
        ok = false;
        detail << "zero-reward V not zero; ";
        break;
      }
  }

  if (ok) detail << "closed forms and consistency hold";
  return {"oracle.tabular", ok, detail.str()};
}

CheckResult check_carryover_bookkeeping() {
  bool ok = true;
  std::ostringstream detail;
  const int setups[3][2] = {{8, 3}, {8, 4}, {512, 64}};
  for (const auto& setup : setups) {
    const int t_len = setup[0];
    const int eps = setup[1];
    std::vector<long> kept_count;  // per global index
    std::vector<Transition> pending;
    long next_index = 0;
    for (int iter = 0; iter < 50; ++iter) {
      Segment seg;
      seg.transitions = pending;
      pending.clear();
      while (seg.length() < t_len) {
        Transition t;
        t.observation = {static_cast<double>(next_index++)};
        seg.transitions.push_back(std::move(t));
      }
      kept_count.resize(static_cast<std::size_t>(next_index), 0);
      const SplitResult split = split_partial(seg, eps);
      for (int j = 0; j < t_len; ++j)
        if (split.keep_mask[static_cast<std::size_t>(j)])
          ++kept_count[static_cast<std::size_t>(
              seg.transitions[static_cast<std::size_t>(j)].observation[0])];
      pending = split.carry_tail;
    }
    std::set<long> still_pending;
    for (const Transition& t : pending)
      still_pending.insert(static_cast<long>(t.observation[0]));
    for (long i = 0; i < next_index; ++i) {
      const long expected = still_pending.count(i) ? 0 : 1;
      if (kept_count[static_cast<std::size_t>(i)] != expected) {
        ok = false;
        detail << "T=" << t_len << " eps=" << eps << ": index " << i
               << " kept " << kept_count[static_cast<std::size_t>(i)]
               << " times (expected " << expected << "); ";
        break;
      }
    }
  }
  if (ok) detail << "every sample kept exactly once";
  return {"trajectory.bookkeeping", ok, detail.str()};
}

}  // namespace

bool all_passed(const std::vector<CheckResult>& results) {
  for (const CheckResult& r : results)
    if (!r.passed) return false;
  return true;
}

std::vector<CheckResult> run_verification(const std::string& filter,
                                          const EstimatorRoutes* routes) {
  EstimatorRoutes defaults;
  defaults.gae = [](const Segment& seg, const EstimatorParams& p) {
    return gae_truncated(seg, p);
  };
  const EstimatorRoutes& r = routes && routes->gae ? *routes : defaults;

  std::vector<CheckResult> results;
  auto want = [&filter](const std::string& name) {
    return filter.empty() || name.find(filter) != std::string::npos;
  };
  if (want("estimators.recursion_vs_direct"))
    results.push_back(check_recursion_vs_direct(r));
  if (want("estimators.exponential_form"))
    results.push_back(check_exponential_form(r));
  if (want("estimators.bias_identity"))
    results.push_back(check_bias_identity(r));
  if (want("estimators.decomposition"))
    results.push_back(check_decomposition(r));
  if (want("nn.gradient_check")) results.push_back(check_gradients());
  if (want("oracle.tabular")) results.push_back(check_tabular_oracle());
  if (want("trajectory.bookkeeping"))
    results.push_back(check_carryover_bookkeeping());
  return results;
}

}  // namespace advest
