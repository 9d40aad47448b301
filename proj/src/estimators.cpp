#include "advest/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace advest {

namespace {

void check_params(const EstimatorParams& p) {
  if (!(p.gamma > 0.0 && p.gamma <= 1.0))
    throw std::invalid_argument("gamma must be in (0, 1], got " +
                                std::to_string(p.gamma));
  if (!(p.lambda >= 0.0 && p.lambda <= 1.0))
    throw std::invalid_argument("lambda must be in [0, 1], got " +
                                std::to_string(p.lambda));
}

void check_position(const Segment& seg, int t) {
  if (t < 1 || t > seg.length())
    throw std::out_of_range("position t=" + std::to_string(t) +
                            " outside segment of length " +
                            std::to_string(seg.length()));
}

// TD residual at 0-based index j, honoring episode ends and the truncation
// bootstrap at the segment boundary.
double delta_at(const Segment& seg, int j, const EstimatorParams& p) {
  const Transition& x = seg.transitions[j];
  if (x.done) return x.reward - x.value_pred;
  if (j == seg.length() - 1) {
    if (p.bootstrap_mode == BootstrapMode::kValueAtTruncation)
      return x.reward + p.gamma * seg.bootstrap_value - x.value_pred;
    return x.reward - x.value_pred;
  }
  return x.reward + p.gamma * seg.transitions[j + 1].value_pred - x.value_pred;
}

// Last 0-based index of the episode chunk containing index j0.
int chunk_last(const Segment& seg, int j0) {
  for (int j = j0; j < seg.length(); ++j)
    if (seg.transitions[j].done) return j;
  return seg.length() - 1;
}

}  // namespace

double td_delta(double reward, double value, double next_value,
                bool next_is_terminal, double gamma) {
  const double bootstrap = next_is_terminal ? 0.0 : next_value;
  return reward + gamma * bootstrap - value;
}

double n_step_advantage(const Segment& segment, int t, int k,
                        const EstimatorParams& params) {
  check_params(params);
  check_position(segment, t);
  if (k < 1 || t + k - 1 > segment.length())
    throw std::out_of_range("n-step range t=" + std::to_string(t) +
                            " k=" + std::to_string(k) +
                            " overflows segment of length " +
                            std::to_string(segment.length()));
  double acc = 0.0;
  double w = 1.0;
  for (int l = 0; l < k; ++l) {
    const int j = t - 1 + l;
    acc += w * delta_at(segment, j, params);
    if (segment.transitions[j].done) break;
    w *= params.gamma;
  }
  return acc;
}

double lambda_return(const Segment& segment, int t,
                     const EstimatorParams& params) {
  check_params(params);
  check_position(segment, t);
  const int i0 = t - 1;
  const int e = chunk_last(segment, i0);
  const int n_avail = e - i0 + 1;
  const Transition& last = segment.transitions[e];
  const double tail_value =
      last.done ? 0.0
                : (params.bootstrap_mode == BootstrapMode::kValueAtTruncation
                       ? segment.bootstrap_value
                       : 0.0);

  double reward_sum = 0.0;  // sum_{l<n} gamma^l r_{t+l}
  double gamma_n = 1.0;
  double lambda_w = 1.0;  // lambda^{n-1}
  double result = 0.0;
  for (int n = 1; n <= n_avail; ++n) {
    reward_sum += gamma_n * segment.transitions[i0 + n - 1].reward;
    gamma_n *= params.gamma;
    const double end_value =
        (n < n_avail) ? segment.transitions[i0 + n].value_pred : tail_value;
    const double g_n = reward_sum + gamma_n * end_value;
    const double weight =
        (n < n_avail) ? (1.0 - params.lambda) * lambda_w : lambda_w;
    result += weight * g_n;
    lambda_w *= params.lambda;
  }
  return result;
}

std::vector<double> gae_truncated(const Segment& segment,
                                  const EstimatorParams& params) {
  check_params(params);
  if (segment.length() == 0)
    throw std::out_of_range("gae_truncated: empty segment");
  const int n = segment.length();
  std::vector<double> adv(static_cast<std::size_t>(n));
  double carry = 0.0;
  for (int j = n - 1; j >= 0; --j) {
    const double d = delta_at(segment, j, params);
    carry = segment.transitions[j].done
                ? d
                : d + params.gamma * params.lambda * carry;
    adv[static_cast<std::size_t>(j)] = carry;
  }
  return adv;
}

namespace {

double exponential_form_impl(const Segment& segment, int t,
                             const EstimatorParams& params, bool tail_weight) {
  check_params(params);
  check_position(segment, t);
  if (params.lambda == 1.0)
    throw std::invalid_argument(
        "exponential-form GAE is undefined at lambda = 1");
  const int i0 = t - 1;
  const int n_avail = chunk_last(segment, i0) - i0 + 1;
  double result = 0.0;
  double lambda_w = 1.0;  // lambda^{k-1}
  for (int k = 1; k <= n_avail; ++k) {
    const bool last = (k == n_avail);
    const double weight =
        (tail_weight && last) ? lambda_w : (1.0 - params.lambda) * lambda_w;
    result += weight * n_step_advantage(segment, t, k, params);
    lambda_w *= params.lambda;
  }
  return result;
}

}  // namespace

double gae_exponential_form(const Segment& segment, int t,
                            const EstimatorParams& params) {
  return exponential_form_impl(segment, t, params, /*tail_weight=*/true);
}

double gae_exponential_form_literal(const Segment& segment, int t,
                                    const EstimatorParams& params) {
  return exponential_form_impl(segment, t, params, /*tail_weight=*/false);
}

std::vector<double> gae_complete(const Segment& trajectory,
                                 const EstimatorParams& params) {
  if (trajectory.length() == 0)
    throw std::out_of_range("gae_complete: empty trajectory");
  if (!trajectory.transitions.back().done)
    throw std::invalid_argument(
        "gae_complete requires a trajectory ending in a terminal step");
  EstimatorParams p = params;
  p.bootstrap_mode = BootstrapMode::kZeroAtTruncation;
  return gae_truncated(trajectory, p);
}

double bias_term(const Segment& trajectory, int t, int truncation,
                 const EstimatorParams& params) {
  check_params(params);
  const int d = trajectory.length();
  if (d == 0 || !trajectory.transitions.back().done)
    throw std::invalid_argument(
        "bias_term requires a trajectory ending in a terminal step");
  for (int j = 0; j + 1 < d; ++j)
    if (trajectory.transitions[j].done)
      throw std::invalid_argument(
          "bias_term requires a single-episode trajectory");
  if (t < 1 || t > truncation || truncation > d)
    throw std::out_of_range("bias_term needs 1 <= t <= truncation <= D, got "
                            "t=" + std::to_string(t) +
                            " truncation=" + std::to_string(truncation) +
                            " D=" + std::to_string(d));

  const double gl = params.gamma * params.lambda;
  long double w = 1.0L;
  for (int i = 0; i < truncation - t; ++i) w *= gl;

  // The truncated estimate replaces delta_T by r_T - V(s_T); the leading
  // term of the difference is therefore gamma * V(s_{T+1}).
  long double acc = 0.0L;
  if (truncation < d)
    acc += w * params.gamma *
           static_cast<long double>(
               trajectory.transitions[truncation].value_pred);
  for (int l = truncation - t + 1; l <= d - t; ++l) {
    w *= gl;
    acc += w * static_cast<long double>(delta_at(trajectory, t - 1 + l, params));
  }
  return static_cast<double>(acc);
}

Decomposition decompose(const Segment& segment, int t,
                        const EstimatorParams& params) {
  check_params(params);
  check_position(segment, t);
  const int i0 = t - 1;
  const int e = chunk_last(segment, i0);
  const int m = e - i0;
  const Transition& last = segment.transitions[e];
  const double tail_value =
      last.done ? 0.0
                : (params.bootstrap_mode == BootstrapMode::kValueAtTruncation
                       ? segment.bootstrap_value
                       : 0.0);
  const double gl = params.gamma * params.lambda;

  Decomposition out;
  double w = 1.0;
  double w_m = 1.0;  // (gamma*lambda)^m
  for (int l = 0; l <= m; ++l) {
    if (l == m) w_m = w;
    out.reward_part += w * segment.transitions[i0 + l].reward;
    if (l < m)
      out.value_part += w * segment.transitions[i0 + l + 1].value_pred;
    w *= gl;
  }
  out.value_part = params.gamma * (1.0 - params.lambda) * out.value_part +
                   params.gamma * w_m * tail_value -
                   segment.transitions[i0].value_pred;
  return out;
}

AdvantageBatch normalize_advantages(const AdvantageBatch& batch) {
  const std::size_t n = batch.advantages.size();
  if (batch.keep_mask.size() != n)
    throw std::invalid_argument("normalize_advantages: mask/advantage size "
                                "mismatch");
  long kept = 0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (batch.keep_mask[i]) {
      ++kept;
      mean += batch.advantages[i];
    }
  if (kept < 2)
    throw std::invalid_argument(
        "normalize_advantages needs at least two kept entries, got " +
        std::to_string(kept));
  mean /= static_cast<double>(kept);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (batch.keep_mask[i]) {
      const double d = batch.advantages[i] - mean;
      var += d * d;
    }
  var /= static_cast<double>(kept);
  const double denom = std::sqrt(var) + 1e-8;

  AdvantageBatch out = batch;
  for (std::size_t i = 0; i < n; ++i)
    if (batch.keep_mask[i])
      out.advantages[i] = (batch.advantages[i] - mean) / denom;
  return out;
}

std::vector<double> value_targets(const std::vector<double>& advantages,
                                  const std::vector<double>& value_preds) {
  if (advantages.size() != value_preds.size())
    throw std::invalid_argument("value_targets: length mismatch (" +
                                std::to_string(advantages.size()) + " vs " +
                                std::to_string(value_preds.size()) + ")");
  std::vector<double> out(advantages.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = advantages[i] + value_preds[i];
  return out;
}

}  // namespace advest
