#pragma once

#include <span>
#include <vector>

#include "advest/types.hpp"

namespace advest {

/// Value predictor over raw observations. Implementations must be
/// deterministic for fixed parameters and finite on finite input.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual double evaluate(std::span<const double> observation) const = 0;
};

/// One-step TD residual r_t + gamma * v_next - v_t; v_next is replaced by 0
/// when the next state is terminal.
double td_delta(double reward, double value, double next_value,
                bool next_is_terminal, double gamma);

/// Sum of k discounted TD residuals starting at 1-based position t.
/// Episode boundaries inside the range cut the sum (no bootstrapping across).
double n_step_advantage(const Segment& segment, int t, int k,
                        const EstimatorParams& params);

/// Finite-horizon lambda-return over the remaining segment (or episode chunk)
/// from 1-based position t: lambda^{N-1} G^(N) + (1-lambda) sum lambda^{n-1} G^(n).
double lambda_return(const Segment& segment, int t,
                     const EstimatorParams& params);

/// Truncated GAE over the whole segment by backward recursion
/// A_t = delta_t + gamma*lambda*A_{t+1}, reset at done flags, bootstrap at the
/// truncation point per params.bootstrap_mode. Returns one value per step.
std::vector<double> gae_truncated(const Segment& segment,
                                  const EstimatorParams& params);

/// Truncated GAE at one position as an exponentially weighted sum of n-step
/// advantage estimates, with the longest estimate carrying the lambda-return
/// tail weight lambda^{K-1}. Algebraically equal to gae_truncated; kept as an
/// independent computation route. Rejects lambda == 1.
double gae_exponential_form(const Segment& segment, int t,
                            const EstimatorParams& params);

/// Plain weighting (1-lambda) * sum_k lambda^{k-1} A^(k) without the tail
/// weight. Differs from gae_truncated by lambda^K * A^(K); at t == T it
/// reduces to (1-lambda)*delta_T. Rejects lambda == 1.
double gae_exponential_form_literal(const Segment& segment, int t,
                                    const EstimatorParams& params);

/// GAE of a complete trajectory (final step must have done == true). The
/// terminal bootstrap is exactly zero, so both bootstrap modes coincide.
std::vector<double> gae_complete(const Segment& trajectory,
                                 const EstimatorParams& params);

/// Difference between the complete-trajectory GAE and the GAE truncated at
/// 1-based step `truncation`, for a single-episode trajectory terminating at
/// its last step. Computed as an explicit tail sum; satisfies
/// B_t = (gamma*lambda)^{truncation-t} * B_truncation exactly, and is zero
/// when truncation == D. The truncated side uses the zero bootstrap.
double bias_term(const Segment& trajectory, int t, int truncation,
                 const EstimatorParams& params);

struct Decomposition {
  double reward_part = 0.0;  // discounted-reward accumulation
  double value_part = 0.0;   // value-estimate contribution
};

/// Splits the truncated GAE at position t into its accumulated-reward part
/// sum (gamma*lambda)^l r_{t+l} and the complementary value-estimate part;
/// the two parts sum to gae_truncated(segment, params)[t-1].
Decomposition decompose(const Segment& segment, int t,
                        const EstimatorParams& params);

/// Standardizes the kept entries to mean 0 and population std 1 (stabilizer
/// 1e-8 in the divisor); masked entries are returned untouched. Requires at
/// least two kept entries.
AdvantageBatch normalize_advantages(const AdvantageBatch& batch);

/// target_t = advantage_t + value_pred_t, on un-normalized advantages.
std::vector<double> value_targets(const std::vector<double>& advantages,
                                  const std::vector<double>& value_preds);

}  // namespace advest
