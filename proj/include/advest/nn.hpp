#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "advest/rng.hpp"
#include "advest/serialize.hpp"
#include "advest/types.hpp"

namespace advest {

enum class Activation { kTanh, kRelu };

/// Fully connected network with hidden-layer activations and an identity
/// output layer. Parameters live in one flat vector laid out
/// [W0 | b0 | W1 | b1 | ...] with W row-major (out x in), so optimizer state,
/// checkpoints, and finite-difference probes all address the same storage.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation activation);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int n_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return act_; }

  int param_count() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  /// W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  void init_uniform_fan_in(Rng& rng);

  /// Post-activation values per layer for a forward pass; acts[0] is the
  /// input batch, acts[n_layers()] the output.
  struct Cache {
    int n = 0;
    std::vector<std::vector<double>> acts;
  };

  /// Batched forward over n row-major input rows. Fills `out` with n rows of
  /// output_dim() values; when cache is non-null it is filled for backward().
  void forward(const double* x, int n, std::vector<double>& out,
               Cache* cache = nullptr) const;

  std::vector<double> forward1(std::span<const double> x) const;
  /// Single-row convenience for scalar-output networks.
  double evaluate1(std::span<const double> x) const;

  /// Reverse-mode gradients for the batch recorded in `cache`; `upstream` is
  /// n x output_dim() of dLoss/dOutput. Accumulates into `grad`, which must
  /// hold param_count() zeros (or running totals).
  void backward(const Cache& cache, const double* upstream,
                double* grad) const;

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  std::vector<int> sizes_;
  Activation act_ = Activation::kTanh;
  std::vector<double> params_;
  std::vector<int> w_offset_, b_offset_;
};

/// Adam with bias correction. Moments are shaped like the parameter vector
/// the state was created for.
struct AdamState {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stabilizer = 1e-8;
  std::int64_t step = 0;
  std::vector<double> m, v;

  AdamState() = default;
  AdamState(int n_params, double lr);
  void update(std::span<double> params, std::span<const double> grads);
  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);
};

// Row-level distribution helpers shared by sampling and the PPO losses.
void log_softmax_row(std::span<const double> logits, std::span<double> out);
double entropy_from_logits(std::span<const double> logits);

double gaussian_logprob(std::span<const double> mean,
                        std::span<const double> log_std,
                        std::span<const double> action);
double gaussian_entropy(std::span<const double> log_std);

enum class PolicyKind { kDiscrete, kGaussian };

/// Policy distribution on top of an Mlp. Discrete: the network emits logits.
/// Gaussian: the network emits the mean and a state-independent learnable
/// log-std vector (clamped to [-5, 2]) provides exploration noise.
class PolicyHead {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  PolicyHead() = default;
  static PolicyHead discrete(Mlp net);
  static PolicyHead gaussian(Mlp net);

  PolicyKind kind() const { return kind_; }
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::vector<double>& log_std() { return log_std_; }
  const std::vector<double>& log_std() const { return log_std_; }
  std::vector<double> clamped_log_std() const;

  struct Sampled {
    Action action;
    double logprob = 0.0;
  };

  Sampled sample(std::span<const double> observation, Rng& rng) const;
  Action greedy(std::span<const double> observation) const;
  /// Exact log density/mass of `action` under the current parameters.
  double logprob(std::span<const double> observation,
                 const Action& action) const;
  double entropy(std::span<const double> observation) const;

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  PolicyKind kind_ = PolicyKind::kDiscrete;
  Mlp net_;
  std::vector<double> log_std_;
};

struct FdCheckResult {
  double max_rel_error = 0.0;
  int worst_index = -1;
};

/// Central-difference check of an analytic gradient. `loss` must evaluate
/// the objective at the current contents of `params`; entries are perturbed
/// in place and restored. Relative error uses a 1e-6 floor so near-zero
/// gradients compare absolutely.
FdCheckResult finite_difference_check(std::span<double> params,
                                      const std::function<double()>& loss,
                                      std::span<const double> analytic_grad,
                                      double step = 1e-5);

}  // namespace advest
