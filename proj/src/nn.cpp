#include "advest/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advest {

namespace {
constexpr double kLnTwoPi = 1.8378770664093454836;
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), act_(activation) {
  if (sizes_.size() < 2)
    throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  int offset = 0;
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    w_offset_.push_back(offset);
    offset += sizes_[l] * sizes_[l + 1];
    b_offset_.push_back(offset);
    offset += sizes_[l + 1];
  }
  params_.assign(static_cast<std::size_t>(offset), 0.0);
}

void Mlp::init_uniform_fan_in(Rng& rng) {
  for (int l = 0; l < n_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    double* w = params_.data() + w_offset_[l];
    for (int i = 0; i < in * out; ++i) w[i] = rng.uniform(-bound, bound);
    double* b = params_.data() + b_offset_[l];
    for (int i = 0; i < out; ++i) b[i] = 0.0;
  }
}

void Mlp::forward(const double* x, int n, std::vector<double>& out,
                  Cache* cache) const {
  if (n < 1) throw std::invalid_argument("forward needs at least one row");
  const int layers = n_layers();
  std::vector<double> cur(x, x + static_cast<std::size_t>(n) * sizes_[0]);
  if (cache) {
    cache->n = n;
    cache->acts.assign(static_cast<std::size_t>(layers) + 1, {});
    cache->acts[0] = cur;
  }
  std::vector<double> next;
  for (int l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int odim = sizes_[l + 1];
    const double* w = params_.data() + w_offset_[l];
    const double* b = params_.data() + b_offset_[l];
    next.assign(static_cast<std::size_t>(n) * odim, 0.0);
    for (int r = 0; r < n; ++r) {
      const double* xi = cur.data() + static_cast<std::size_t>(r) * in;
      double* yo = next.data() + static_cast<std::size_t>(r) * odim;
      for (int o = 0; o < odim; ++o) {
        const double* wrow = w + static_cast<std::size_t>(o) * in;
        double acc = b[o];
        for (int i = 0; i < in; ++i) acc += wrow[i] * xi[i];
        yo[o] = acc;
      }
    }
    if (l + 1 < layers) {
      if (act_ == Activation::kTanh)
        for (double& v : next) v = std::tanh(v);
      else
        for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur.swap(next);
    if (cache) cache->acts[static_cast<std::size_t>(l) + 1] = cur;
  }
  out = std::move(cur);
}

std::vector<double> Mlp::forward1(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("input width mismatch: got " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(input_dim()));
  std::vector<double> out;
  forward(x.data(), 1, out);
  return out;
}

double Mlp::evaluate1(std::span<const double> x) const {
  if (output_dim() != 1)
    throw std::logic_error("evaluate1 requires a scalar-output network");
  return forward1(x)[0];
}

void Mlp::backward(const Cache& cache, const double* upstream,
                   double* grad) const {
  const int layers = n_layers();
  if (cache.n < 1 || static_cast<int>(cache.acts.size()) != layers + 1)
    throw std::logic_error("backward needs a cache from forward()");
  const int n = cache.n;
  std::vector<double> delta(
      upstream, upstream + static_cast<std::size_t>(n) * sizes_.back());
  std::vector<double> prev_delta;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int odim = sizes_[l + 1];
    const std::vector<double>& a_in = cache.acts[static_cast<std::size_t>(l)];
    double* gw = grad + w_offset_[l];
    double* gb = grad + b_offset_[l];
    for (int r = 0; r < n; ++r) {
      const double* d = delta.data() + static_cast<std::size_t>(r) * odim;
      const double* ai = a_in.data() + static_cast<std::size_t>(r) * in;
      for (int o = 0; o < odim; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        double* gwrow = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) gwrow[i] += dv * ai[i];
        gb[o] += dv;
      }
    }
    if (l == 0) break;
    const double* w = params_.data() + w_offset_[l];
    prev_delta.assign(static_cast<std::size_t>(n) * in, 0.0);
    for (int r = 0; r < n; ++r) {
      const double* d = delta.data() + static_cast<std::size_t>(r) * odim;
      double* pd = prev_delta.data() + static_cast<std::size_t>(r) * in;
      for (int o = 0; o < odim; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        const double* wrow = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) pd[i] += dv * wrow[i];
      }
      const double* act = a_in.data() + static_cast<std::size_t>(r) * in;
      if (act_ == Activation::kTanh)
        for (int i = 0; i < in; ++i) pd[i] *= 1.0 - act[i] * act[i];
      else
        for (int i = 0; i < in; ++i) pd[i] *= act[i] > 0.0 ? 1.0 : 0.0;
    }
    delta.swap(prev_delta);
  }
}

void Mlp::save(BinaryWriter& w) const {
  w.u64(sizes_.size());
  for (int s : sizes_) w.i64(s);
  w.u8(act_ == Activation::kTanh ? 0 : 1);
  w.vec_f64(params_);
}

void Mlp::load(BinaryReader& r) {
  std::vector<int> sizes(r.u64());
  for (int& s : sizes) s = static_cast<int>(r.i64());
  const Activation act = r.u8() == 0 ? Activation::kTanh : Activation::kRelu;
  *this = Mlp(std::move(sizes), act);
  params_ = r.vec_f64();
  if (params_.size() != static_cast<std::size_t>(param_count()))
    throw std::runtime_error("checkpoint parameter count mismatch");
}

AdamState::AdamState(int n_params, double lr)
    : learning_rate(lr),
      m(static_cast<std::size_t>(n_params), 0.0),
      v(static_cast<std::size_t>(n_params), 0.0) {}

void AdamState::update(std::span<double> params,
                       std::span<const double> grads) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw std::invalid_argument("Adam state shaped for " +
                                std::to_string(m.size()) + " params, got " +
                                std::to_string(params.size()));
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + eps_stabilizer);
  }
}

void AdamState::save(BinaryWriter& w) const {
  w.f64(learning_rate);
  w.f64(beta1);
  w.f64(beta2);
  w.f64(eps_stabilizer);
  w.i64(step);
  w.vec_f64(m);
  w.vec_f64(v);
}

void AdamState::load(BinaryReader& r) {
  learning_rate = r.f64();
  beta1 = r.f64();
  beta2 = r.f64();
  eps_stabilizer = r.f64();
  step = r.i64();
  m = r.vec_f64();
  v = r.vec_f64();
}

void log_softmax_row(std::span<const double> logits, std::span<double> out) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  const double log_sum = max_logit + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i)
    out[i] = logits[i] - log_sum;
}

double entropy_from_logits(std::span<const double> logits) {
  std::vector<double> ls(logits.size());
  log_softmax_row(logits, ls);
  double h = 0.0;
  for (double l : ls) h -= std::exp(l) * l;
  return h;
}

double gaussian_logprob(std::span<const double> mean,
                        std::span<const double> log_std,
                        std::span<const double> action) {
  double logp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double sigma = std::exp(log_std[d]);
    const double z = (action[d] - mean[d]) / sigma;
    logp += -0.5 * z * z - log_std[d] - 0.5 * kLnTwoPi;
  }
  return logp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += ls + 0.5 * (kLnTwoPi + 1.0);
  return h;
}

PolicyHead PolicyHead::discrete(Mlp net) {
  PolicyHead head;
  head.kind_ = PolicyKind::kDiscrete;
  head.net_ = std::move(net);
  return head;
}

PolicyHead PolicyHead::gaussian(Mlp net) {
  PolicyHead head;
  head.kind_ = PolicyKind::kGaussian;
  head.log_std_.assign(static_cast<std::size_t>(net.output_dim()), 0.0);
  head.net_ = std::move(net);
  return head;
}

std::vector<double> PolicyHead::clamped_log_std() const {
  std::vector<double> out(log_std_.size());
  for (std::size_t d = 0; d < out.size(); ++d)
    out[d] = std::clamp(log_std_[d], kLogStdMin, kLogStdMax);
  return out;
}

PolicyHead::Sampled PolicyHead::sample(std::span<const double> observation,
                                       Rng& rng) const {
  const std::vector<double> head_out = net_.forward1(observation);
  if (kind_ == PolicyKind::kDiscrete) {
    std::vector<double> ls(head_out.size());
    log_softmax_row(head_out, ls);
    std::vector<double> probs(ls.size());
    for (std::size_t i = 0; i < ls.size(); ++i) probs[i] = std::exp(ls[i]);
    const int a = rng.categorical(probs);
    return {Action{a}, ls[static_cast<std::size_t>(a)]};
  }
  const std::vector<double> ls = clamped_log_std();
  std::vector<double> a(head_out.size());
  for (std::size_t d = 0; d < a.size(); ++d)
    a[d] = head_out[d] + std::exp(ls[d]) * rng.normal();
  const double logp = gaussian_logprob(head_out, ls, a);
  return {Action{std::move(a)}, logp};
}

Action PolicyHead::greedy(std::span<const double> observation) const {
  const std::vector<double> head_out = net_.forward1(observation);
  if (kind_ == PolicyKind::kDiscrete) {
    const auto it = std::max_element(head_out.begin(), head_out.end());
    return Action{static_cast<int>(it - head_out.begin())};
  }
  return Action{head_out};
}

double PolicyHead::logprob(std::span<const double> observation,
                           const Action& action) const {
  const std::vector<double> head_out = net_.forward1(observation);
  if (kind_ == PolicyKind::kDiscrete) {
    std::vector<double> ls(head_out.size());
    log_softmax_row(head_out, ls);
    return ls[static_cast<std::size_t>(discrete_id(action))];
  }
  return gaussian_logprob(head_out, clamped_log_std(),
                          continuous_values(action));
}

double PolicyHead::entropy(std::span<const double> observation) const {
  if (kind_ == PolicyKind::kDiscrete)
    return entropy_from_logits(net_.forward1(observation));
  return gaussian_entropy(clamped_log_std());
}

void PolicyHead::save(BinaryWriter& w) const {
  w.u8(kind_ == PolicyKind::kDiscrete ? 0 : 1);
  net_.save(w);
  w.vec_f64(log_std_);
}

void PolicyHead::load(BinaryReader& r) {
  kind_ = r.u8() == 0 ? PolicyKind::kDiscrete : PolicyKind::kGaussian;
  net_.load(r);
  log_std_ = r.vec_f64();
}

FdCheckResult finite_difference_check(std::span<double> params,
                                      const std::function<double()>& loss,
                                      std::span<const double> analytic_grad,
                                      double step) {
  if (params.size() != analytic_grad.size())
    throw std::invalid_argument("gradient/parameter size mismatch");
  FdCheckResult result;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss();
    params[i] = saved - step;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double a = analytic_grad[i];
    const double rel =
        std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = static_cast<int>(i);
    }
  }
  return result;
}

}  // namespace advest
