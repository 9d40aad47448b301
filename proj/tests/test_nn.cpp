#include <doctest.h>

#include <cmath>
#include <sstream>

#include "advest/nn.hpp"
#include "advest/rng.hpp"

using namespace advest;

TEST_CASE("parameter layout") {
  const Mlp net({4, 64, 64, 2}, Activation::kTanh);
  // sum over layers of (fan_in + 1) * fan_out
  CHECK(net.param_count() == (4 + 1) * 64 + (64 + 1) * 64 + (64 + 1) * 2);
  CHECK(net.input_dim() == 4);
  CHECK(net.output_dim() == 2);
  CHECK_THROWS_AS(Mlp({5}, Activation::kTanh), std::invalid_argument);
}

TEST_CASE("forward") {
  SUBCASE("zero parameters give zero output") {
    Mlp net({3, 5, 2}, Activation::kTanh);
    const std::vector<double> out = net.forward1(std::vector<double>{1, -2, 3});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
  }

  SUBCASE("identity-configured single linear layer passes input through") {
    Mlp net({3, 3}, Activation::kTanh);  // output layer is identity
    for (int i = 0; i < 3; ++i) net.params()[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const std::vector<double> x{0.5, -1.5, 2.25};
    CHECK(net.forward1(x) == x);
  }

  SUBCASE("fixed 2-2-1 net matches hand computation") {
    Mlp net({2, 2, 1}, Activation::kTanh);
    // layout: W0 row-major (2x2), b0 (2), W1 (1x2), b1 (1)
    net.params() = {0.5, -0.25, 0.1, 0.3, 0.1, -0.1, 0.7, -0.2, 0.05};
    const double h0 = std::tanh(0.5 * 0.4 - 0.25 * 0.8 + 0.1);
    const double h1 = std::tanh(0.1 * 0.4 + 0.3 * 0.8 - 0.1);
    const double expected = 0.7 * h0 - 0.2 * h1 + 0.05;
    CHECK(net.forward1(std::vector<double>{0.4, 0.8})[0] ==
          doctest::Approx(expected).epsilon(1e-15));
  }

  SUBCASE("input width mismatch throws") {
    Mlp net({3, 2}, Activation::kTanh);
    CHECK_THROWS_AS(net.forward1(std::vector<double>{1.0}),
                    std::invalid_argument);
  }

  SUBCASE("relu activation") {
    Mlp net({1, 2, 1}, Activation::kRelu);
    net.params() = {1.0, -1.0, 0.0, 0.0, 1.0, 1.0, 0.0};
    // x=2: hidden = [relu(2), relu(-2)] = [2, 0]; y = 2
    CHECK(net.forward1(std::vector<double>{2.0})[0] == 2.0);
    // x=-2: hidden = [0, 2]; y = 2
    CHECK(net.forward1(std::vector<double>{-2.0})[0] == 2.0);
  }
}

TEST_CASE("backward") {
  SUBCASE("gradient check on a random 4-8-3 net (finite differences)") {
    for (const Activation act : {Activation::kTanh, Activation::kRelu}) {
      Rng rng(act == Activation::kTanh ? 101 : 102);
      Mlp net({4, 8, 3}, act);
      net.init_uniform_fan_in(rng);
      const int batch = 6;
      std::vector<double> x(4 * batch), target(3 * batch);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      for (double& v : target) v = rng.uniform(-1.0, 1.0);
      auto loss = [&]() {
        std::vector<double> out;
        net.forward(x.data(), batch, out);
        double acc = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i)
          acc += (out[i] - target[i]) * (out[i] - target[i]);
        return acc;
      };
      Mlp::Cache cache;
      std::vector<double> out;
      net.forward(x.data(), batch, out, &cache);
      std::vector<double> upstream(out.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        upstream[i] = 2.0 * (out[i] - target[i]);
      std::vector<double> grad(static_cast<std::size_t>(net.param_count()),
                               0.0);
      net.backward(cache, upstream.data(), grad.data());
      const FdCheckResult check =
          finite_difference_check(net.params(), loss, grad);
      CHECK(check.max_rel_error < 1e-4);
    }
  }

  SUBCASE("zero upstream gradient yields zero parameter gradients") {
    Rng rng(103);
    Mlp net({3, 4, 2}, Activation::kTanh);
    net.init_uniform_fan_in(rng);
    std::vector<double> x{0.2, -0.4, 0.6};
    Mlp::Cache cache;
    std::vector<double> out;
    net.forward(x.data(), 1, out, &cache);
    std::vector<double> upstream(2, 0.0);
    std::vector<double> grad(static_cast<std::size_t>(net.param_count()), 0.0);
    net.backward(cache, upstream.data(), grad.data());
    for (double g : grad) CHECK(g == 0.0);
  }

  SUBCASE("linear net under squared loss matches the closed-form gradient") {
    // y = Wx + b, L = sum_i (y_i - t_i)^2 over the batch:
    // dL/dW = 2 (y - t) x^T summed, dL/db = 2 (y - t) summed.
    Rng rng(104);
    Mlp net({3, 2}, Activation::kTanh);
    net.init_uniform_fan_in(rng);
    const int batch = 4;
    std::vector<double> x(3 * batch), target(2 * batch);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : target) v = rng.uniform(-1.0, 1.0);
    Mlp::Cache cache;
    std::vector<double> out;
    net.forward(x.data(), batch, out, &cache);
    std::vector<double> upstream(out.size());
    for (std::size_t i = 0; i < out.size(); ++i)
      upstream[i] = 2.0 * (out[i] - target[i]);
    std::vector<double> grad(static_cast<std::size_t>(net.param_count()), 0.0);
    net.backward(cache, upstream.data(), grad.data());

    for (int o = 0; o < 2; ++o) {
      for (int i = 0; i < 3; ++i) {
        double expected = 0.0;
        for (int r = 0; r < batch; ++r)
          expected += 2.0 * (out[static_cast<std::size_t>(r * 2 + o)] -
                             target[static_cast<std::size_t>(r * 2 + o)]) *
                      x[static_cast<std::size_t>(r * 3 + i)];
        CHECK(grad[static_cast<std::size_t>(o * 3 + i)] ==
              doctest::Approx(expected).epsilon(1e-12));
      }
      double expected_b = 0.0;
      for (int r = 0; r < batch; ++r)
        expected_b += 2.0 * (out[static_cast<std::size_t>(r * 2 + o)] -
                             target[static_cast<std::size_t>(r * 2 + o)]);
      CHECK(grad[static_cast<std::size_t>(6 + o)] ==
            doctest::Approx(expected_b).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradients leave parameters unchanged") {
    AdamState opt(4, 1e-3);
    std::vector<double> params{1.0, -2.0, 3.0, 0.5};
    const std::vector<double> before = params;
    opt.update(params, std::vector<double>{0, 0, 0, 0});
    CHECK(params == before);
  }

  SUBCASE("first-step magnitude is bounded by the learning rate") {
    Rng rng(105);
    AdamState opt(16, 2.5e-4);
    std::vector<double> params(16, 0.0), grads(16);
    for (double& g : grads) g = rng.uniform(-5.0, 5.0);
    opt.update(params, grads);
    for (std::size_t i = 0; i < params.size(); ++i) {
      CHECK(std::abs(params[i]) <= 2.5e-4 * (1.0 + 1e-6));
      // the step opposes the gradient
      if (grads[i] != 0.0) CHECK(params[i] * grads[i] < 0.0);
    }
  }

  SUBCASE("identical calls from identical state are deterministic") {
    std::vector<double> a{0.1, 0.2}, b{0.1, 0.2};
    const std::vector<double> g{0.3, -0.4};
    AdamState opt_a(2, 1e-3), opt_b(2, 1e-3);
    for (int i = 0; i < 5; ++i) {
      opt_a.update(a, g);
      opt_b.update(b, g);
    }
    CHECK(a == b);
    CHECK(opt_a.m == opt_b.m);
    CHECK(opt_a.v == opt_b.v);
  }

  SUBCASE("shape mismatch throws") {
    AdamState opt(2, 1e-3);
    std::vector<double> params{1.0};
    CHECK_THROWS_AS(opt.update(params, std::vector<double>{1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("policy heads") {
  SUBCASE("uniform logits give logprob ln(1/4)") {
    Mlp net({2, 4}, Activation::kTanh);  // zero weights: all logits 0
    const PolicyHead head = PolicyHead::discrete(std::move(net));
    Rng rng(106);
    const PolicyHead::Sampled s =
        head.sample(std::vector<double>{0.3, 0.7}, rng);
    CHECK(s.logprob == doctest::Approx(std::log(0.25)).epsilon(1e-12));
    CHECK(head.entropy(std::vector<double>{0.3, 0.7}) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("logprob of the sampled action reproduces to 1e-10") {
    Rng init(107);
    Mlp dnet({3, 8, 5}, Activation::kTanh);
    dnet.init_uniform_fan_in(init);
    const PolicyHead discrete = PolicyHead::discrete(std::move(dnet));
    Mlp gnet({3, 8, 2}, Activation::kTanh);
    gnet.init_uniform_fan_in(init);
    PolicyHead gaussian = PolicyHead::gaussian(std::move(gnet));
    gaussian.log_std() = {-0.5, 0.25};

    Rng rng(108);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> obs{rng.uniform(-1, 1), rng.uniform(-1, 1),
                              rng.uniform(-1, 1)};
      for (const PolicyHead* head :
           std::initializer_list<const PolicyHead*>{&discrete, &gaussian}) {
        const PolicyHead::Sampled s = head->sample(obs, rng);
        CHECK(std::abs(head->logprob(obs, s.action) - s.logprob) < 1e-10);
      }
    }
  }

  SUBCASE("gaussian logprob matches the diagonal density formula") {
    Mlp net({2, 3}, Activation::kTanh);  // zero weights: mean is zero
    PolicyHead head = PolicyHead::gaussian(std::move(net));
    head.log_std() = {0.1, -0.3, 0.4};
    const std::vector<double> action{0.5, -0.2, 1.1};
    double expected = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double sigma = std::exp(head.log_std()[static_cast<std::size_t>(d)]);
      const double z = action[static_cast<std::size_t>(d)] / sigma;
      expected += -0.5 * z * z - std::log(sigma) -
                  0.5 * std::log(2.0 * 3.14159265358979323846);
    }
    CHECK(head.logprob(std::vector<double>{0, 0}, Action{action}) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("empirical frequencies match probabilities (chi-square)") {
    Mlp net({1, 4}, Activation::kTanh);
    // fixed logits via biases
    net.params() = {0, 0, 0, 0, 0.3, -0.2, 0.8, 0.0};
    const PolicyHead head = PolicyHead::discrete(std::move(net));
    const std::vector<double> obs{0.0};
    std::vector<double> logits{0.3, -0.2, 0.8, 0.0};
    std::vector<double> probs(4);
    double norm = 0.0;
    for (double l : logits) norm += std::exp(l);
    for (int k = 0; k < 4; ++k)
      probs[static_cast<std::size_t>(k)] =
          std::exp(logits[static_cast<std::size_t>(k)]) / norm;

    Rng rng(109);
    const int n = 100000;
    int counts[4] = {0, 0, 0, 0};
    for (int i = 0; i < n; ++i)
      ++counts[discrete_id(head.sample(obs, rng).action)];
    double chi2 = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double expected = probs[static_cast<std::size_t>(k)] * n;
      chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
    }
    CHECK(chi2 < 16.266);  // p = 0.001 at 3 degrees of freedom
  }

  SUBCASE("log-std clamp bounds the effective spread") {
    Mlp net({1, 2}, Activation::kTanh);
    PolicyHead head = PolicyHead::gaussian(std::move(net));
    head.log_std() = {-10.0, 10.0};
    const std::vector<double> clamped = head.clamped_log_std();
    CHECK(clamped[0] == -5.0);
    CHECK(clamped[1] == 2.0);
    CHECK(head.entropy(std::vector<double>{0.0}) ==
          doctest::Approx(gaussian_entropy(clamped)));
  }

  SUBCASE("greedy picks the mode") {
    Mlp net({1, 3}, Activation::kTanh);
    net.params() = {0, 0, 0, -1.0, 2.0, 0.5};
    const PolicyHead head = PolicyHead::discrete(std::move(net));
    CHECK(discrete_id(head.greedy(std::vector<double>{0.0})) == 1);
  }
}

TEST_CASE("value regression decreases squared error monotonically") {
  // ten full-batch steps at lr 1e-3 on a fixed synthetic set
  Rng rng(110);
  Mlp net({2, 16, 1}, Activation::kTanh);
  net.init_uniform_fan_in(rng);
  const int n = 32;
  std::vector<double> x(2 * n), target(n);
  for (int i = 0; i < n; ++i) {
    x[static_cast<std::size_t>(2 * i)] = rng.uniform(-1, 1);
    x[static_cast<std::size_t>(2 * i + 1)] = rng.uniform(-1, 1);
    target[static_cast<std::size_t>(i)] =
        std::sin(x[static_cast<std::size_t>(2 * i)]) +
        0.5 * x[static_cast<std::size_t>(2 * i + 1)];
  }
  AdamState opt(net.param_count(), 1e-3);
  double previous = 1e300;
  for (int step = 0; step < 10; ++step) {
    Mlp::Cache cache;
    std::vector<double> out;
    net.forward(x.data(), n, out, &cache);
    double loss = 0.0;
    std::vector<double> upstream(out.size());
    for (int i = 0; i < n; ++i) {
      const double err = out[static_cast<std::size_t>(i)] -
                         target[static_cast<std::size_t>(i)];
      loss += err * err;
      upstream[static_cast<std::size_t>(i)] = 2.0 * err / n;
    }
    loss /= n;
    CHECK(loss < previous);
    previous = loss;
    std::vector<double> grad(static_cast<std::size_t>(net.param_count()), 0.0);
    net.backward(cache, upstream.data(), grad.data());
    opt.update(net.params(), grad);
  }
}

TEST_CASE("network and optimizer state round-trip through serialization") {
  Rng rng(111);
  Mlp net({3, 8, 2}, Activation::kRelu);
  net.init_uniform_fan_in(rng);
  AdamState opt(net.param_count(), 3e-4);
  std::vector<double> grads(static_cast<std::size_t>(net.param_count()));
  for (double& g : grads) g = rng.uniform(-1, 1);
  opt.update(net.params(), grads);

  std::stringstream buf;
  BinaryWriter w(buf);
  net.save(w);
  opt.save(w);
  BinaryReader r(buf);
  Mlp restored;
  restored.load(r);
  AdamState opt_restored;
  opt_restored.load(r);
  CHECK(restored.params() == net.params());
  CHECK(restored.layer_sizes() == net.layer_sizes());
  CHECK(opt_restored.m == opt.m);
  CHECK(opt_restored.v == opt.v);
  CHECK(opt_restored.step == opt.step);
  CHECK(opt_restored.learning_rate == opt.learning_rate);
}
