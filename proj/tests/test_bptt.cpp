// Copyright 2026 The sparsnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "exactness.hpp"
#include "sparsnn/checkpoint.hpp"
#include "sparsnn/events.hpp"
#include "sparsnn/gradcheck.hpp"
#include "sparsnn/optim.hpp"
#include "sparsnn/train.hpp"

using namespace sparsnn;

namespace {

// Forward-mode derivative carrier for the hand-written oracle.
struct Dual {
  double v = 0;
  double d = 0;
};
Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator*(double k, Dual a) { return {k * a.v, k * a.d}; }

// Input -> one hidden LIF neuron -> one non-spiking readout neuron. The
// Heaviside's derivative is replaced by the surrogate.
double oracle_grad(double w1, double w2, const std::vector<double>& x, bool wrt_w1,
                   bool detach_reset, double alpha, double theta, double beta) {
  Dual W1{w1, wrt_w1 ? 1.0 : 0.0}, W2{w2, wrt_w1 ? 0.0 : 1.0};
  Dual uh, ih, uo, io, score;
  const double gain = 1 - alpha;
  for (double xt : x) {
    Dual s{uh.v >= theta ? 1.0 : 0.0, surrogate(uh.v - theta, beta) * uh.d};
    Dual keep{1 - s.v, detach_reset ? 0.0 : -s.d};
    uh = alpha * (uh * keep) + gain * ih;
    ih = xt * W1;
    uo = alpha * uo + gain * io;
    io = W2 * s;
    score = score + uo;
  }
  return score.d;
}

Network<double> two_neuron_net(double w1, double w2, int steps) {
  NetworkSpec spec;
  spec.layer_sizes = {1, 1, 1};
  spec.sparse_sizes = {2, 2};
  spec.batch_size = 1;
  spec.num_timesteps = steps;
  auto net = make_network<double>(spec, NeuronConfig{}, 1);
  net.layers[0].w(0, 0) = w1;
  net.layers[1].w(0, 0) = w2;
  return net;
}

}  // namespace

TEST_CASE("bptt: two-neuron chain rule oracle") {
  for (int steps : {3, 12, 40}) {
    for (bool detach : {false, true}) {
      std::vector<double> x;
      for (int t = 0; t < steps; ++t) x.push_back(t % 3 == 0 ? 1.0 : 0.0);
      const double w1 = 6.0, w2 = -0.7;
      const auto net = two_neuron_net(w1, w2, steps);
      std::vector<BatchMatrix<double>> in;
      for (double v : x) in.push_back(BatchMatrix<double>::Constant(1, 1, v));
      PassOptions opt;
      opt.detach_reset = detach;
      const auto fwd = forward_pass(net, in, opt);
      const auto back = backward_pass<double>(net, fwd.trace, BatchMatrix<double>::Ones(1, 1));
      const double g1 = oracle_grad(w1, w2, x, true, detach, 0.9, 1.0, 10.0);
      const double g2 = oracle_grad(w1, w2, x, false, detach, 0.9, 1.0, 10.0);
      CAPTURE(steps);
      CAPTURE(detach);
      CHECK(back.grads[0].dL_dw(0, 0) == doctest::Approx(g1).epsilon(1e-6));
      CHECK(back.grads[1].dL_dw(0, 0) == doctest::Approx(g2).epsilon(1e-6));
      if (steps >= 12) CHECK(std::abs(g1) > 1e-6);
    }
  }
}

TEST_CASE("bptt: readout score is the sum of post-update output membranes") {
  const auto net = two_neuron_net(6.0, 0.5, 6);
  std::vector<BatchMatrix<double>> in(6, BatchMatrix<double>::Ones(1, 1));
  const auto fwd = forward_pass(net, in, PassOptions{});
  double uh = 0, ih = 0, uo = 0, io = 0, score = 0;
  for (int t = 0; t < 6; ++t) {
    const double s = uh >= 1.0 ? 1.0 : 0.0;
    uh = 0.9 * uh * (1 - s) + 0.1 * ih;
    ih = 6.0;
    uo = 0.9 * uo + 0.1 * io;
    io = 0.5 * s;
    score += uo;
  }
  CHECK(fwd.scores(0, 0) == doctest::Approx(score).epsilon(1e-12));
}

TEST_CASE("bptt: relaxed model matches finite differences") {
  const DropRng root(21);
  for (int k = 0; k < 5; ++k) {
    const auto r = finite_difference_check(random_gradcheck_case(root.stream(k)));
    CHECK(r.max_rel_err < 1e-3);
  }
}

TEST_CASE("bptt: sparse mode with full capacity reproduces dense mode") {
  const DropRng root(5);
  for (int k = 0; k < 8; ++k) {
    const auto r = testing::check_exactness(root.stream(k));
    CAPTURE(r.shape);
    CHECK(r.spikes_identical);
    CHECK(r.scores_identical);
    CHECK(r.max_grad_rel_err <= 1e-6);
  }
}

TEST_CASE("bptt: zero input keeps every score and gradient at zero") {
  NetworkSpec spec;
  spec.layer_sizes = {4, 6, 3};
  spec.sparse_sizes = {4, 4};
  spec.batch_size = 2;
  spec.num_timesteps = 5;
  const auto net = make_network<float>(spec, NeuronConfig{}, 3);
  std::vector<BatchMatrix<float>> in(5, BatchMatrix<float>::Zero(2, 4));
  for (auto mode : {ExecMode::dense, ExecMode::sparse}) {
    PassOptions opt;
    opt.mode = mode;
    const auto fwd = forward_pass(net, in, opt);
    CHECK(fwd.scores.isZero());
    const auto back = backward_pass<float>(net, fwd.trace, BatchMatrix<float>::Ones(2, 3));
    CHECK(back.grads[0].dL_dw.isZero());
  }
}

TEST_CASE("bptt: contract checks") {
  NetworkSpec spec;
  spec.layer_sizes = {4, 6, 3};
  spec.sparse_sizes = {4, 4};
  spec.batch_size = 2;
  spec.num_timesteps = 3;
  const auto net = make_network<float>(spec, NeuronConfig{}, 3);
  std::vector<BatchMatrix<float>> in(3, BatchMatrix<float>::Zero(2, 4));
  CHECK_THROWS_AS(forward_pass(net, std::vector<BatchMatrix<float>>(2, in[0]), PassOptions{}), ContractViolation);
  PassOptions bad;
  bad.mode = ExecMode::sparse;
  bad.spike_fn = SpikeFn::relaxed;
  CHECK_THROWS_AS(forward_pass(net, in, bad), ContractViolation);
  auto fwd = forward_pass(net, in, PassOptions{});
  fwd.trace.layers[0].u.pop_back();
  CHECK_THROWS_AS(backward_pass<float>(net, fwd.trace, BatchMatrix<float>::Zero(2, 3)), ContractViolation);
}

TEST_CASE("bptt: gradient-only entries carry gradient without transmitting") {
  // hidden neuron 0 climbs to between the two thresholds and never fires
  NetworkSpec spec;
  spec.layer_sizes = {1, 2, 1};
  spec.sparse_sizes = {2, 2};
  spec.batch_size = 1;
  spec.num_timesteps = 16;
  auto net = make_network<float>(spec, NeuronConfig{}, 1);
  net.layers[0].w << 0.8f, 0.0f;
  net.layers[1].w << 1.0f, 1.0f;
  std::vector<BatchMatrix<float>> in(16, BatchMatrix<float>::Ones(1, 1));
  PassOptions opt;
  opt.mode = ExecMode::sparse;
  const auto fwd = forward_pass(net, in, opt);
  CHECK(fwd.scores.isZero());
  const auto& last = fwd.trace.layers[0].sparse.back();
  CHECK(last.num_spikes[0] == 0);
  CHECK(last.num_grads[0] == 1);
  const auto back = backward_pass<float>(net, fwd.trace, BatchMatrix<float>::Ones(1, 1));
  CHECK(back.grads[0].dL_dw(0, 0) != 0.0f);
  CHECK(back.grads[0].dL_dw(1, 0) == 0.0f);
}

TEST_CASE("softmax cross-entropy: value and gradient") {
  BatchMatrix<double> s(2, 3);
  s << 1, 2, 3, 0, 0, 0;
  const auto r = softmax_cross_entropy(s, {2, 0});
  const double l0 = -std::log(std::exp(3.0) / (std::exp(1.0) + std::exp(2.0) + std::exp(3.0)));
  const double l1 = std::log(3.0);
  CHECK(r.loss == doctest::Approx((l0 + l1) / 2));
  CHECK(r.correct == 2);  // the all-zero row ties and resolves to class 0
  CHECK(r.dL_dscores.row(0).sum() == doctest::Approx(0).epsilon(1e-12));
  CHECK(r.dL_dscores(1, 0) == doctest::Approx((1.0 / 3 - 1) / 2));
  CHECK_THROWS_AS(softmax_cross_entropy(s, {3, 0}), ContractViolation);
}

TEST_CASE("adam: one step against the closed form") {
  NetworkSpec spec;
  spec.layer_sizes = {2, 2};
  spec.sparse_sizes = {2};
  auto net = make_network<double>(spec, NeuronConfig{}, 1);
  net.layers[0].w << 1, 2, 3, 4;
  auto opt = Optimizer<double>::make(OptimizerKind::adam, 0.1, net);
  std::vector<GradientSet<double>> g(1);
  g[0].dL_dw.resize(2, 2);
  g[0].dL_dw << 0.5, -2, 0, 1e-3;
  opt.apply(net, g);
  // first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
  CHECK(net.layers[0].w(0, 0) == doctest::Approx(1 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(net.layers[0].w(0, 1) == doctest::Approx(2 + 0.1).epsilon(1e-9));
  CHECK(net.layers[0].w(1, 0) == 3.0);
  opt.apply(net, g);
  CHECK(opt.adam.step == 2);
  CHECK(net.layers[0].w(0, 1) == doctest::Approx(2.2).epsilon(1e-9));
}

TEST_CASE("sgd: step, zero learning rate is a no-op") {
  NetworkSpec spec;
  spec.layer_sizes = {2, 1};
  spec.sparse_sizes = {2};
  auto net = make_network<float>(spec, NeuronConfig{}, 1);
  net.layers[0].w << 1, 1;
  std::vector<GradientSet<float>> g(1);
  g[0].dL_dw.resize(1, 2);
  g[0].dL_dw << 2, -4;
  auto opt = Optimizer<float>::make(OptimizerKind::sgd, 0.5, net);
  opt.apply(net, g);
  CHECK(net.layers[0].w(0, 0) == 0.0f);
  CHECK(net.layers[0].w(0, 1) == 3.0f);
  auto frozen = Optimizer<float>::make(OptimizerKind::sgd, 0.0, net);
  frozen.apply(net, g);
  CHECK(net.layers[0].w(0, 1) == 3.0f);
  CHECK_THROWS_AS(sgd_step<float>(net.layers[0].w, g[0].dL_dw, -1.0f), ContractViolation);
}

namespace {

Dataset small_dataset() {
  SynthOptions so;
  so.num_classes = 3;
  so.input_size = 16;
  so.samples_per_class = 4;
  so.num_timesteps = 8;
  so.template_density = 0.2;
  return bin_dataset(synth_pattern_dataset(so), 8, 1000);
}

NetworkSpec small_spec() {
  NetworkSpec spec;
  spec.layer_sizes = {16, 12, 3};
  spec.sparse_sizes = {6, 4};
  spec.batch_size = 5;
  spec.num_timesteps = 8;
  return spec;
}

}  // namespace

TEST_CASE("train: epochs are deterministic and reduce the loss") {
  const auto ds = small_dataset();
  NeuronConfig cfg;
  cfg.weight_gain = 3.0;
  cfg.weight_mean = 0.15;
  for (auto mode : {ExecMode::dense, ExecMode::sparse}) {
    auto a = make_network<float>(small_spec(), cfg, 4);
    auto b = a;
    auto oa = Optimizer<float>::make(OptimizerKind::adam, 1e-2, a);
    auto ob = oa;
    TrainOptions to;
    to.mode = mode;
    std::vector<double> la, lb;
    for (int e = 0; e < 15; ++e) {
      la.push_back(train_epoch(a, ds, oa, to, e).mean_loss);
      lb.push_back(train_epoch(b, ds, ob, to, e).mean_loss);
    }
    CHECK(la == lb);
    CHECK(a.layers[0].w == b.layers[0].w);
    CHECK(la.back() < la.front());
  }
}

TEST_CASE("train: empty dataset is a data error") {
  Dataset empty;
  empty.num_timesteps = 8;
  empty.input_size = 16;
  auto net = make_network<float>(small_spec(), NeuronConfig{}, 1);
  auto opt = Optimizer<float>::make(OptimizerKind::adam, 1e-3, net);
  CHECK_THROWS_AS(train_epoch(net, empty, opt, TrainOptions{}, 0), DataError);
  CHECK_THROWS_AS(evaluate(net, empty, ExecMode::dense, 1), DataError);
}

TEST_CASE("checkpoint: bit-exact round trip") {
  const auto ds = small_dataset();
  Checkpoint c;
  c.net = make_network<float>(small_spec(), NeuronConfig{}, 2);
  c.optimizer = Optimizer<float>::make(OptimizerKind::adam, 3e-3, c.net);
  train_epoch(c.net, ds, c.optimizer, TrainOptions{}, 0);
  c.seed = 1234;
  c.epoch = 1;
  const auto path = std::filesystem::temp_directory_path() / "sparsnn_ckpt_test.bin";
  save_checkpoint(path, c);
  const auto d = load_checkpoint(path);
  CHECK(encode_checkpoint(d) == encode_checkpoint(c));
  CHECK(d.net.layers[1].w == c.net.layers[1].w);
  CHECK(d.optimizer.adam.v[0] == c.optimizer.adam.v[0]);
  CHECK(d.optimizer.adam.step == c.optimizer.adam.step);
  CHECK(d.seed == 1234);
  std::filesystem::remove(path);

  auto bytes = encode_checkpoint(c);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bytes), DataError);
  bytes = encode_checkpoint(c);
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_checkpoint(bytes), DataError);
}
