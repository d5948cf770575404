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

#include "sparsnn/lif.hpp"
#include "sparsnn/network.hpp"

using namespace sparsnn;

TEST_CASE("lif step: spike, reset and delayed current by hand") {
  auto p = LifParams<double>::uniform(2, 0.9, 1.0, 1.0, 0.5, 10.0);
  DenseLayerState<double> s{BatchMatrix<double>(1, 2), BatchMatrix<double>(1, 2)};
  s.u << 1.2, 0.4;
  s.i_syn << 2.0, -1.0;
  BatchMatrix<double> next(1, 2);
  next << 0.3, 0.7;
  const auto r = lif_step_dense(s, p, next);
  CHECK(r.spikes(0, 0) == 1.0);
  CHECK(r.spikes(0, 1) == 0.0);
  // neuron 0 resets: 0 + 0.1 * 2; neuron 1 decays: 0.9 * 0.4 + 0.1 * -1
  CHECK(r.state.u(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.state.u(0, 1) == doctest::Approx(0.26).epsilon(1e-15));
  CHECK(r.state.i_syn == next);
}

TEST_CASE("lif step: threshold tie spikes") {
  auto p = LifParams<float>::uniform(1, 0.9f, 1.0f, 1.0f, 0.5f, 10.0f);
  BatchMatrix<float> u(1, 1);
  u << 1.0f;
  CHECK(threshold_spikes_dense(u, p.threshold)(0, 0) == 1.0f);
  u << std::nextafter(1.0f, 0.0f);
  CHECK(threshold_spikes_dense(u, p.threshold)(0, 0) == 0.0f);
}

TEST_CASE("lif step: zero state with zero input stays at rest") {
  auto p = LifParams<float>::uniform(3, 0.9f, 1.0f, 1.0f, 0.5f, 10.0f);
  auto s = DenseLayerState<float>::zeros(2, 3);
  auto r = lif_step_dense(s, p, BatchMatrix<float>(BatchMatrix<float>::Zero(2, 3)));
  CHECK(r.spikes.isZero());
  CHECK(r.state.u.isZero());
}

TEST_CASE("lif step: capacitance scales the input gain") {
  auto p = LifParams<double>::uniform(1, 0.5, 4.0, 1.0, 0.5, 10.0);
  DenseLayerState<double> s{BatchMatrix<double>::Zero(1, 1), BatchMatrix<double>::Constant(1, 1, 2.0)};
  auto r = lif_step_dense(s, p, BatchMatrix<double>(BatchMatrix<double>::Zero(1, 1)));
  CHECK(r.state.u(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("lif step: shape mismatch is a contract violation") {
  auto p = LifParams<float>::uniform(2, 0.9f, 1.0f, 1.0f, 0.5f, 10.0f);
  auto s = DenseLayerState<float>::zeros(1, 2);
  CHECK_THROWS_AS(lif_step_dense(s, p, BatchMatrix<float>(BatchMatrix<float>::Zero(1, 3))), ContractViolation);
}

TEST_CASE("surrogate: SuperSpike values") {
  CHECK(surrogate(0.0, 10.0) == 1.0);
  CHECK(surrogate(0.1, 10.0) == doctest::Approx(0.25));
  CHECK(surrogate(-0.1, 10.0) == doctest::Approx(0.25));
  CHECK(surrogate(1.0, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("relaxed spike: zero at rest, derivative matches finite differences") {
  for (double beta : {1.0, 2.0, 10.0}) {
    CHECK(relaxed_spike(0.0, 1.0, beta) == 0.0);
    for (double u : {-2.0, -0.3, 0.4, 0.95, 1.5, 3.0}) {
      const double h = 1e-6;
      const double fd = (relaxed_spike(u + h, 1.0, beta) - relaxed_spike(u - h, 1.0, beta)) / (2 * h);
      CHECK(relaxed_spike_grad(u, 1.0, beta) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("network spec validation") {
  NetworkSpec s;
  s.layer_sizes = {10, 8, 3};
  s.sparse_sizes = {4, 4};
  CHECK_NOTHROW(s.validate());
  s.sparse_sizes = {3, 4};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.sparse_sizes = {4};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.sparse_sizes = {12, 4};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  // an odd layer may use its full size rounded up
  s.layer_sizes = {9, 7, 3};
  s.sparse_sizes = {10, 8};
  CHECK_NOTHROW(s.validate());
  s.layer_sizes = {10};
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("lif params validation") {
  auto p = LifParams<float>::uniform(2, 0.9f, 1.0f, 1.0f, 0.5f, 10.0f);
  CHECK_NOTHROW(p.validate());
  p.alpha = 1.0f;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.alpha = 0.9f;
  p.grad_threshold[1] = 2.0f;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("make_network: deterministic init with the requested scale") {
  NetworkSpec s;
  s.layer_sizes = {400, 300, 2};
  s.sparse_sizes = {4, 4};
  NeuronConfig cfg;
  cfg.weight_gain = 2.0;
  cfg.weight_mean = 0.1;
  const auto a = make_network<float>(s, cfg, 9);
  const auto b = make_network<float>(s, cfg, 9);
  const auto c = make_network<float>(s, cfg, 10);
  CHECK(a.layers[0].w == b.layers[0].w);
  CHECK(a.layers[0].w != c.layers[0].w);
  const auto& w = a.layers[0].w;
  const double mean = w.cast<double>().mean();
  const double sd = std::sqrt((w.cast<double>().array() - mean).square().mean());
  CHECK(mean == doctest::Approx(0.1).epsilon(0.05));
  CHECK(sd == doctest::Approx(2.0 / 20.0).epsilon(0.02));
}
