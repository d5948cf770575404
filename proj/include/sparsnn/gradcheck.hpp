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

// Central finite-difference check of backward_pass on the relaxed model,
// where the forward spike is a smooth sigmoid and its derivative is exactly
// what the backward pass uses.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sparsnn/bptt.hpp"
#include "sparsnn/network.hpp"

namespace sparsnn {

struct GradCheckCase {
  Network<double> net;
  std::vector<BatchMatrix<double>> inputs;
  std::vector<int> labels;
  bool detach_reset = false;  // FD sees the full gradient; leave off when comparing
};

struct GradCheckResult {
  double max_rel_err = 0;  // worst layer, norm-wise
  std::vector<double> layer_rel_err;
};

inline double relaxed_loss(const GradCheckCase& c) {
  PassOptions pass;
  pass.spike_fn = SpikeFn::relaxed;
  pass.detach_reset = c.detach_reset;
  const auto fwd = forward_pass(c.net, c.inputs, pass);
  return softmax_cross_entropy(fwd.scores, c.labels).loss;
}

/// ||fd - analytic|| / max(||fd||, ||analytic||) per layer.
inline GradCheckResult finite_difference_check(const GradCheckCase& c, double eps = 1e-3) {
  PassOptions pass;
  pass.spike_fn = SpikeFn::relaxed;
  pass.detach_reset = c.detach_reset;
  const auto fwd = forward_pass(c.net, c.inputs, pass);
  const auto loss = softmax_cross_entropy(fwd.scores, c.labels);
  const auto back = backward_pass(c.net, fwd.trace, loss.dL_dscores);

  GradCheckResult r;
  GradCheckCase probe = c;
  for (int l = 0; l < c.net.num_layers(); ++l) {
    auto& w = probe.net.layers[l].w;
    WeightMatrix<double> fd(w.rows(), w.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double orig = w(i, j);
        w(i, j) = orig + eps;
        const double up = relaxed_loss(probe);
        w(i, j) = orig - eps;
        const double down = relaxed_loss(probe);
        w(i, j) = orig;
        fd(i, j) = (up - down) / (2 * eps);
      }
    const auto& an = back.grads[l].dL_dw;
    const double scale = std::max({fd.norm(), an.norm(), 1e-12});
    r.layer_rel_err.push_back((fd - an).norm() / scale);
    r.max_rel_err = std::max(r.max_rel_err, r.layer_rel_err.back());
  }
  return r;
}

/// Small random network and batch for gradient checks.
inline GradCheckCase random_gradcheck_case(DropRng rng) {
  NetworkSpec spec;
  const int layers = 1 + static_cast<int>(rng.uniform(3));
  spec.layer_sizes.push_back(2 + static_cast<int>(rng.uniform(5)));
  for (int l = 0; l < layers; ++l) spec.layer_sizes.push_back(2 + static_cast<int>(rng.uniform(5)));
  for (int l = 0; l < layers; ++l) spec.sparse_sizes.push_back(2);
  spec.batch_size = 1 + static_cast<int>(rng.uniform(3));
  // Input reaches the readout membrane after two steps per layer.
  spec.num_timesteps = 2 * layers + 2 + static_cast<int>(rng.uniform(4));
  spec.readout = rng.uniform(4) == 0 ? Readout::spike_count : Readout::membrane_sum;

  NeuronConfig cfg;
  cfg.beta = 2.0;
  cfg.weight_gain = 2.0;
  cfg.weight_mean = 0.5;
  GradCheckCase c;
  c.net = make_network<double>(spec, cfg, rng.next_u64());
  for (int t = 0; t < spec.num_timesteps; ++t) {
    BatchMatrix<double> x(spec.batch_size, spec.input_size());
    for (Eigen::Index b = 0; b < x.rows(); ++b)
      for (Eigen::Index i = 0; i < x.cols(); ++i) x(b, i) = rng.uniform(2) == 0 ? 1.0 : 0.0;
    c.inputs.push_back(std::move(x));
  }
  for (int b = 0; b < spec.batch_size; ++b)
    c.labels.push_back(static_cast<int>(rng.uniform(static_cast<std::uint32_t>(spec.output_size()))));
  return c;
}

}  // namespace sparsnn
