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

// Shared by the unit and acceptance suites: dense vs sparse execution on a
// random network with full capacity and an all-admitting gradient threshold.

#pragma once

#include <algorithm>
#include <string>

#include "sparsnn/bptt.hpp"
#include "sparsnn/network.hpp"

namespace sparsnn::testing {

struct ExactnessReport {
  bool spikes_identical = true;
  bool scores_identical = true;
  double max_grad_rel_err = 0;
  std::string shape;
};

inline ExactnessReport check_exactness(DropRng rng) {
  NetworkSpec spec;
  const int layers = 1 + static_cast<int>(rng.uniform(3));
  spec.layer_sizes.push_back(1 + static_cast<int>(rng.uniform(64)));
  for (int l = 0; l < layers; ++l) spec.layer_sizes.push_back(1 + static_cast<int>(rng.uniform(64)));
  for (int l = 0; l < layers; ++l) {
    const int n = spec.layer_sizes[l];
    spec.sparse_sizes.push_back(std::max(2, n + n % 2));
  }
  spec.batch_size = 1 + static_cast<int>(rng.uniform(8));
  spec.num_timesteps = 1 + static_cast<int>(rng.uniform(20));
  spec.readout = rng.uniform(3) == 0 ? Readout::spike_count : Readout::membrane_sum;

  NeuronConfig cfg;
  cfg.grad_threshold = -1e6;
  cfg.weight_gain = 3.0;
  cfg.weight_mean = 0.2;
  const auto net = make_network<float>(spec, cfg, rng.next_u64());

  std::vector<BatchMatrix<float>> x;
  const double rate = 0.1 + 0.5 * rng.uniform01();
  for (int t = 0; t < spec.num_timesteps; ++t) {
    BatchMatrix<float> step(spec.batch_size, spec.input_size());
    for (Eigen::Index b = 0; b < step.rows(); ++b)
      for (Eigen::Index i = 0; i < step.cols(); ++i) step(b, i) = rng.uniform01() < rate ? 1.0f : 0.0f;
    x.push_back(std::move(step));
  }
  std::vector<int> labels;
  for (int b = 0; b < spec.batch_size; ++b)
    labels.push_back(static_cast<int>(rng.uniform(static_cast<std::uint32_t>(spec.output_size()))));

  PassOptions dense_opt;
  dense_opt.rng = rng.stream(1);
  PassOptions sparse_opt = dense_opt;
  sparse_opt.mode = ExecMode::sparse;
  const auto fd = forward_pass(net, x, dense_opt);
  const auto fs = forward_pass(net, x, sparse_opt);

  ExactnessReport r;
  r.shape = std::to_string(layers) + " layers, T=" + std::to_string(spec.num_timesteps) +
            ", B=" + std::to_string(spec.batch_size);
  for (int l = 0; l + 1 < layers; ++l)
    for (int t = 0; t < spec.num_timesteps; ++t)
      if (decode_to_dense(fs.trace.layers[l].sparse[t], spec.layer_sizes[l + 1]) !=
          fd.trace.layers[l].spikes[t])
        r.spikes_identical = false;
  r.scores_identical = fd.scores == fs.scores;

  const auto ld = softmax_cross_entropy(fd.scores, labels);
  const auto ls = softmax_cross_entropy(fs.scores, labels);
  const auto gd = backward_pass(net, fd.trace, ld.dL_dscores);
  const auto gs = backward_pass(net, fs.trace, ls.dL_dscores);
  for (int l = 0; l < layers; ++l) {
    const auto& a = gd.grads[l].dL_dw;
    const auto& b = gs.grads[l].dL_dw;
    const double scale = std::max({double(a.norm()), double(b.norm()), 1e-30});
    r.max_grad_rel_err = std::max(r.max_grad_rel_err, double((a - b).norm()) / scale);
  }
  return r;
}

}  // namespace sparsnn::testing
