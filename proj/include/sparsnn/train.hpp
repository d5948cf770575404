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

#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "sparsnn/bptt.hpp"
#include "sparsnn/optim.hpp"

namespace sparsnn {

/// Binned samples held in memory: frames[k] is (timesteps x input_size).
struct Dataset {
  int num_timesteps = 0;
  int input_size = 0;
  int num_classes = 0;
  std::vector<BatchMatrix<float>> frames;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Per-timestep (batch x input) matrices for the given sample indices.
template <typename Scalar>
std::vector<BatchMatrix<Scalar>> batch_inputs(const Dataset& ds,
                                              std::span<const std::size_t> indices) {
  std::vector<BatchMatrix<Scalar>> steps(
      ds.num_timesteps,
      BatchMatrix<Scalar>::Zero(static_cast<Eigen::Index>(indices.size()), ds.input_size));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& f = ds.frames.at(indices[r]);
    for (int t = 0; t < ds.num_timesteps; ++t)
      steps[t].row(static_cast<Eigen::Index>(r)) = f.row(t).template cast<Scalar>();
  }
  return steps;
}

struct TrainOptions {
  ExecMode mode = ExecMode::dense;
  bool detach_reset = false;
  bool force_spikes = false;
  std::uint64_t seed = 42;
};

struct EpochMetrics {
  double mean_loss = 0;
  double accuracy = 0;
  std::vector<double> batch_losses;
};

namespace detail {

inline DropRng batch_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t batch) {
  return DropRng(seed).stream(0xd50f, epoch, batch);
}

}  // namespace detail

/// One pass over `ds`: forward, loss, backward, optimizer step per batch.
template <typename Scalar>
EpochMetrics train_epoch(Network<Scalar>& net, const Dataset& ds,
                         Optimizer<Scalar>& optimizer, const TrainOptions& opt,
                         int epoch) {
  if (ds.size() == 0) throw DataError("train_epoch: empty dataset");
  require(ds.input_size == net.spec.input_size() &&
              ds.num_timesteps == net.spec.num_timesteps,
          "train_epoch: dataset does not match network");

  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  DropRng shuffle = DropRng(opt.seed).stream(0x5eed, static_cast<std::uint64_t>(epoch));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[shuffle.uniform(static_cast<std::uint32_t>(i))]);

  EpochMetrics m;
  double loss_sum = 0;
  int correct = 0;
  const auto bs = static_cast<std::size_t>(net.spec.batch_size);
  for (std::size_t start = 0, k = 0; start < order.size(); start += bs, ++k) {
    std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(ds.labels[i]);

    PassOptions pass;
    pass.mode = opt.mode;
    pass.force_spikes = opt.force_spikes;
    pass.detach_reset = opt.detach_reset;
    pass.rng = detail::batch_rng(opt.seed, static_cast<std::uint64_t>(epoch), k);
    auto fwd = forward_pass(net, batch_inputs<Scalar>(ds, idx), pass);
    auto loss = softmax_cross_entropy(fwd.scores, labels);
    auto back = backward_pass(net, fwd.trace, loss.dL_dscores);
    optimizer.apply(net, back.grads);

    m.batch_losses.push_back(static_cast<double>(loss.loss));
    loss_sum += static_cast<double>(loss.loss) * static_cast<double>(idx.size());
    correct += loss.correct;
  }
  m.mean_loss = loss_sum / static_cast<double>(ds.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return m;
}

struct EvalMetrics {
  double loss = 0;
  double accuracy = 0;
};

template <typename Scalar>
EvalMetrics evaluate(const Network<Scalar>& net, const Dataset& ds, ExecMode mode,
                     std::uint64_t seed) {
  if (ds.size() == 0) throw DataError("evaluate: empty dataset");
  EvalMetrics m;
  double loss_sum = 0;
  int correct = 0;
  const auto bs = static_cast<std::size_t>(net.spec.batch_size);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t start = 0, k = 0; start < order.size(); start += bs, ++k) {
    std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(ds.labels[i]);
    PassOptions pass;
    pass.mode = mode;
    pass.rng = DropRng(seed).stream(0xe7a1, k);
    auto fwd = forward_pass(net, batch_inputs<Scalar>(ds, idx), pass);
    auto loss = softmax_cross_entropy(fwd.scores, labels);
    loss_sum += static_cast<double>(loss.loss) * static_cast<double>(idx.size());
    correct += loss.correct;
  }
  m.loss = loss_sum / static_cast<double>(ds.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return m;
}

}  // namespace sparsnn
