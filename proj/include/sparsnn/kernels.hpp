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

// Dense and sparse kernels for the synaptic current and its gradients.
//
// All kernels accumulate in ascending pre-synaptic id (forward, input
// gradient) or ascending batch row (weight gradient), so a sparse kernel fed
// with every active neuron produces bit-identical results to its dense
// counterpart. Work is split over the post-synaptic dimension; each block
// owns disjoint outputs.

#pragma once

#include <cstdint>

#include "sparsnn/parallel.hpp"
#include "sparsnn/sparse_spikes.hpp"
#include "sparsnn/types.hpp"

namespace sparsnn {

/// Instrumentation for work-proportionality checks.
struct KernelCounters {
  std::uint64_t weight_reads = 0;  // weights read by forward kernels
  std::uint64_t macs = 0;          // multiply-accumulates in any kernel
};

template <typename Scalar>
BatchMatrix<Scalar> dense_forward_current(const WeightMatrix<Scalar>& w,
                                          const BatchMatrix<Scalar>& s_in,
                                          KernelCounters* counters = nullptr) {
  require(s_in.cols() == w.cols(),
          "dense_forward_current: spikes " + shape_str(s_in.rows(), s_in.cols()) +
              " vs weights " + shape_str(w.rows(), w.cols()));
  const auto batch = s_in.rows();
  const auto fan_in = w.cols();
  BatchMatrix<Scalar> current = BatchMatrix<Scalar>::Zero(batch, w.rows());
  parallel_blocks(w.rows(), [&](std::int64_t lo, std::int64_t hi) {
    const auto len = hi - lo;
    for (Eigen::Index j = 0; j < fan_in; ++j) {
      const auto col = w.col(j).segment(lo, len);
      for (Eigen::Index b = 0; b < batch; ++b)
        current.row(b).segment(lo, len) += s_in(b, j) * col.transpose();
    }
  });
  if (counters) {
    const auto work = static_cast<std::uint64_t>(batch * fan_in * w.rows());
    counters->weight_reads += work;
    counters->macs += work;
  }
  return current;
}

/// Read-and-sum: I[b][i] = sum over forward spikes j of row b of w[i][j].
template <typename Scalar>
BatchMatrix<Scalar> sparse_forward_current(const WeightMatrix<Scalar>& w,
                                           const SparseSpikeBatch<Scalar>& s_in,
                                           KernelCounters* counters = nullptr) {
  const auto fan_in = static_cast<std::uint32_t>(w.cols());
  const int batch = s_in.batch();
  for (int b = 0; b < batch; ++b)
    for (auto id : s_in.spikes(b))
      if (id >= fan_in)
        throw CorruptionError("sparse_forward_current: spike id " +
                              std::to_string(id) + " >= fan-in " +
                              std::to_string(fan_in));

  BatchMatrix<Scalar> current = BatchMatrix<Scalar>::Zero(batch, w.rows());
  parallel_blocks(w.rows(), [&](std::int64_t lo, std::int64_t hi) {
    const auto len = hi - lo;
    for (int b = 0; b < batch; ++b) {
      auto out = current.row(b).segment(lo, len);
      for (auto id : s_in.spikes(b)) out += w.col(id).segment(lo, len).transpose();
    }
  });
  if (counters) {
    const auto work = s_in.total_spikes() * static_cast<std::uint64_t>(w.rows());
    counters->weight_reads += work;
    counters->macs += work;
  }
  return current;
}

/// dW[i][j] += sum_b dL_dI[b][i] * s_in[b][j]; s_in may be real-valued.
template <typename Scalar>
void dense_weight_grad(const BatchMatrix<Scalar>& dL_dI,
                       const BatchMatrix<Scalar>& s_in, WeightMatrix<Scalar>& dL_dw,
                       KernelCounters* counters = nullptr) {
  require(dL_dI.rows() == s_in.rows() && dL_dw.rows() == dL_dI.cols() &&
              dL_dw.cols() == s_in.cols(),
          "dense_weight_grad: shape mismatch");
  const auto batch = s_in.rows();
  parallel_blocks(dL_dw.rows(), [&](std::int64_t lo, std::int64_t hi) {
    const auto len = hi - lo;
    for (Eigen::Index j = 0; j < s_in.cols(); ++j) {
      auto col = dL_dw.col(j).segment(lo, len);
      for (Eigen::Index b = 0; b < batch; ++b)
        col += s_in(b, j) * dL_dI.row(b).segment(lo, len).transpose();
    }
  });
  if (counters)
    counters->macs += static_cast<std::uint64_t>(batch * s_in.cols() * dL_dw.rows());
}

/// Touches only the columns named by forward spikes.
template <typename Scalar>
void sparse_weight_grad(const BatchMatrix<Scalar>& dL_dI,
                        const SparseSpikeBatch<Scalar>& s_in,
                        WeightMatrix<Scalar>& dL_dw,
                        KernelCounters* counters = nullptr) {
  require(dL_dI.rows() == s_in.batch() && dL_dw.rows() == dL_dI.cols(),
          "sparse_weight_grad: shape mismatch");
  const auto fan_in = static_cast<std::uint32_t>(dL_dw.cols());
  for (int b = 0; b < s_in.batch(); ++b)
    for (auto id : s_in.spikes(b))
      if (id >= fan_in)
        throw CorruptionError("sparse_weight_grad: spike id out of range");

  parallel_blocks(dL_dw.rows(), [&](std::int64_t lo, std::int64_t hi) {
    const auto len = hi - lo;
    for (int b = 0; b < s_in.batch(); ++b) {
      const auto g = dL_dI.row(b).segment(lo, len).transpose();
      for (auto id : s_in.spikes(b)) dL_dw.col(id).segment(lo, len) += g;
    }
  });
  if (counters)
    counters->macs += s_in.total_spikes() * static_cast<std::uint64_t>(dL_dw.rows());
}

/// dL/dS_in[b][j] = sum_i dL_dI[b][i] * w[i][j] for every pre-synaptic j.
template <typename Scalar>
BatchMatrix<Scalar> dense_input_grad(const BatchMatrix<Scalar>& dL_dI,
                                     const WeightMatrix<Scalar>& w,
                                     KernelCounters* counters = nullptr) {
  require(dL_dI.cols() == w.rows(), "dense_input_grad: shape mismatch");
  const auto batch = dL_dI.rows();
  BatchMatrix<Scalar> out(batch, w.cols());
  parallel_blocks(batch, [&](std::int64_t lo, std::int64_t hi) {
    for (auto b = lo; b < hi; ++b)
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        out(b, j) = w.col(j).dot(dL_dI.row(b).transpose());
  });
  if (counters)
    counters->macs += static_cast<std::uint64_t>(batch * w.cols() * w.rows());
  return out;
}

/// Transpose product restricted to the retained entries (both segments);
/// the result is aligned with s_in.ids, padding slots are zero.
template <typename Scalar>
BatchMatrix<Scalar> sparse_input_grad(const BatchMatrix<Scalar>& dL_dI,
                                      const WeightMatrix<Scalar>& w,
                                      const SparseSpikeBatch<Scalar>& s_in,
                                      KernelCounters* counters = nullptr) {
  require(dL_dI.cols() == w.rows() && dL_dI.rows() == s_in.batch(),
          "sparse_input_grad: shape mismatch");
  const auto fan_in = static_cast<std::uint32_t>(w.cols());
  for (int b = 0; b < s_in.batch(); ++b)
    for (auto id : s_in.entries(b))
      if (id >= fan_in)
        throw CorruptionError("sparse_input_grad: id out of range");

  BatchMatrix<Scalar> out = BatchMatrix<Scalar>::Zero(s_in.batch(), s_in.capacity());
  parallel_blocks(s_in.batch(), [&](std::int64_t lo, std::int64_t hi) {
    for (auto b = lo; b < hi; ++b) {
      auto row = s_in.entries(static_cast<int>(b));
      for (std::size_t k = 0; k < row.size(); ++k)
        out(b, static_cast<Eigen::Index>(k)) = w.col(row[k]).dot(dL_dI.row(b).transpose());
    }
  });
  if (counters)
    counters->macs += s_in.total_entries() * static_cast<std::uint64_t>(w.rows());
  return out;
}

}  // namespace sparsnn
