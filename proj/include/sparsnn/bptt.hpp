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

// Forward and backward passes through time.
//
// Within one timestep t the layers run in order. Layer l emits S_l[t] from
// its incoming membrane, integrates its stored current, then latches
// I_l[t+1] = W_l S_{l-1}[t]. The output layer scores either the time-sum of
// its post-update membrane (it never spikes or resets) or its spike count.
//
// In sparse mode every hidden layer's output (and the network input) is
// carried as a SparseSpikeBatch; dropped spikes neither transmit nor reset
// their neuron, and the backward pass sees the same retained set.

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "sparsnn/kernels.hpp"
#include "sparsnn/lif.hpp"
#include "sparsnn/network.hpp"
#include "sparsnn/sparse_spikes.hpp"

namespace sparsnn {

enum class ExecMode { dense, sparse };
enum class SpikeFn { hard, relaxed };

struct PassOptions {
  ExecMode mode = ExecMode::dense;
  // relaxed replaces the Heaviside by a smooth sigmoid (dense mode only);
  // used to validate gradients against finite differences.
  SpikeFn spike_fn = SpikeFn::hard;
  // Every hidden neuron spikes every step (saturates sparse capacity).
  bool force_spikes = false;
  // Stop gradients through the reset factor (1 - S).
  bool detach_reset = false;
  DropRng rng{0};
  KernelCounters* counters = nullptr;
};

template <typename Scalar>
struct LayerTrace {
  std::vector<BatchMatrix<Scalar>> u;       // incoming membrane u[t]
  std::vector<BatchMatrix<Scalar>> i_syn;   // stored current I[t]
  std::vector<BatchMatrix<Scalar>> spikes;  // dense S[t] (dense mode, spiking layers)
  std::vector<SparseSpikeBatch<Scalar>> sparse;  // sparse S[t] (sparse mode, hidden layers)
};

template <typename Scalar>
struct ForwardTrace {
  ExecMode mode = ExecMode::dense;
  SpikeFn spike_fn = SpikeFn::hard;
  bool detach_reset = false;
  int num_timesteps = 0;
  std::vector<BatchMatrix<Scalar>> input;               // dense mode
  std::vector<SparseSpikeBatch<Scalar>> input_sparse;   // sparse mode
  std::vector<LayerTrace<Scalar>> layers;
};

template <typename Scalar>
struct ForwardResult {
  ForwardTrace<Scalar> trace;
  BatchMatrix<Scalar> scores;  // batch x classes
};

namespace detail {

template <typename Scalar>
bool layer_spikes(const Network<Scalar>& net, int l) {
  return l + 1 < net.num_layers() || net.spec.readout == Readout::spike_count;
}

template <typename Scalar>
BatchMatrix<Scalar> emit_dense(const BatchMatrix<Scalar>& u,
                               const LifParams<Scalar>& p, SpikeFn fn,
                               bool force) {
  if (force) return BatchMatrix<Scalar>::Ones(u.rows(), u.cols());
  if (fn == SpikeFn::hard) return threshold_spikes_dense(u, p.threshold);
  BatchMatrix<Scalar> s(u.rows(), u.cols());
  for (Eigen::Index b = 0; b < u.rows(); ++b)
    for (Eigen::Index i = 0; i < u.cols(); ++i)
      s(b, i) = relaxed_spike(u(b, i), p.threshold[i], p.beta);
  return s;
}

}  // namespace detail

/// Runs the network over `inputs` (one batch x input_size 0/1 matrix per
/// timestep) and records everything the backward pass needs.
template <typename Scalar>
ForwardResult<Scalar> forward_pass(const Network<Scalar>& net,
                                   const std::vector<BatchMatrix<Scalar>>& inputs,
                                   const PassOptions& opt) {
  const auto& spec = net.spec;
  const int steps = static_cast<int>(inputs.size());
  const int layers = net.num_layers();
  require(steps == spec.num_timesteps,
          "forward_pass: got " + std::to_string(steps) + " input steps, expected " +
              std::to_string(spec.num_timesteps));
  require(!(opt.mode == ExecMode::sparse && opt.spike_fn == SpikeFn::relaxed),
          "forward_pass: relaxed spikes are only defined in dense mode");
  const Eigen::Index batch = inputs.empty() ? 0 : inputs.front().rows();
  for (const auto& x : inputs)
    require(x.rows() == batch && x.cols() == spec.input_size(),
            "forward_pass: input step is " + shape_str(x.rows(), x.cols()));

  ForwardResult<Scalar> out;
  auto& trace = out.trace;
  trace.mode = opt.mode;
  trace.spike_fn = opt.spike_fn;
  trace.detach_reset = opt.detach_reset;
  trace.num_timesteps = steps;
  trace.layers.resize(layers);
  out.scores = BatchMatrix<Scalar>::Zero(batch, spec.output_size());

  std::vector<DenseLayerState<Scalar>> state;
  for (const auto& layer : net.layers)
    state.push_back(DenseLayerState<Scalar>::zeros(static_cast<int>(batch), layer.size()));

  const bool sparse = opt.mode == ExecMode::sparse;
  for (int t = 0; t < steps; ++t) {
    SparseSpikeBatch<Scalar> below_sparse;
    const BatchMatrix<Scalar>* below_dense = &inputs[t];
    if (sparse) {
      below_sparse = encode_binary<Scalar>(inputs[t], spec.sparse_sizes[0],
                                           opt.rng.stream(0, static_cast<std::uint64_t>(t)));
      trace.input_sparse.push_back(below_sparse);
    } else {
      trace.input.push_back(inputs[t]);
    }

    for (int l = 0; l < layers; ++l) {
      const auto& layer = net.layers[l];
      auto& st = state[l];
      auto& lt = trace.layers[l];
      lt.u.push_back(st.u);
      lt.i_syn.push_back(st.i_syn);

      const bool is_output = l + 1 == layers;
      const bool spiking = detail::layer_spikes(net, l);
      const bool force = opt.force_spikes && !is_output;

      BatchMatrix<Scalar> emitted;
      SparseSpikeBatch<Scalar> emitted_sparse;
      if (!spiking) {
        emitted = BatchMatrix<Scalar>::Zero(batch, layer.size());
      } else if (sparse && !is_output) {
        emitted_sparse = encode_sparse<Scalar>(
            st.u, layer.params, spec.sparse_sizes[l + 1],
            opt.rng.stream(static_cast<std::uint64_t>(l + 1), static_cast<std::uint64_t>(t)),
            true, force);
        emitted = decode_to_dense(emitted_sparse, layer.size());
      } else {
        emitted = detail::emit_dense(st.u, layer.params, opt.spike_fn, force);
      }

      integrate_membrane<Scalar>(st.u, emitted, st.i_syn, layer.params.alpha,
                                 layer.params.capacitance);
      st.i_syn = sparse ? sparse_forward_current(layer.w, below_sparse, opt.counters)
                        : dense_forward_current(layer.w, *below_dense, opt.counters);

      if (is_output) {
        if (spec.readout == Readout::membrane_sum)
          out.scores += st.u;
        else
          out.scores += emitted;
      }

      if (spiking) {
        if (sparse && !is_output) {
          lt.sparse.push_back(std::move(emitted_sparse));
          below_sparse = lt.sparse.back();
        } else {
          lt.spikes.push_back(std::move(emitted));
        }
        if (!sparse) below_dense = &lt.spikes.back();
      }
    }
  }
  return out;
}

template <typename Scalar>
struct GradientSet {
  WeightMatrix<Scalar> dL_dw;
  BatchMatrix<Scalar> dL_du;      // state gradient dL/du[0]
  BatchMatrix<Scalar> dL_dspike;  // dL/dS[0]; aligned with sparse ids in sparse mode
};

struct BackwardOptions {
  // Keep dL/dI[t] for every layer and step (testing aid).
  bool record_current_grads = false;
  KernelCounters* counters = nullptr;
};

template <typename Scalar>
struct BackwardResult {
  std::vector<GradientSet<Scalar>> grads;
  std::vector<std::vector<BatchMatrix<Scalar>>> current_grads;  // [layer][t]
};

/// Reverse-time sweep given dL/dscores.
template <typename Scalar>
BackwardResult<Scalar> backward_pass(const Network<Scalar>& net,
                                     const ForwardTrace<Scalar>& trace,
                                     const BatchMatrix<Scalar>& dL_dscores,
                                     const BackwardOptions& opt = {}) {
  const int layers = net.num_layers();
  const int steps = trace.num_timesteps;
  require(static_cast<int>(trace.layers.size()) == layers,
          "backward_pass: trace has wrong layer count");
  const bool sparse = trace.mode == ExecMode::sparse;
  for (int l = 0; l < layers; ++l) {
    const auto& lt = trace.layers[l];
    const bool spiking = detail::layer_spikes(net, l);
    const bool sparse_layer = sparse && l + 1 < layers;
    const std::size_t want = static_cast<std::size_t>(steps);
    bool ok = lt.u.size() == want && lt.i_syn.size() == want;
    if (spiking) ok = ok && (sparse_layer ? lt.sparse.size() : lt.spikes.size()) == want;
    if (!ok)
      throw ContractViolation("backward_pass: trace is missing entries for layer " +
                              std::to_string(l));
  }
  require((sparse ? trace.input_sparse.size() : trace.input.size()) ==
              static_cast<std::size_t>(steps),
          "backward_pass: trace is missing input entries");
  const Eigen::Index batch = trace.layers.front().u.front().rows();
  require(dL_dscores.rows() == batch && dL_dscores.cols() == net.spec.output_size(),
          "backward_pass: dL_dscores shape mismatch");

  BackwardResult<Scalar> out;
  out.grads.resize(layers);
  if (opt.record_current_grads) out.current_grads.assign(layers, {});

  std::vector<BatchMatrix<Scalar>> gu_next(layers);
  std::vector<BatchMatrix<Scalar>> from_above(layers);  // dL/dS_l[t] via layer l+1
  for (int l = 0; l < layers; ++l) {
    const int n = net.layers[l].size();
    out.grads[l].dL_dw = WeightMatrix<Scalar>::Zero(n, net.layers[l].fan_in());
    gu_next[l] = BatchMatrix<Scalar>::Zero(batch, n);
    const bool sparse_layer = sparse && l + 1 < layers;
    from_above[l] = BatchMatrix<Scalar>::Zero(
        batch, sparse_layer ? net.spec.sparse_sizes[l + 1] : n);
  }
  const bool membrane_readout = net.spec.readout == Readout::membrane_sum;
  if (membrane_readout) gu_next[layers - 1] = dL_dscores;  // score includes u[T]

  for (int t = steps - 1; t >= 0; --t) {
    // Ascending layers: layer l consumes from_above[l] (set by layer l+1 at
    // step t+1) before layer l+1 overwrites it for step t-1.
    for (int l = 0; l < layers; ++l) {
      const auto& layer = net.layers[l];
      const auto& p = layer.params;
      const auto& lt = trace.layers[l];
      const bool is_output = l + 1 == layers;
      const bool spiking = detail::layer_spikes(net, l);
      const bool sparse_layer = sparse && !is_output;
      const auto& g_next = gu_next[l];
      const auto& u_t = lt.u[t];

      // u[t+1] = alpha u[t] (1 - S[t]) + gain I[t]
      const Scalar gain = (Scalar(1) - p.alpha) / p.capacitance;
      BatchMatrix<Scalar> g_current = gain * g_next;
      if (opt.record_current_grads) out.current_grads[l].push_back(g_current);

      // I[t] = W S_below[t-1]; I[0] is the zero initial state.
      if (t >= 1) {
        if (sparse) {
          const auto& below =
              l == 0 ? trace.input_sparse[t - 1] : trace.layers[l - 1].sparse[t - 1];
          sparse_weight_grad(g_current, below, out.grads[l].dL_dw, opt.counters);
          if (l > 0) from_above[l - 1] = sparse_input_grad(g_current, layer.w, below, opt.counters);
        } else {
          const auto& below = l == 0 ? trace.input[t - 1] : trace.layers[l - 1].spikes[t - 1];
          dense_weight_grad(g_current, below, out.grads[l].dL_dw, opt.counters);
          if (l > 0) from_above[l - 1] = dense_input_grad(g_current, layer.w, opt.counters);
        }
      } else if (l > 0) {
        from_above[l - 1].setZero();
      }

      BatchMatrix<Scalar> gu(batch, layer.size());
      if (!spiking) {
        gu = p.alpha * g_next;
        out.grads[l].dL_dspike = BatchMatrix<Scalar>::Zero(batch, layer.size());
      } else if (sparse_layer) {
        const auto& s = lt.sparse[t];
        BatchMatrix<Scalar> g_spike = from_above[l];
        for (Eigen::Index b = 0; b < batch; ++b) {
          // Decay path; reset neurons keep alpha * 0 * g like the dense path.
          for (Eigen::Index i = 0; i < gu.cols(); ++i)
            gu(b, i) = p.alpha * Scalar(1) * g_next(b, i);
          for (auto id : s.spikes(static_cast<int>(b)))
            gu(b, id) = p.alpha * Scalar(0) * g_next(b, id);
          auto entries = s.entries(static_cast<int>(b));
          for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto id = entries[k];
            const auto kk = static_cast<Eigen::Index>(k);
            if (!trace.detach_reset) g_spike(b, kk) += -p.alpha * u_t(b, id) * g_next(b, id);
            gu(b, id) += s.grad_values(b, kk) * g_spike(b, kk);
          }
        }
        out.grads[l].dL_dspike = std::move(g_spike);
      } else {
        const auto& s = lt.spikes[t];
        BatchMatrix<Scalar> g_spike = from_above[l];
        if (is_output) g_spike += dL_dscores;  // spike-count readout
        for (Eigen::Index b = 0; b < batch; ++b) {
          for (Eigen::Index i = 0; i < gu.cols(); ++i) {
            if (!trace.detach_reset) g_spike(b, i) += -p.alpha * u_t(b, i) * g_next(b, i);
            const Scalar dsdu =
                trace.spike_fn == SpikeFn::hard
                    ? surrogate(u_t(b, i) - p.threshold[i], p.beta)
                    : relaxed_spike_grad(u_t(b, i), p.threshold[i], p.beta);
            gu(b, i) = p.alpha * (Scalar(1) - s(b, i)) * g_next(b, i) + dsdu * g_spike(b, i);
          }
        }
        out.grads[l].dL_dspike = std::move(g_spike);
      }
      if (is_output && membrane_readout && t >= 1) gu += dL_dscores;
      gu_next[l] = std::move(gu);
    }
  }
  for (int l = 0; l < layers; ++l) out.grads[l].dL_du = std::move(gu_next[l]);
  return out;
}

/// Mean softmax cross-entropy over the batch.
template <typename Scalar>
struct LossResult {
  Scalar loss = 0;
  BatchMatrix<Scalar> dL_dscores;
  int correct = 0;
};

template <typename Scalar>
LossResult<Scalar> softmax_cross_entropy(const BatchMatrix<Scalar>& scores,
                                         const std::vector<int>& labels) {
  require(static_cast<std::size_t>(scores.rows()) == labels.size(),
          "softmax_cross_entropy: label count mismatch");
  LossResult<Scalar> r;
  const auto batch = scores.rows();
  r.dL_dscores.resize(batch, scores.cols());
  double total = 0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int label = labels[b];
    require(label >= 0 && label < scores.cols(), "softmax_cross_entropy: bad label");
    Eigen::Index argmax = 0;
    const double top = static_cast<double>(scores.row(b).maxCoeff(&argmax));
    if (argmax == label) ++r.correct;
    double denom = 0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c)
      denom += std::exp(static_cast<double>(scores(b, c)) - top);
    const double log_denom = std::log(denom);
    total += log_denom - (static_cast<double>(scores(b, label)) - top);
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      const double prob = std::exp(static_cast<double>(scores(b, c)) - top - log_denom);
      r.dL_dscores(b, c) =
          static_cast<Scalar>((prob - (c == label ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  r.loss = static_cast<Scalar>(total / static_cast<double>(std::max<Eigen::Index>(batch, 1)));
  return r;
}

}  // namespace sparsnn
