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

// Leaky integrate-and-fire layer dynamics.
//
// One step of a layer, given the incoming membrane u[t] and the stored
// current I[t]:
//
//   S[t]   = H(u[t] - threshold)                       (H(0) = 1)
//   u[t+1] = alpha * u[t] * (1 - S[t]) + (1 - alpha) / C * I[t]
//   I[t+1] = W * S_in[t]
//
// so a spike arriving at step t influences the membrane one step later.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sparsnn/types.hpp"

namespace sparsnn {

enum class Readout { membrane_sum, spike_count };

/// Shape and capacity of a feed-forward network.
struct NetworkSpec {
  std::vector<int> layer_sizes;   // input first, output last
  std::vector<int> sparse_sizes;  // N_max for the input and each hidden layer
  int batch_size = 48;
  int num_timesteps = 100;
  Readout readout = Readout::membrane_sum;

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }

  void validate() const {
    if (layer_sizes.size() < 2)
      throw ConfigError("network needs an input and at least one layer");
    for (int n : layer_sizes)
      if (n < 1) throw ConfigError("layer sizes must be positive");
    if (sparse_sizes.size() != layer_sizes.size() - 1)
      throw ConfigError("need one sparse size per spiking layer boundary (" +
                        std::to_string(layer_sizes.size() - 1) + ")");
    for (std::size_t k = 0; k < sparse_sizes.size(); ++k) {
      const int n_max = sparse_sizes[k];
      if (n_max < 2 || n_max % 2 != 0)
        throw ConfigError("sparse size " + std::to_string(n_max) +
                          " must be even and >= 2");
      // Odd layers may use their full size rounded up; capacity beyond the
      // layer size is never filled.
      if (n_max > layer_sizes[k] + layer_sizes[k] % 2)
        throw ConfigError("sparse size exceeds layer size");
    }
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    if (num_timesteps < 1) throw ConfigError("timestep count must be positive");
  }
};

/// Per-layer neuron constants.
template <typename Scalar>
struct LifParams {
  Scalar alpha = Scalar(0.9);
  Scalar capacitance = Scalar(1);
  Vector<Scalar> threshold;
  Vector<Scalar> grad_threshold;
  Scalar beta = Scalar(10);

  static LifParams uniform(int n, Scalar alpha, Scalar capacitance,
                           Scalar threshold, Scalar grad_threshold,
                           Scalar beta) {
    LifParams p;
    p.alpha = alpha;
    p.capacitance = capacitance;
    p.threshold = Vector<Scalar>::Constant(n, threshold);
    p.grad_threshold = Vector<Scalar>::Constant(n, grad_threshold);
    p.beta = beta;
    return p;
  }

  int size() const { return static_cast<int>(threshold.size()); }

  void validate() const {
    if (!(alpha >= Scalar(0) && alpha < Scalar(1)))
      throw ConfigError("alpha must lie in [0, 1)");
    if (!(capacitance > Scalar(0))) throw ConfigError("capacitance must be > 0");
    if (!(beta > Scalar(0))) throw ConfigError("beta must be > 0");
    if (grad_threshold.size() != threshold.size())
      throw ConfigError("threshold vectors differ in length");
    for (Eigen::Index i = 0; i < threshold.size(); ++i)
      if (!(grad_threshold[i] <= threshold[i]))
        throw ConfigError("grad_threshold must not exceed threshold");
  }

  template <typename Other>
  LifParams<Other> cast() const {
    LifParams<Other> p;
    p.alpha = static_cast<Other>(alpha);
    p.capacitance = static_cast<Other>(capacitance);
    p.threshold = threshold.template cast<Other>();
    p.grad_threshold = grad_threshold.template cast<Other>();
    p.beta = static_cast<Other>(beta);
    return p;
  }
};

template <typename Scalar>
struct DenseLayerState {
  BatchMatrix<Scalar> u;
  BatchMatrix<Scalar> i_syn;

  static DenseLayerState zeros(int batch, int n) {
    return {BatchMatrix<Scalar>::Zero(batch, n),
            BatchMatrix<Scalar>::Zero(batch, n)};
  }
};

/// SuperSpike surrogate derivative 1 / (beta |x| + 1)^2.
template <typename Scalar>
inline Scalar surrogate(Scalar x, Scalar beta) {
  const Scalar d = beta * std::abs(x) + Scalar(1);
  return Scalar(1) / (d * d);
}

// Smooth stand-in for the Heaviside used only to validate gradients with
// finite differences. sigma(x) = 1/2 + (beta/2) x / (beta |x| + 1) has
// derivative (beta/2) * surrogate(x); the output is shifted so that a neuron
// at rest (u = 0) emits exactly zero.
template <typename Scalar>
inline Scalar relaxed_sigma(Scalar x, Scalar beta) {
  return Scalar(0.5) + Scalar(0.5) * beta * x / (beta * std::abs(x) + Scalar(1));
}

template <typename Scalar>
inline Scalar relaxed_spike(Scalar u, Scalar threshold, Scalar beta) {
  return relaxed_sigma(u - threshold, beta) - relaxed_sigma(-threshold, beta);
}

template <typename Scalar>
inline Scalar relaxed_spike_grad(Scalar u, Scalar threshold, Scalar beta) {
  return Scalar(0.5) * beta * surrogate(u - threshold, beta);
}

template <typename Scalar>
BatchMatrix<Scalar> threshold_spikes_dense(const BatchMatrix<Scalar>& u,
                                           const Vector<Scalar>& threshold) {
  require(u.cols() == threshold.size(),
          "threshold_spikes_dense: " + shape_str(u.rows(), u.cols()) +
              " membrane vs " + std::to_string(threshold.size()) +
              " thresholds");
  BatchMatrix<Scalar> s(u.rows(), u.cols());
  for (Eigen::Index b = 0; b < u.rows(); ++b)
    for (Eigen::Index i = 0; i < u.cols(); ++i)
      s(b, i) = u(b, i) >= threshold[i] ? Scalar(1) : Scalar(0);
  return s;
}

/// Membrane update u' = alpha u (1 - S) + (1 - alpha)/C * I, written in place.
template <typename Scalar>
void integrate_membrane(Eigen::Ref<BatchMatrix<Scalar>> u,
                        const Eigen::Ref<const BatchMatrix<Scalar>>& spikes,
                        const Eigen::Ref<const BatchMatrix<Scalar>>& i_syn,
                        Scalar alpha, Scalar capacitance) {
  const Scalar gain = (Scalar(1) - alpha) / capacitance;
  u = (alpha * u.array() * (Scalar(1) - spikes.array()) +
       gain * i_syn.array())
          .matrix();
}

template <typename Scalar>
struct LifStepResult {
  DenseLayerState<Scalar> state;
  BatchMatrix<Scalar> spikes;
};

/// One dense LIF step: emit from the incoming u, integrate the stored
/// current, then latch `new_current` for the next step.
template <typename Scalar>
LifStepResult<Scalar> lif_step_dense(const DenseLayerState<Scalar>& state,
                                     const LifParams<Scalar>& params,
                                     const BatchMatrix<Scalar>& new_current) {
  const auto rows = state.u.rows();
  const auto cols = state.u.cols();
  require(state.i_syn.rows() == rows && state.i_syn.cols() == cols,
          "lif_step_dense: current/membrane shape mismatch");
  require(new_current.rows() == rows && new_current.cols() == cols,
          "lif_step_dense: new current is " +
              shape_str(new_current.rows(), new_current.cols()) +
              ", expected " + shape_str(rows, cols));
  require(params.size() == cols, "lif_step_dense: threshold length mismatch");

  LifStepResult<Scalar> out;
  out.spikes = threshold_spikes_dense(state.u, params.threshold);
  out.state.u = state.u;
  integrate_membrane<Scalar>(out.state.u, out.spikes, state.i_syn,
                             params.alpha, params.capacitance);
  out.state.i_syn = new_current;
  return out;
}

}  // namespace sparsnn
