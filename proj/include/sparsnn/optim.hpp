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

#include <cmath>
#include <cstdint>
#include <vector>

#include "sparsnn/bptt.hpp"
#include "sparsnn/network.hpp"

namespace sparsnn {

enum class OptimizerKind { sgd, adam };

template <typename Scalar>
void sgd_step(WeightMatrix<Scalar>& w, const WeightMatrix<Scalar>& g, Scalar lr) {
  require(lr > Scalar(0), "sgd_step: learning rate must be positive");
  require(w.rows() == g.rows() && w.cols() == g.cols(), "sgd_step: shape mismatch");
  w -= lr * g;
}

template <typename Scalar>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<WeightMatrix<Scalar>> m;
  std::vector<WeightMatrix<Scalar>> v;

  void reset(const Network<Scalar>& net) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& layer : net.layers) {
      m.push_back(WeightMatrix<Scalar>::Zero(layer.w.rows(), layer.w.cols()));
      v.push_back(WeightMatrix<Scalar>::Zero(layer.w.rows(), layer.w.cols()));
    }
  }
};

/// Adam with bias correction; `state` must have been reset for `params`.
template <typename Scalar>
void adam_step(std::vector<WeightMatrix<Scalar>*> params,
               const std::vector<const WeightMatrix<Scalar>*>& grads,
               AdamState<Scalar>& state) {
  require(params.size() == grads.size() && params.size() == state.m.size(),
          "adam_step: parameter/gradient/state count mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Scalar b1 = Scalar(state.beta1), b2 = Scalar(state.beta2);
  const Scalar step_size = Scalar(state.lr / c1);
  const Scalar inv_c2 = Scalar(1.0 / c2);
  const Scalar eps = Scalar(state.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = *params[k];
    const auto& g = *grads[k];
    require(w.rows() == g.rows() && w.cols() == g.cols() && state.m[k].rows() == w.rows() &&
                state.m[k].cols() == w.cols(),
            "adam_step: shape mismatch");
    auto& m = state.m[k];
    auto& v = state.v[k];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    w.array() -= step_size * m.array() / ((v.array() * inv_c2).sqrt() + eps);
  }
}

/// Either optimizer behind one interface, applied to all layer weights.
template <typename Scalar>
struct Optimizer {
  OptimizerKind kind = OptimizerKind::adam;
  AdamState<Scalar> adam;  // lr lives here for both kinds

  static Optimizer make(OptimizerKind kind, double lr, const Network<Scalar>& net) {
    Optimizer o;
    o.kind = kind;
    o.adam.lr = lr;
    o.adam.reset(net);
    return o;
  }

  double lr() const { return adam.lr; }

  void apply(Network<Scalar>& net, const std::vector<GradientSet<Scalar>>& grads) {
    require(grads.size() == net.layers.size(), "optimizer: gradient count mismatch");
    if (adam.lr == 0.0) return;
    if (kind == OptimizerKind::sgd) {
      for (std::size_t l = 0; l < grads.size(); ++l)
        sgd_step(net.layers[l].w, grads[l].dL_dw, Scalar(adam.lr));
      return;
    }
    std::vector<WeightMatrix<Scalar>*> params;
    std::vector<const WeightMatrix<Scalar>*> g;
    for (std::size_t l = 0; l < grads.size(); ++l) {
      params.push_back(&net.layers[l].w);
      g.push_back(&grads[l].dL_dw);
    }
    adam_step(params, g, adam);
  }
};

}  // namespace sparsnn
