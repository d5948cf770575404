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
#include <vector>

#include "sparsnn/lif.hpp"
#include "sparsnn/rng.hpp"
#include "sparsnn/types.hpp"

namespace sparsnn {

/// Neuron constants and weight initialisation shared by all layers.
struct NeuronConfig {
  double alpha = 0.9;
  double capacitance = 1.0;
  double threshold = 1.0;
  double grad_threshold = 0.5;
  double beta = 10.0;
  // Weights ~ N(mean, (gain / sqrt(fan_in))^2).
  double weight_gain = 1.0;
  double weight_mean = 0.0;
};

template <typename Scalar>
struct Layer {
  LifParams<Scalar> params;
  WeightMatrix<Scalar> w;  // post x pre

  int size() const { return static_cast<int>(w.rows()); }
  int fan_in() const { return static_cast<int>(w.cols()); }
};

template <typename Scalar>
struct Network {
  NetworkSpec spec;
  std::vector<Layer<Scalar>> layers;  // one per non-input layer

  int num_layers() const { return static_cast<int>(layers.size()); }

  void validate() const {
    spec.validate();
    require(static_cast<int>(layers.size()) == spec.num_layers(),
            "network: layer count does not match spec");
    for (int l = 0; l < num_layers(); ++l) {
      const auto& layer = layers[l];
      require(layer.w.rows() == spec.layer_sizes[l + 1] &&
                  layer.w.cols() == spec.layer_sizes[l],
              "network: weight shape mismatch in layer " + std::to_string(l));
      require(layer.params.size() == spec.layer_sizes[l + 1],
              "network: threshold length mismatch in layer " + std::to_string(l));
      require(layer.w.allFinite(), "network: non-finite weights");
      layer.params.validate();
    }
  }

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out;
    out.spec = spec;
    for (const auto& layer : layers)
      out.layers.push_back({layer.params.template cast<Other>(),
                            layer.w.template cast<Other>()});
    return out;
  }
};

/// Standard normal variate from two uniforms (Box-Muller), platform-stable.
inline double normal_variate(DropRng& rng) {
  double u1 = rng.uniform01();
  while (u1 <= 0.0) u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename Scalar>
Network<Scalar> make_network(const NetworkSpec& spec, const NeuronConfig& cfg,
                             std::uint64_t seed) {
  spec.validate();
  Network<Scalar> net;
  net.spec = spec;
  const DropRng root(seed);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int n = spec.layer_sizes[l + 1];
    Layer<Scalar> layer;
    layer.params = LifParams<Scalar>::uniform(
        n, Scalar(cfg.alpha), Scalar(cfg.capacitance), Scalar(cfg.threshold),
        Scalar(std::min(cfg.grad_threshold, cfg.threshold)), Scalar(cfg.beta));
    layer.w.resize(n, fan_in);
    DropRng rng = root.stream(0x77, static_cast<std::uint64_t>(l));
    const double scale = cfg.weight_gain / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < layer.w.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.w.rows(); ++i)
        layer.w(i, j) = static_cast<Scalar>(cfg.weight_mean + scale * normal_variate(rng));
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

}  // namespace sparsnn
