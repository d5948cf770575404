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

// Binary training checkpoints.
//
// Little-endian container: magic "SSNNCKP1", then the network spec, every
// layer's neuron constants and weights, optimizer state, seed and epoch.
// Floats are stored as raw IEEE bits, so a load reproduces the saved state
// bit for bit.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparsnn/network.hpp"
#include "sparsnn/optim.hpp"

namespace sparsnn {

struct Checkpoint {
  Network<float> net;
  Optimizer<float> optimizer;
  std::uint64_t seed = 42;
  std::int32_t epoch = 0;  // epochs completed
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sparsnn
