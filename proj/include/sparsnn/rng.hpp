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

#include <cstdint>

namespace sparsnn {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t key, std::uint64_t value) {
  return mix64(key ^ mix64(value + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: the n-th draw of a stream is a pure function of
/// (seed, n), so streams keyed by (layer, timestep, row) give the same values
/// regardless of which thread consumes them or in which order.
class DropRng {
 public:
  DropRng() = default;
  explicit DropRng(std::uint64_t seed, std::uint64_t position = 0)
      : seed_(seed), position_(position) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  /// Independent child stream; does not advance this one.
  DropRng stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                 std::uint64_t d = 0) const {
    std::uint64_t key = hash_combine(seed_, a);
    key = hash_combine(key, b);
    key = hash_combine(key, c);
    key = hash_combine(key, d);
    return DropRng(key, 0);
  }

  std::uint64_t next_u64() { return mix64(seed_ ^ mix64(position_++)); }

  /// Exactly uniform integer in [0, bound) by Lemire's rejection method.
  std::uint32_t uniform(std::uint32_t bound) {
    if (bound <= 1) return 0;
    std::uint64_t m = (next_u64() >> 32) * std::uint64_t{bound};
    auto low = static_cast<std::uint32_t>(m);
    if (low < bound) {
      const std::uint32_t floor = static_cast<std::uint32_t>(-bound) % bound;
      while (low < floor) {
        m = (next_u64() >> 32) * std::uint64_t{bound};
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t position_ = 0;
};

}  // namespace sparsnn
