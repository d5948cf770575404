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

// Event streams and the ESF file format.
//
// ESF layout, all integers little-endian:
//
//   offset 0   8 bytes   magic "ESFv0001"
//   offset 8   u32       num_channels
//   offset 12  u32       num_events
//   offset 16  u32       label
//   offset 20  num_events x { u32 timestamp_us, u32 channel }

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsnn/train.hpp"
#include "sparsnn/types.hpp"

namespace sparsnn {

struct Event {
  std::uint32_t timestamp_us = 0;
  std::uint32_t channel = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  std::vector<Event> events;
  std::uint32_t num_channels = 0;
  std::uint32_t label = 0;

  std::uint64_t duration_us() const {
    return events.empty() ? 0 : std::uint64_t{events.back().timestamp_us} + 1;
  }

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

inline constexpr char kEsfMagic[8] = {'E', 'S', 'F', 'v', '0', '0', '0', '1'};

std::vector<std::uint8_t> encode_esf(const EventStream& stream);
EventStream decode_esf(std::span<const std::uint8_t> bytes);

/// Reads an ESF file; events come back sorted by timestamp (stable).
EventStream load_events(const std::filesystem::path& path);
void save_events(const std::filesystem::path& path, const EventStream& stream);

/// Binary frames (timesteps x num_channels): 1 where a channel saw at least
/// one event in [t * width, (t + 1) * width). Later events are discarded.
BatchMatrix<float> bin_events(const EventStream& stream, int num_timesteps,
                              std::uint32_t bin_width_us);

/// floor(max_activity * dense_size / 2) * 2, never below 2.
int sparse_hidden_size(double max_activity, int dense_size);

struct DatasetSpec {
  std::string name;
  int input_size = 0;
  int sparse_input_size = 0;
  int num_classes = 0;
};

DatasetSpec dataset_preset(const std::string& name);  // shd, nmnist, dvsgesture
std::vector<DatasetSpec> dataset_presets();

struct SynthOptions {
  int num_classes = 10;
  int input_size = 128;
  int samples_per_class = 20;
  int num_timesteps = 50;
  double noise_rate = 0.0;        // expected noise events per channel per bin
  double template_density = 0.05; // probability a (bin, channel) is in a template
  std::uint32_t bin_width_us = 1000;
  std::uint64_t seed = 42;
  int first_sample = 0;           // offsets the noise streams, e.g. for a test split
};

/// Each class has a fixed random template of events; samples add Poisson
/// noise on top. Deterministic in the options.
std::vector<EventStream> synth_pattern_dataset(const SynthOptions& opt);

struct ManifestEntry {
  std::filesystem::path path;
  int label = 0;
};

/// Writes one ESF file per stream into `dir` and a `path,label` CSV.
void write_dataset(const std::filesystem::path& dir, const std::string& manifest_name,
                   const std::string& prefix, const std::vector<EventStream>& streams);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

/// Loads and bins every sample named by a manifest.
Dataset load_dataset(const std::filesystem::path& manifest, int num_timesteps,
                     std::uint32_t bin_width_us, int num_classes = 0);
Dataset bin_dataset(const std::vector<EventStream>& streams, int num_timesteps,
                    std::uint32_t bin_width_us, int num_classes = 0);

}  // namespace sparsnn
