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

#include "sparsnn/events.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "sparsnn/rng.hpp"

namespace sparsnn {
namespace {

constexpr std::size_t kHeaderBytes = 20;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= std::uint32_t{bytes[offset + k]} << (8 * k);
  return v;
}

std::uint32_t poisson(DropRng& rng, double mean) {
  if (mean <= 0) return 0;
  const double limit = std::exp(-mean);
  double prod = rng.uniform01();
  std::uint32_t k = 0;
  while (prod > limit) {
    ++k;
    prod *= rng.uniform01();
  }
  return k;
}

}  // namespace

std::vector<std::uint8_t> encode_esf(const EventStream& stream) {
  std::vector<std::uint8_t> out(std::begin(kEsfMagic), std::end(kEsfMagic));
  out.reserve(kHeaderBytes + 8 * stream.events.size());
  put_u32(out, stream.num_channels);
  put_u32(out, static_cast<std::uint32_t>(stream.events.size()));
  put_u32(out, stream.label);
  for (const auto& e : stream.events) {
    put_u32(out, e.timestamp_us);
    put_u32(out, e.channel);
  }
  return out;
}

EventStream decode_esf(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw DataError("ESF: truncated header");
  if (std::memcmp(bytes.data(), kEsfMagic, sizeof kEsfMagic) != 0)
    throw DataError("ESF: bad magic");
  EventStream s;
  s.num_channels = get_u32(bytes, 8);
  const std::uint32_t count = get_u32(bytes, 12);
  s.label = get_u32(bytes, 16);
  if (bytes.size() != kHeaderBytes + 8 * std::uint64_t{count})
    throw DataError("ESF: expected " + std::to_string(count) + " events, file size " +
                    std::to_string(bytes.size()) + " does not match");
  s.events.resize(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto& e = s.events[k];
    e.timestamp_us = get_u32(bytes, kHeaderBytes + 8 * std::size_t{k});
    e.channel = get_u32(bytes, kHeaderBytes + 8 * std::size_t{k} + 4);
    if (e.channel >= s.num_channels)
      throw DataError("ESF: event channel " + std::to_string(e.channel) +
                      " >= num_channels " + std::to_string(s.num_channels));
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const Event& a, const Event& b) { return a.timestamp_us < b.timestamp_us; });
  return s;
}

EventStream load_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_esf(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_events(const std::filesystem::path& path, const EventStream& stream) {
  const auto bytes = encode_esf(stream);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

BatchMatrix<float> bin_events(const EventStream& stream, int num_timesteps,
                              std::uint32_t bin_width_us) {
  if (bin_width_us == 0) throw ConfigError("bin width must be positive");
  if (num_timesteps < 1) throw ConfigError("timestep count must be positive");
  BatchMatrix<float> frames = BatchMatrix<float>::Zero(num_timesteps, stream.num_channels);
  for (const auto& e : stream.events) {
    const std::uint64_t bin = e.timestamp_us / bin_width_us;
    if (bin >= static_cast<std::uint64_t>(num_timesteps)) continue;
    if (e.channel >= stream.num_channels) throw DataError("event channel out of range");
    frames(static_cast<Eigen::Index>(bin), e.channel) = 1.0f;
  }
  return frames;
}

int sparse_hidden_size(double max_activity, int dense_size) {
  const double half = std::floor(max_activity * static_cast<double>(dense_size) / 2.0);
  return std::max(2, static_cast<int>(half) * 2);
}

std::vector<DatasetSpec> dataset_presets() {
  return {{"shd", 700, 48, 20}, {"nmnist", 2048, 32, 10}, {"dvsgesture", 4608, 96, 11}};
}

DatasetSpec dataset_preset(const std::string& name) {
  for (auto& d : dataset_presets())
    if (d.name == name) return d;
  throw ConfigError("unknown dataset preset '" + name + "'");
}

std::vector<EventStream> synth_pattern_dataset(const SynthOptions& opt) {
  if (opt.num_classes < 1 || opt.input_size < 1 || opt.samples_per_class < 0 ||
      opt.num_timesteps < 1 || opt.bin_width_us == 0 || opt.noise_rate < 0)
    throw ConfigError("synth_pattern_dataset: parameters must be positive");
  const DropRng root(opt.seed);
  const auto width = opt.bin_width_us;

  std::vector<std::vector<Event>> templates(opt.num_classes);
  for (int c = 0; c < opt.num_classes; ++c) {
    DropRng rng = root.stream(1, static_cast<std::uint64_t>(c));
    for (int t = 0; t < opt.num_timesteps; ++t)
      for (int ch = 0; ch < opt.input_size; ++ch)
        if (rng.uniform01() < opt.template_density)
          templates[c].push_back({static_cast<std::uint32_t>(t) * width + rng.uniform(width),
                                  static_cast<std::uint32_t>(ch)});
  }

  std::vector<EventStream> out;
  for (int c = 0; c < opt.num_classes; ++c) {
    for (int k = 0; k < opt.samples_per_class; ++k) {
      EventStream s;
      s.num_channels = static_cast<std::uint32_t>(opt.input_size);
      s.label = static_cast<std::uint32_t>(c);
      s.events = templates[c];
      DropRng rng = root.stream(2, static_cast<std::uint64_t>(c),
                                static_cast<std::uint64_t>(opt.first_sample + k));
      for (int t = 0; t < opt.num_timesteps; ++t)
        for (int ch = 0; ch < opt.input_size; ++ch)
          for (auto n = poisson(rng, opt.noise_rate); n > 0; --n)
            s.events.push_back({static_cast<std::uint32_t>(t) * width + rng.uniform(width),
                                static_cast<std::uint32_t>(ch)});
      std::stable_sort(s.events.begin(), s.events.end(), [](const Event& a, const Event& b) {
        return a.timestamp_us < b.timestamp_us;
      });
      out.push_back(std::move(s));
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& dir, const std::string& manifest_name,
                   const std::string& prefix, const std::vector<EventStream>& streams) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / manifest_name);
  if (!manifest) throw DataError("cannot write manifest in " + dir.string());
  manifest << "path,label\n";
  for (std::size_t k = 0; k < streams.size(); ++k) {
    std::ostringstream name;
    name << prefix << '_' << std::setw(5) << std::setfill('0') << k << ".esf";
    save_events(dir / name.str(), streams[k]);
    manifest << name.str() << ',' << streams[k].label << '\n';
  }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line.rfind("path,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw DataError("manifest line without label: " + line);
    ManifestEntry e;
    e.path = line.substr(0, comma);
    if (e.path.is_relative()) e.path = manifest.parent_path() / e.path;
    try {
      e.label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError("manifest label is not an integer: " + line);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

Dataset bin_dataset(const std::vector<EventStream>& streams, int num_timesteps,
                    std::uint32_t bin_width_us, int num_classes) {
  Dataset ds;
  ds.num_timesteps = num_timesteps;
  ds.num_classes = num_classes;
  for (const auto& s : streams) {
    if (ds.frames.empty()) ds.input_size = static_cast<int>(s.num_channels);
    if (static_cast<int>(s.num_channels) != ds.input_size)
      throw DataError("samples disagree on channel count");
    ds.frames.push_back(bin_events(s, num_timesteps, bin_width_us));
    ds.labels.push_back(static_cast<int>(s.label));
    ds.num_classes = std::max(ds.num_classes, static_cast<int>(s.label) + 1);
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& manifest, int num_timesteps,
                     std::uint32_t bin_width_us, int num_classes) {
  std::vector<EventStream> streams;
  for (const auto& e : read_manifest(manifest)) {
    auto s = load_events(e.path);
    s.label = static_cast<std::uint32_t>(e.label);
    streams.push_back(std::move(s));
  }
  if (streams.empty()) throw DataError("manifest " + manifest.string() + " lists no samples");
  return bin_dataset(streams, num_timesteps, bin_width_us, num_classes);
}

}  // namespace sparsnn
