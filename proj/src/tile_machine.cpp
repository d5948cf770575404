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

#include "sparsnn/tile_machine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "sparsnn/events.hpp"

namespace sparsnn {

void CostParams::validate() const {
  if (!(cycles_per_mac > 0 && cycles_per_state_update > 0 && sync_cycles_per_superstep > 0))
    throw ConfigError("cost parameters must be positive");
  if (!(intra_chip_cycles_per_8_bytes > 0))
    throw ConfigError("intra-chip exchange cost must be positive");
  if (!(paired_chip_cycles_per_8_bytes >= intra_chip_cycles_per_8_bytes &&
        inter_chip_cycles_per_8_bytes >= paired_chip_cycles_per_8_bytes))
    throw ConfigError("exchange costs must satisfy inter >= paired >= intra");
  if (inter_chip_latency_cycles < 0 || inter_chip_sync_cycles < 0)
    throw ConfigError("latency and sync surcharges must be non-negative");
}

void MachineSpec::validate() const {
  if (tiles_per_chip < 1 || sram_per_tile == 0 || num_chips < 1 || !(clock_hz > 0))
    throw ConfigError("machine parameters must be positive");
  cost.validate();
}

MachineSpec parse_machine_config(const std::string& text) {
  MachineSpec m;
  std::map<std::string, std::function<void(double)>> setters = {
      {"tiles_per_chip", [&](double v) { m.tiles_per_chip = static_cast<int>(v); }},
      {"sram_per_tile", [&](double v) { m.sram_per_tile = static_cast<std::uint64_t>(v); }},
      {"num_chips", [&](double v) { m.num_chips = static_cast<int>(v); }},
      {"clock_hz", [&](double v) { m.clock_hz = v; }},
      {"cycles_per_mac", [&](double v) { m.cost.cycles_per_mac = v; }},
      {"cycles_per_state_update", [&](double v) { m.cost.cycles_per_state_update = v; }},
      {"intra_chip_cycles_per_8_bytes", [&](double v) { m.cost.intra_chip_cycles_per_8_bytes = v; }},
      {"paired_chip_cycles_per_8_bytes", [&](double v) { m.cost.paired_chip_cycles_per_8_bytes = v; }},
      {"inter_chip_cycles_per_8_bytes", [&](double v) { m.cost.inter_chip_cycles_per_8_bytes = v; }},
      {"inter_chip_latency_cycles", [&](double v) { m.cost.inter_chip_latency_cycles = v; }},
      {"sync_cycles_per_superstep", [&](double v) { m.cost.sync_cycles_per_superstep = v; }},
      {"inter_chip_sync_cycles", [&](double v) { m.cost.inter_chip_sync_cycles = v; }},
  };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(line).empty()) continue;
    if (eq == std::string::npos)
      throw ConfigError("machine config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("machine config: unknown key '" + key + "'");
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("machine config: '" + key + "' is not a number");
    }
    it->second(v);
  }
  m.validate();
  return m;
}

MachineSpec load_machine_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open machine config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_machine_config(buf.str());
}

OutOfTileMemory::OutOfTileMemory(int tile, std::uint64_t bytes, std::uint64_t budget)
    : std::runtime_error("tile " + std::to_string(tile) + " needs " + std::to_string(bytes) +
                         " bytes, budget is " + std::to_string(budget)),
      tile_(tile),
      bytes_(bytes) {}

std::uint64_t MemoryModel::neuron_bytes(int fan_in) const {
  const std::uint64_t weight_copies = adam ? 4 : 2;
  const auto b = static_cast<std::uint64_t>(batch_size);
  const auto t = static_cast<std::uint64_t>(num_timesteps);
  return 4 * static_cast<std::uint64_t>(fan_in) * weight_copies + 4 * b * 4 + 4 * b * 2 * t + 8;
}

std::uint64_t MemoryModel::receive_buffer_bytes(int n_max_in) const {
  return static_cast<std::uint64_t>(batch_size) * (8 + 8 * static_cast<std::uint64_t>(n_max_in));
}

int TileMapping::tile_of(int layer, int neuron) const {
  require(layer >= 0 && layer < static_cast<int>(layer_sizes.size()) && neuron >= 0 &&
              neuron < layer_sizes[layer],
          "TileMapping: neuron out of range");
  return (layer_first_neuron[layer] + neuron) / neurons_per_tile;
}

TileMapping::Location TileMapping::locate(int layer, int neuron) const {
  const int tile = tile_of(layer, neuron);
  return {chip_of_tile(tile), tile};
}

int TileMapping::neurons_on(int layer, int tile) const {
  const long lo = std::max<long>(layer_first_neuron[layer], long{tile} * neurons_per_tile);
  const long hi = std::min<long>(layer_first_neuron[layer] + layer_sizes[layer],
                                 long{tile + 1} * neurons_per_tile);
  return static_cast<int>(std::max<long>(0, hi - lo));
}

TileMapping map_neurons(const NetworkSpec& net, const MachineSpec& machine, int neurons_per_tile,
                        const MappingOptions& opt) {
  net.validate();
  machine.validate();
  if (neurons_per_tile < 1) throw ConfigError("neurons per tile must be >= 1");

  TileMapping m;
  m.neurons_per_tile = neurons_per_tile;
  m.tiles_per_chip = machine.tiles_per_chip;
  const long per_chip = long{machine.tiles_per_chip} * neurons_per_tile;
  long next = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    const bool new_chip = std::find(opt.chip_start_layers.begin(), opt.chip_start_layers.end(),
                                    l) != opt.chip_start_layers.end();
    if (new_chip && next % per_chip != 0) next = (next / per_chip + 1) * per_chip;
    const int n = net.layer_sizes[l + 1];
    m.layer_first_neuron.push_back(static_cast<int>(next));
    m.layer_sizes.push_back(n);
    m.layer_first_tile.push_back(static_cast<int>(next / neurons_per_tile));
    m.layer_last_tile.push_back(static_cast<int>((next + n - 1) / neurons_per_tile));
    next += n;
  }
  m.tiles_used = m.layer_last_tile.back() + 1;
  const long available = long{machine.tiles_per_chip} * machine.num_chips;
  if (m.tiles_used > available)
    throw ConfigError("mapping needs " + std::to_string(m.tiles_used) + " tiles, machine has " +
                      std::to_string(available));

  const MemoryModel mem{net.batch_size, net.num_timesteps, opt.adam};
  m.tile_bytes.assign(m.tiles_used, 0);
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto per_neuron = mem.neuron_bytes(net.layer_sizes[l]);
    const auto buffer = mem.receive_buffer_bytes(net.sparse_sizes[l]);
    for (int tile = m.layer_first_tile[l]; tile <= m.layer_last_tile[l]; ++tile)
      m.tile_bytes[tile] += per_neuron * static_cast<std::uint64_t>(m.neurons_on(l, tile)) + buffer;
  }
  for (int tile = 0; tile < m.tiles_used; ++tile)
    if (m.tile_bytes[tile] > machine.sram_per_tile)
      throw OutOfTileMemory(tile, m.tile_bytes[tile], machine.sram_per_tile);
  return m;
}

namespace {

template <typename Scalar>
ActivityTrace activity_from(const ForwardTrace<Scalar>& trace) {
  ActivityTrace a;
  const int boundaries = static_cast<int>(trace.layers.size());
  for (int t = 0; t < trace.num_timesteps; ++t) {
    std::vector<double> spikes(boundaries), entries(boundaries);
    for (int k = 0; k < boundaries; ++k) {
      if (trace.mode == ExecMode::sparse) {
        const auto& s = k == 0 ? trace.input_sparse[t] : trace.layers[k - 1].sparse[t];
        spikes[k] = static_cast<double>(s.total_spikes());
        entries[k] = static_cast<double>(s.total_entries());
      } else {
        const auto& s = k == 0 ? trace.input[t] : trace.layers[k - 1].spikes[t];
        spikes[k] = entries[k] = static_cast<double>((s.array() != Scalar(0)).count());
      }
    }
    a.spikes.push_back(std::move(spikes));
    a.entries.push_back(std::move(entries));
  }
  return a;
}

ActivityTrace constant_activity(const NetworkSpec& net, const std::function<double(int)>& count) {
  ActivityTrace a;
  std::vector<double> row(net.num_layers());
  for (int k = 0; k < net.num_layers(); ++k) row[k] = count(k);
  a.spikes.assign(net.num_timesteps, row);
  a.entries.assign(net.num_timesteps, row);
  return a;
}

double capacity(const NetworkSpec& net, int k) {
  return static_cast<double>(net.batch_size) *
         std::min(net.sparse_sizes[k], net.layer_sizes[k]);
}

}  // namespace

ActivityTrace ActivityTrace::zeros(const NetworkSpec& net) {
  return constant_activity(net, [](int) { return 0.0; });
}

ActivityTrace ActivityTrace::saturated(const NetworkSpec& net) {
  return constant_activity(net, [&](int k) { return capacity(net, k); });
}

ActivityTrace ActivityTrace::uniform(const NetworkSpec& net, double fraction) {
  return constant_activity(net, [&](int k) {
    return std::min(capacity(net, k),
                    fraction * static_cast<double>(net.batch_size) * net.layer_sizes[k]);
  });
}

ActivityTrace ActivityTrace::from_trace(const ForwardTrace<float>& trace) {
  return activity_from(trace);
}
ActivityTrace ActivityTrace::from_trace(const ForwardTrace<double>& trace) {
  return activity_from(trace);
}

ActivityTrace ActivityTrace::scaled(double factor) const {
  ActivityTrace a = *this;
  for (auto* table : {&a.spikes, &a.entries})
    for (auto& row : *table)
      for (auto& v : row) v *= factor;
  return a;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::compute: return "compute";
    case Phase::exchange: return "exchange";
    case Phase::sync: return "sync";
  }
  return "?";
}

namespace {

int ceil_log2(int m) {
  int d = 0;
  while ((1 << d) < m) ++d;
  return d;
}

// Accumulates one superstep's per-tile work, then folds it into the ledger.
class SuperstepBuilder {
 public:
  SuperstepBuilder(const TileMapping& map, const MachineSpec& machine)
      : map_(map),
        cost_(machine.cost),
        chips_(map.chips_used()),
        compute_(map.tiles_used, 0.0),
        exchange_(map.tiles_used, 0.0),
        chip_intra_(chips_, 0.0),
        chip_inter_(chips_, 0.0) {}

  void compute(int tile, double cycles) { compute_[tile] += cycles; }

  void transfer(int src_tile, int dst_tile, double header, double payload) {
    const double bytes = header + payload;
    if (src_tile == dst_tile || bytes <= 0) return;
    const int src = map_.chip_of_tile(src_tile);
    const int dst = map_.chip_of_tile(dst_tile);
    double per8 = cost_.intra_chip_cycles_per_8_bytes;
    if (src != dst) {
      per8 = src / 2 == dst / 2 ? cost_.paired_chip_cycles_per_8_bytes
                                : cost_.inter_chip_cycles_per_8_bytes;
      crosses_chip_ = true;
      step_.inter_bytes += bytes;
      chip_inter_[dst] += bytes;
    } else {
      step_.intra_bytes += bytes;
      chip_intra_[dst] += bytes;
    }
    exchange_[dst_tile] += bytes / 8.0 * per8;
    step_.header_bytes += header;
    step_.payload_bytes += payload;
  }

  void finish(std::string label, CostLedger& ledger) {
    const int index = static_cast<int>(ledger.supersteps.size());
    std::vector<double> chip_compute(chips_, 0.0), chip_exchange(chips_, 0.0);
    for (int tile = 0; tile < map_.tiles_used; ++tile) {
      const int chip = map_.chip_of_tile(tile);
      chip_compute[chip] = std::max(chip_compute[chip], compute_[tile]);
      chip_exchange[chip] = std::max(chip_exchange[chip], exchange_[tile]);
    }
    const double latency = crosses_chip_ ? cost_.inter_chip_latency_cycles : 0.0;
    const double sync =
        cost_.sync_cycles_per_superstep + (chips_ > 1 ? cost_.inter_chip_sync_cycles : 0.0);
    step_.label = std::move(label);
    step_.compute_cycles = *std::max_element(chip_compute.begin(), chip_compute.end());
    step_.exchange_cycles =
        *std::max_element(chip_exchange.begin(), chip_exchange.end()) + latency;
    step_.sync_cycles = sync;
    for (int c = 0; c < chips_; ++c) {
      ledger.rows.push_back({index, Phase::compute, c, chip_compute[c], 0, 0});
      ledger.rows.push_back({index, Phase::exchange, c, chip_exchange[c] + latency,
                             chip_intra_[c], chip_inter_[c]});
      ledger.rows.push_back({index, Phase::sync, c, sync, 0, 0});
    }
    ledger.supersteps.push_back(step_);

    step_ = {};
    crosses_chip_ = false;
    std::fill(compute_.begin(), compute_.end(), 0.0);
    std::fill(exchange_.begin(), exchange_.end(), 0.0);
    std::fill(chip_intra_.begin(), chip_intra_.end(), 0.0);
    std::fill(chip_inter_.begin(), chip_inter_.end(), 0.0);
  }

 private:
  const TileMapping& map_;
  const CostParams& cost_;
  int chips_;
  std::vector<double> compute_;
  std::vector<double> exchange_;
  std::vector<double> chip_intra_;
  std::vector<double> chip_inter_;
  SuperstepCost step_;
  bool crosses_chip_ = false;
};

struct Simulation {
  const NetworkSpec& net;
  const TileMapping& map;
  const MachineSpec& machine;
  const ActivityTrace& activity;
  ExecMode mode;
  CostLedger ledger;
  SuperstepBuilder step;
  std::vector<int> gather_depth;  // per boundary (0 for the input)
  std::vector<int> reduce_depth;  // per layer (0 for layer 0)
  std::vector<std::vector<std::pair<int, int>>> tile_layers;  // tile -> (layer, neurons)

  Simulation(const NetworkSpec& n, const TileMapping& m, const MachineSpec& mc,
             const ActivityTrace& a, ExecMode md)
      : net(n), map(m), machine(mc), activity(a), mode(md), step(m, mc) {
    ledger.clock_hz = machine.clock_hz;
    const int layers = net.num_layers();
    tile_layers.resize(map.tiles_used);
    for (int l = 0; l < layers; ++l)
      for (int tile = map.layer_first_tile[l]; tile <= map.layer_last_tile[l]; ++tile)
        tile_layers[tile].push_back({l, map.neurons_on(l, tile)});
    gather_depth.assign(layers, 0);
    reduce_depth.assign(layers, 0);
    for (int k = 1; k < layers; ++k) {
      gather_depth[k] = ceil_log2(map.tile_count(k - 1));
      reduce_depth[k] = ceil_log2(map.tile_count(k));
    }
  }

  bool sparse() const { return mode == ExecMode::sparse; }
  double batch() const { return static_cast<double>(net.batch_size); }
  int home(int boundary) const { return boundary == 0 ? 0 : map.layer_first_tile[boundary - 1]; }

  // Sends a share of a layer-wide quantity along a binary tree over the
  // layer's tiles; `amount(first, count)` gives the bytes covered by the
  // sender's subtree of tiles [first, first + count).
  template <typename Amount, typename Merge>
  void tree_level(int layer, int level, double header, Amount amount, Merge merge_next) {
    const int first = map.layer_first_tile[layer];
    const int m = map.tile_count(layer);
    const int stride = 1 << level;
    const int half = stride / 2;
    for (int i = 0; i + half < m; i += stride) {
      const int covered = std::min(half, m - (i + half));
      const double payload = amount(first + i + half, covered);
      step.transfer(first + i + half, first + i, header, payload);
      merge_next(first + i, payload);
    }
  }

  double neurons_in(int layer, int first_tile, int count) const {
    double n = 0;
    for (int tile = first_tile; tile < first_tile + count; ++tile) n += map.neurons_on(layer, tile);
    return n;
  }

  void forward(int t) {
    const int layers = net.num_layers();
    const auto& cost = machine.cost;
    for (int tile = 0; tile < map.tiles_used; ++tile) {
      for (auto [l, count] : tile_layers[tile]) {
        const double macs = sparse() ? activity.spikes[t][l] : batch() * net.layer_sizes[l];
        step.compute(tile, count * (batch() * cost.cycles_per_state_update + macs * cost.cycles_per_mac));
      }
    }
    if (!sparse()) {
      // Every consumer tile pulls the dense slices of its input layer.
      for (int l = 0; l < layers; ++l)
        for (int tile = map.layer_first_tile[l]; tile <= map.layer_last_tile[l]; ++tile)
          pull_dense(l, tile, 4.0);
      step.finish("fwd", ledger);
      return;
    }

    int depth = *std::max_element(gather_depth.begin(), gather_depth.end());
    std::vector<double> pending(map.tiles_used, 0.0);
    for (int level = 1; level <= depth; ++level) {
      for (int k = 1; k < layers; ++k) {
        if (level > gather_depth[k]) continue;
        const double spikes = activity.spikes[t][k];
        const double size = net.layer_sizes[k];
        tree_level(
            k - 1, level, 8.0 * batch(),
            [&](int first, int count) { return 4.0 * spikes * neurons_in(k - 1, first, count) / size; },
            [&](int receiver, double payload) { pending[receiver] += payload / 4.0; });
      }
      step.finish("fwd-gather", ledger);
      for (int tile = 0; tile < map.tiles_used; ++tile) {
        step.compute(tile, pending[tile] * cost.cycles_per_state_update);
        pending[tile] = 0;
      }
    }
    for (int k = 0; k < layers; ++k)
      for (int tile = map.layer_first_tile[k]; tile <= map.layer_last_tile[k]; ++tile)
        step.transfer(home(k), tile, 8.0 * batch(), 4.0 * activity.spikes[t][k]);
    step.finish("fwd-broadcast", ledger);
  }

  // Dense tensor of boundary k delivered to `tile`, one transfer per source chip.
  void pull_dense(int k, int tile, double bytes_per_value) {
    if (k == 0) {
      step.transfer(0, tile, 0.0, bytes_per_value * batch() * net.layer_sizes[0]);
      return;
    }
    const int producer = k - 1;
    for (int src = map.layer_first_tile[producer]; src <= map.layer_last_tile[producer];) {
      const int chip = map.chip_of_tile(src);
      const int chip_end =
          std::min(map.layer_last_tile[producer], (chip + 1) * map.tiles_per_chip - 1);
      const double n = neurons_in(producer, src, chip_end - src + 1);
      // Bytes from the tile itself are local; the rest leave from the chip's first tile.
      const double local = (src <= tile && tile <= chip_end) ? map.neurons_on(producer, tile) : 0.0;
      step.transfer(src == tile ? (chip_end > src ? src + 1 : src) : src, tile, 0.0,
                    bytes_per_value * batch() * (n - local));
      src = chip_end + 1;
    }
  }

  void backward(int t) {
    const int layers = net.num_layers();
    const auto& cost = machine.cost;
    const int t_in = t;  // activity that produced I[t] is indexed with the step
    for (int tile = 0; tile < map.tiles_used; ++tile) {
      for (auto [l, count] : tile_layers[tile]) {
        double macs;
        if (sparse())
          macs = activity.spikes[t_in][l] + (l > 0 ? activity.entries[t_in][l] : 0.0);
        else
          macs = batch() * net.layer_sizes[l] * (l > 0 ? 2.0 : 1.0);
        step.compute(tile, count * (batch() * cost.cycles_per_state_update + macs * cost.cycles_per_mac));
      }
    }
    int depth = *std::max_element(reduce_depth.begin(), reduce_depth.end());
    std::vector<double> pending(map.tiles_used, 0.0);
    for (int level = 1; level <= depth; ++level) {
      for (int l = 1; l < layers; ++l) {
        if (level > reduce_depth[l]) continue;
        const double values = sparse() ? activity.entries[t_in][l] : batch() * net.layer_sizes[l];
        tree_level(
            l, level, 0.0, [&](int, int) { return 4.0 * values; },
            [&](int receiver, double payload) { pending[receiver] += payload / 4.0; });
      }
      step.finish("bwd-reduce", ledger);
      for (int tile = 0; tile < map.tiles_used; ++tile) {
        step.compute(tile, pending[tile] * cost.cycles_per_mac);
        pending[tile] = 0;
      }
    }
    // Scatter the reduced input gradients to the tiles owning those neurons.
    for (int l = 1; l < layers; ++l) {
      const int producer = l - 1;
      const double size = net.layer_sizes[l];
      for (int tile = map.layer_first_tile[producer]; tile <= map.layer_last_tile[producer]; ++tile) {
        const double share = map.neurons_on(producer, tile) / size;
        const double payload = sparse() ? 8.0 * activity.entries[t_in][l] * share
                                        : 4.0 * batch() * map.neurons_on(producer, tile);
        step.transfer(map.layer_first_tile[l], tile, 0.0, payload);
      }
    }
    step.finish("bwd-scatter", ledger);
  }
};

}  // namespace

CostLedger simulate_batch(const NetworkSpec& net, const TileMapping& mapping,
                          const MachineSpec& machine, const ActivityTrace& activity, ExecMode mode) {
  net.validate();
  machine.validate();
  const int layers = net.num_layers();
  std::vector<int> sizes(net.layer_sizes.begin() + 1, net.layer_sizes.end());
  if (mapping.layer_sizes != sizes || mapping.tiles_per_chip != machine.tiles_per_chip ||
      mapping.tiles_used > machine.tiles_per_chip * machine.num_chips ||
      mapping.tiles_used != mapping.layer_last_tile.back() + 1)
    throw ContractViolation("simulate_batch: mapping is inconsistent with network or machine");
  require(activity.num_timesteps() >= 1 &&
              activity.entries.size() == activity.spikes.size(),
          "simulate_batch: empty activity trace");
  for (int t = 0; t < activity.num_timesteps(); ++t) {
    require(static_cast<int>(activity.spikes[t].size()) == layers &&
                static_cast<int>(activity.entries[t].size()) == layers,
            "simulate_batch: activity needs one count per spiking boundary");
    for (int k = 0; k < layers; ++k) {
      const double limit = static_cast<double>(net.batch_size) * net.layer_sizes[k];
      require(activity.spikes[t][k] >= 0 && activity.spikes[t][k] <= activity.entries[t][k] &&
                  activity.entries[t][k] <= limit,
              "simulate_batch: activity count out of range at step " + std::to_string(t));
    }
  }

  Simulation sim(net, mapping, machine, activity, mode);
  for (int t = 0; t < activity.num_timesteps(); ++t) sim.forward(t);
  for (int t = activity.num_timesteps() - 1; t >= 0; --t) sim.backward(t);
  return std::move(sim.ledger);
}

namespace {
template <typename F>
double sum_steps(const std::vector<SuperstepCost>& steps, F f) {
  double s = 0;
  for (const auto& st : steps) s += f(st);
  return s;
}
}  // namespace

double CostLedger::total_cycles() const { return sum_steps(supersteps, [](auto& s) { return s.time(); }); }
double CostLedger::compute_cycles() const { return sum_steps(supersteps, [](auto& s) { return s.compute_cycles; }); }
double CostLedger::exchange_cycles() const { return sum_steps(supersteps, [](auto& s) { return s.exchange_cycles; }); }
double CostLedger::sync_cycles() const { return sum_steps(supersteps, [](auto& s) { return s.sync_cycles; }); }
double CostLedger::intra_bytes() const { return sum_steps(supersteps, [](auto& s) { return s.intra_bytes; }); }
double CostLedger::inter_bytes() const { return sum_steps(supersteps, [](auto& s) { return s.inter_bytes; }); }
double CostLedger::header_bytes() const { return sum_steps(supersteps, [](auto& s) { return s.header_bytes; }); }
double CostLedger::payload_bytes() const { return sum_steps(supersteps, [](auto& s) { return s.payload_bytes; }); }

void CostLedger::write_csv(std::ostream& out) const {
  out << "superstep,phase,chip,cycles,intra_bytes,inter_bytes\n";
  out << std::setprecision(17);
  for (const auto& r : rows)
    out << r.superstep << ',' << phase_name(r.phase) << ',' << r.chip << ',' << r.cycles << ','
        << r.intra_bytes << ',' << r.inter_bytes << '\n';
}

double acceleration_model(const CostLedger& dense, const CostLedger& sparse) {
  const double sparse_time = sparse.total_cycles();
  if (!(sparse_time > 0)) throw ContractViolation("acceleration_model: sparse ledger has zero time");
  return dense.total_cycles() / sparse_time;
}

NetworkSpec weak_scale_network(const WeakScaleConfig& cfg, int chips) {
  NetworkSpec spec;
  spec.layer_sizes.push_back(cfg.input_size);
  spec.sparse_sizes.push_back(cfg.sparse_input_size);
  for (int c = 0; c < chips; ++c)
    for (int h : cfg.hidden_per_chip) {
      spec.layer_sizes.push_back(h);
      spec.sparse_sizes.push_back(sparse_hidden_size(cfg.max_activity, h));
    }
  spec.layer_sizes.push_back(cfg.output_size);
  spec.batch_size = cfg.batch_size;
  spec.num_timesteps = cfg.num_timesteps;
  spec.readout = Readout::membrane_sum;
  return spec;
}

double weak_scale_run(const WeakScaleConfig& cfg, const MachineSpec& machine, int chips) {
  static constexpr int kSupported[] = {1, 2, 4, 8, 16};
  if (std::find(std::begin(kSupported), std::end(kSupported), chips) == std::end(kSupported))
    throw ConfigError("unsupported topology: " + std::to_string(chips) + " chips");

  auto modeled_time = [&](int k) {
    MachineSpec m = machine;
    m.num_chips = k;
    const auto spec = weak_scale_network(cfg, k);
    MappingOptions opt;
    opt.adam = cfg.adam;
    const int per_chip = static_cast<int>(cfg.hidden_per_chip.size());
    for (int c = 1; c < k; ++c) opt.chip_start_layers.push_back(c * per_chip);
    const auto mapping = map_neurons(spec, m, cfg.neurons_per_tile, opt);
    return simulate_batch(spec, mapping, m, ActivityTrace::saturated(spec), ExecMode::sparse)
        .total_cycles();
  };
  if (chips == 1) return 1.0;
  return modeled_time(chips) / modeled_time(1);
}

}  // namespace sparsnn
