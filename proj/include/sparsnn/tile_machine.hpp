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

// Bulk-synchronous model of a manycore chip with per-tile SRAM.
//
// Neurons of the non-input layers are laid out contiguously over tiles,
// weights living with their post-synaptic neuron. Every algorithmic timestep
// becomes a short program of supersteps (compute, exchange, sync):
//
//   forward   compute: state updates + read-and-sum of received spikes
//             exchange: sparse only, a binary gather tree assembles each
//             layer's spike tensor at its home tile; then every consumer
//             tile receives the tensor of its input layer
//   backward  compute: state gradients, weight gradients, partial input
//             gradients; exchange: binary reduction tree of the partial
//             input gradients, then scatter to the producing tiles
//
// A superstep costs max_tile(compute) + max_tile(exchange) + sync. Costs
// are parametric, not cycle accurate.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsnn/bptt.hpp"
#include "sparsnn/lif.hpp"

namespace sparsnn {

struct CostParams {
  double cycles_per_mac = 0.25;
  double cycles_per_state_update = 2.0;
  double intra_chip_cycles_per_8_bytes = 1.0;
  // Chips 2c and 2c+1 share a faster link than chips further apart.
  double paired_chip_cycles_per_8_bytes = 4.0;
  double inter_chip_cycles_per_8_bytes = 8.0;
  // Added once to any exchange phase that crosses a chip boundary.
  double inter_chip_latency_cycles = 1500.0;
  double sync_cycles_per_superstep = 150.0;
  // Extra barrier cost when the program spans more than one chip.
  double inter_chip_sync_cycles = 600.0;

  void validate() const;
};

struct MachineSpec {
  int tiles_per_chip = 1472;
  std::uint64_t sram_per_tile = 624 * 1024;
  int num_chips = 1;
  double clock_hz = 1.33e9;
  CostParams cost;

  void validate() const;
};

/// Reads `key = value` lines (field names of MachineSpec and CostParams);
/// unknown keys are rejected.
MachineSpec load_machine_config(const std::filesystem::path& path);
MachineSpec parse_machine_config(const std::string& text);

class OutOfTileMemory : public std::runtime_error {
 public:
  OutOfTileMemory(int tile, std::uint64_t bytes, std::uint64_t budget);
  int tile() const { return tile_; }
  std::uint64_t bytes() const { return bytes_; }

 private:
  int tile_;
  std::uint64_t bytes_;
};

struct MappingOptions {
  bool adam = true;  // two extra moment copies per weight
  // Layers (index into the non-input layers) forced to start on a new chip.
  std::vector<int> chip_start_layers;
};

/// Per-neuron and per-tile byte estimate, all values 4 bytes wide:
///   neuron: fan_in * 4 * (w, dw [, m, v]) + B * 4 * (u, I, du, dI)
///           + B * 4 * 2 * T (trace of u, I) + 8 (thresholds)
///   tile:   + per hosted layer, a receive buffer for its input spike tensor
///           B * (8 + 8 * N_max_in)  (counts, ids, gradient values)
struct MemoryModel {
  int batch_size = 48;
  int num_timesteps = 100;
  bool adam = true;

  std::uint64_t neuron_bytes(int fan_in) const;
  std::uint64_t receive_buffer_bytes(int n_max_in) const;
};

struct TileMapping {
  int neurons_per_tile = 1;
  int tiles_per_chip = 1;
  int tiles_used = 0;
  std::vector<int> layer_first_neuron;  // global index of neuron 0 per layer
  std::vector<int> layer_sizes;         // non-input layers
  std::vector<int> layer_first_tile;
  std::vector<int> layer_last_tile;     // inclusive
  std::vector<std::uint64_t> tile_bytes;

  struct Location {
    int chip;
    int tile;  // global tile index
  };

  int tile_of(int layer, int neuron) const;
  Location locate(int layer, int neuron) const;
  int chip_of_tile(int tile) const { return tile / tiles_per_chip; }
  int chips_used() const { return tiles_used == 0 ? 0 : chip_of_tile(tiles_used - 1) + 1; }
  int tile_count(int layer) const { return layer_last_tile[layer] - layer_first_tile[layer] + 1; }
  /// Neurons of `layer` hosted on global tile `tile`.
  int neurons_on(int layer, int tile) const;
};

TileMapping map_neurons(const NetworkSpec& net, const MachineSpec& machine,
                        int neurons_per_tile, const MappingOptions& opt = {});

/// Spike traffic per timestep. Index k = 0 is the network input, k >= 1 the
/// output of hidden layer k-1; values are totals over the batch.
struct ActivityTrace {
  std::vector<std::vector<double>> spikes;   // [t][k] retained spikes
  std::vector<std::vector<double>> entries;  // [t][k] spikes + gradient-only

  int num_timesteps() const { return static_cast<int>(spikes.size()); }

  static ActivityTrace zeros(const NetworkSpec& net);
  /// Every boundary at capacity B * N_max (fixed-activity mode).
  static ActivityTrace saturated(const NetworkSpec& net);
  /// Constant fraction of each boundary's dense size (capped at capacity).
  static ActivityTrace uniform(const NetworkSpec& net, double fraction);
  static ActivityTrace from_trace(const ForwardTrace<float>& trace);
  static ActivityTrace from_trace(const ForwardTrace<double>& trace);

  ActivityTrace scaled(double factor) const;
};

enum class Phase { compute, exchange, sync };
const char* phase_name(Phase p);

struct SuperstepCost {
  std::string label;
  double compute_cycles = 0;   // max over tiles
  double exchange_cycles = 0;  // max over tiles, plus link latency
  double sync_cycles = 0;
  double intra_bytes = 0;
  double inter_bytes = 0;  // paired and beyond-pair together
  double header_bytes = 0;
  double payload_bytes = 0;

  double time() const { return compute_cycles + exchange_cycles + sync_cycles; }
};

struct LedgerRow {
  int superstep = 0;
  Phase phase = Phase::compute;
  int chip = 0;
  double cycles = 0;
  double intra_bytes = 0;
  double inter_bytes = 0;
};

struct CostLedger {
  std::vector<SuperstepCost> supersteps;
  std::vector<LedgerRow> rows;  // per superstep, phase and chip
  double clock_hz = 1.33e9;

  double total_cycles() const;
  double compute_cycles() const;
  double exchange_cycles() const;
  double sync_cycles() const;
  double intra_bytes() const;
  double inter_bytes() const;
  double header_bytes() const;
  double payload_bytes() const;
  std::size_t sync_count() const { return supersteps.size(); }
  double seconds() const { return total_cycles() / clock_hz; }

  /// CSV columns: superstep,phase,chip,cycles,intra_bytes,inter_bytes
  void write_csv(std::ostream& out) const;
};

CostLedger simulate_batch(const NetworkSpec& net, const TileMapping& mapping,
                          const MachineSpec& machine, const ActivityTrace& activity,
                          ExecMode mode);

/// Modeled dense time / modeled sparse time.
double acceleration_model(const CostLedger& dense, const CostLedger& sparse);

struct WeakScaleConfig {
  std::vector<int> hidden_per_chip;  // hidden layer sizes replicated per chip
  int input_size = 700;
  int sparse_input_size = 48;
  int output_size = 20;
  double max_activity = 0.05;
  int batch_size = 48;
  int num_timesteps = 10;
  int neurons_per_tile = 2;
  bool adam = false;
};

/// Network for `chips` replicas of the per-chip hidden stack.
NetworkSpec weak_scale_network(const WeakScaleConfig& cfg, int chips);

/// time(chips) / time(1) with saturated activity; chips in {1, 2, 4, 8, 16}.
double weak_scale_run(const WeakScaleConfig& cfg, const MachineSpec& machine, int chips);

}  // namespace sparsnn
