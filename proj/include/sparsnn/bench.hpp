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

// Benchmark protocol: fixed and natural activity, sparsity sweeps, scale-up
// and weak scaling. Wall-clock numbers are this host's dense path against
// its sparse path; modeled numbers come from the tile machine. The two are
// reported side by side and never mixed.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsnn/network.hpp"
#include "sparsnn/tile_machine.hpp"
#include "sparsnn/train.hpp"

namespace sparsnn {

enum class ActivityMode { fixed_activity, natural_activity };
const char* activity_mode_name(ActivityMode m);

/// Dense sizes of the single-chip scale-up architectures for the SHD
/// dataset, indexed by neurons per tile (2, 4, 8 or 16).
std::vector<int> shd_scaleup_sizes(int neurons_per_tile);
/// Architectures of equal neuron budget and growing depth (input 2312).
std::vector<std::vector<int>> depth_sweep_sizes();

struct BenchConfig {
  ActivityMode mode = ActivityMode::fixed_activity;
  double max_activity = 0.05;
  std::vector<int> layer_sizes = shd_scaleup_sizes(2);
  int sparse_input_size = 48;
  int batch_size = 48;
  int num_timesteps = 10;
  int repetitions = 3;
  int warmup_discard = 1;
  std::uint64_t seed = 42;
  // Fraction of input channels active per step in natural mode when no
  // dataset is supplied.
  double input_density = 0.05;
  const Dataset* data = nullptr;
  bool measure_wall_clock = true;
  NeuronConfig neuron;
  MachineSpec machine;
  int neurons_per_tile = 2;
  bool adam = true;

  void validate() const;
  NetworkSpec network_spec() const;
};

struct TimingStats {
  double mean = 0;  // seconds per batch, warmup excluded
  double stddev = 0;
  std::vector<double> samples;
};

struct BenchResult {
  NetworkSpec spec;
  TimingStats dense;   // empty when wall clock is off
  TimingStats sparse;
  CostLedger dense_ledger;
  CostLedger sparse_ledger;
  double measured_accel = 0;  // dense mean / sparse mean
  double modeled_accel = 0;
  double frames_per_sec = 0;  // modeled, sparse path: B * T / time
  double sequences_per_sec = 0;
  double observed_activity = 0;  // hidden spikes / (n * B * T), averaged over hidden layers
  std::vector<double> layer_activity;
};

BenchResult run_fixed_activity(const BenchConfig& cfg);
BenchResult run_natural_activity(const BenchConfig& cfg);
BenchResult run_bench(const BenchConfig& cfg);

struct SparsityRow {
  ActivityMode mode;
  double max_activity;
  double communication_sparsity;
  double measured_accel;  // NaN when not measured
  double modeled_accel;
  double frames_per_sec;
};

std::vector<SparsityRow> sparsity_sweep(const BenchConfig& base, const std::vector<double>& grid,
                                        const std::vector<ActivityMode>& modes);
void write_sparsity_csv(std::ostream& out, const std::vector<SparsityRow>& rows);

struct ScaleupRow {
  int neurons_per_tile;
  int total_neurons;
  bool ok;
  std::string error;
  double modeled_accel;  // NaN when the mapping failed
  double frames_per_sec;
};

std::vector<ScaleupRow> scaleup_sweep(const BenchConfig& base, const std::vector<int>& per_tile_grid);
void write_scaleup_csv(std::ostream& out, const std::vector<ScaleupRow>& rows);

struct WeakScalingRow {
  int chips;
  int batch_size;
  int neurons_per_tile;
  bool ok;
  std::string error;
  double slowdown;
};

/// Per-chip network is the SHD scale-up architecture for each per-tile count.
std::vector<WeakScalingRow> weak_scaling_sweep(const WeakScaleConfig& base, const MachineSpec& machine,
                                               const std::vector<int>& chip_grid,
                                               const std::vector<int>& batch_grid,
                                               const std::vector<int>& per_tile_grid);
void write_weak_scaling_csv(std::ostream& out, const std::vector<WeakScalingRow>& rows);

}  // namespace sparsnn
