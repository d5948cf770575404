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

#include "sparsnn/bench.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "sparsnn/events.hpp"

namespace sparsnn {

const char* activity_mode_name(ActivityMode m) {
  return m == ActivityMode::fixed_activity ? "fixed" : "natural";
}

std::vector<int> shd_scaleup_sizes(int neurons_per_tile) {
  switch (neurons_per_tile) {
    case 2: return {700, 974, 974, 974, 20};
    case 4: return {700, 980, 980, 976, 976, 976, 976, 20};
    case 8: return {700, 984, 984, 984, 984, 976, 976, 976, 976, 976, 976, 976, 976, 20};
    case 16: {
      std::vector<int> s{700};
      s.insert(s.end(), 5, 992);
      s.insert(s.end(), 19, 976);
      s.push_back(20);
      return s;
    }
    default:
      throw ConfigError("no scale-up architecture for " + std::to_string(neurons_per_tile) +
                        " neurons per tile (use 2, 4, 8 or 16)");
  }
}

std::vector<std::vector<int>> depth_sweep_sizes() {
  return {{2312, 1466, 1466, 10},
          {2312, 978, 978, 976, 10},
          {2312, 734, 734, 732, 732, 10},
          {2312, 588, 586, 586, 586, 586, 10}};
}

void BenchConfig::validate() const {
  if (!(max_activity > 0.0 && max_activity <= 1.0))
    throw ConfigError("max_activity must lie in (0, 1]");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (warmup_discard < 0) throw ConfigError("warmup_discard must be >= 0");
  if (!(input_density >= 0.0 && input_density <= 1.0))
    throw ConfigError("input_density must lie in [0, 1]");
  network_spec().validate();
}

NetworkSpec BenchConfig::network_spec() const {
  NetworkSpec spec;
  spec.layer_sizes = layer_sizes;
  if (layer_sizes.size() < 2) throw ConfigError("architecture needs at least two layers");
  spec.sparse_sizes.push_back(sparse_input_size);
  for (std::size_t l = 1; l + 1 < layer_sizes.size(); ++l)
    spec.sparse_sizes.push_back(sparse_hidden_size(max_activity, layer_sizes[l]));
  spec.batch_size = batch_size;
  spec.num_timesteps = num_timesteps;
  return spec;
}

namespace {

std::vector<BatchMatrix<float>> bench_inputs(const BenchConfig& cfg, const NetworkSpec& spec) {
  const int n = spec.input_size();
  std::vector<BatchMatrix<float>> steps;
  if (cfg.mode == ActivityMode::fixed_activity) {
    steps.assign(spec.num_timesteps, BatchMatrix<float>::Ones(spec.batch_size, n));
    return steps;
  }
  if (cfg.data != nullptr) {
    if (cfg.data->size() == 0) throw DataError("benchmark dataset is empty");
    if (cfg.data->input_size != n || cfg.data->num_timesteps != spec.num_timesteps)
      throw ConfigError("benchmark dataset does not match the architecture");
    std::vector<std::size_t> idx(spec.batch_size);
    for (int b = 0; b < spec.batch_size; ++b) idx[b] = static_cast<std::size_t>(b) % cfg.data->size();
    return batch_inputs<float>(*cfg.data, idx);
  }
  const DropRng root(cfg.seed);
  for (int t = 0; t < spec.num_timesteps; ++t) {
    DropRng rng = root.stream(0x1a9, static_cast<std::uint64_t>(t));
    BatchMatrix<float> x(spec.batch_size, n);
    for (int b = 0; b < spec.batch_size; ++b)
      for (int i = 0; i < n; ++i) x(b, i) = rng.uniform01() < cfg.input_density ? 1.0f : 0.0f;
    steps.push_back(std::move(x));
  }
  return steps;
}

TimingStats summarize(std::vector<double> all, int discard) {
  TimingStats s;
  s.samples.assign(all.begin() + std::min<std::size_t>(all.size(), discard), all.end());
  if (s.samples.empty()) return s;
  s.mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / s.samples.size();
  double var = 0;
  for (double x : s.samples) var += (x - s.mean) * (x - s.mean);
  s.stddev = s.samples.size() > 1 ? std::sqrt(var / (s.samples.size() - 1)) : 0.0;
  return s;
}

// One training step without the weight update: forward, loss, backward.
double time_step(const Network<float>& net, const std::vector<BatchMatrix<float>>& x,
                 const std::vector<int>& labels, PassOptions pass) {
  const auto start = std::chrono::steady_clock::now();
  auto fwd = forward_pass(net, x, pass);
  auto loss = softmax_cross_entropy(fwd.scores, labels);
  auto back = backward_pass(net, fwd.trace, loss.dL_dscores);
  const auto stop = std::chrono::steady_clock::now();
  (void)back;
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

BenchResult run_bench(const BenchConfig& cfg) {
  cfg.validate();
  BenchResult r;
  r.spec = cfg.network_spec();
  const auto& spec = r.spec;
  const auto net = make_network<float>(spec, cfg.neuron, cfg.seed);
  const auto x = bench_inputs(cfg, spec);
  std::vector<int> labels(spec.batch_size);
  for (int b = 0; b < spec.batch_size; ++b) labels[b] = b % spec.output_size();

  PassOptions pass;
  pass.force_spikes = cfg.mode == ActivityMode::fixed_activity;
  pass.rng = DropRng(cfg.seed).stream(0xbe4c);

  PassOptions sparse_pass = pass;
  sparse_pass.mode = ExecMode::sparse;
  const auto fwd = forward_pass(net, x, sparse_pass);
  for (int l = 0; l + 1 < net.num_layers(); ++l) {
    double spikes = 0;
    for (const auto& s : fwd.trace.layers[l].sparse) spikes += static_cast<double>(s.total_spikes());
    r.layer_activity.push_back(spikes / (static_cast<double>(spec.layer_sizes[l + 1]) *
                                         spec.batch_size * spec.num_timesteps));
  }
  if (!r.layer_activity.empty())
    r.observed_activity = std::accumulate(r.layer_activity.begin(), r.layer_activity.end(), 0.0) /
                          static_cast<double>(r.layer_activity.size());

  MappingOptions map_opt;
  map_opt.adam = cfg.adam;
  const auto mapping = map_neurons(spec, cfg.machine, cfg.neurons_per_tile, map_opt);
  const auto activity = cfg.mode == ActivityMode::fixed_activity ? ActivityTrace::saturated(spec)
                                                                 : ActivityTrace::from_trace(fwd.trace);
  r.dense_ledger = simulate_batch(spec, mapping, cfg.machine, ActivityTrace::zeros(spec), ExecMode::dense);
  r.sparse_ledger = simulate_batch(spec, mapping, cfg.machine, activity, ExecMode::sparse);
  r.modeled_accel = acceleration_model(r.dense_ledger, r.sparse_ledger);
  r.frames_per_sec = static_cast<double>(spec.batch_size) * spec.num_timesteps / r.sparse_ledger.seconds();
  r.sequences_per_sec = r.frames_per_sec / spec.num_timesteps;

  if (cfg.measure_wall_clock) {
    std::vector<double> dense_t, sparse_t;
    for (int rep = 0; rep < cfg.warmup_discard + cfg.repetitions; ++rep) {
      dense_t.push_back(time_step(net, x, labels, pass));
      sparse_t.push_back(time_step(net, x, labels, sparse_pass));
    }
    r.dense = summarize(dense_t, cfg.warmup_discard);
    r.sparse = summarize(sparse_t, cfg.warmup_discard);
    r.measured_accel = r.dense.mean / r.sparse.mean;
  } else {
    r.measured_accel = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

BenchResult run_fixed_activity(const BenchConfig& cfg) {
  BenchConfig c = cfg;
  c.mode = ActivityMode::fixed_activity;
  return run_bench(c);
}

BenchResult run_natural_activity(const BenchConfig& cfg) {
  BenchConfig c = cfg;
  c.mode = ActivityMode::natural_activity;
  return run_bench(c);
}

std::vector<SparsityRow> sparsity_sweep(const BenchConfig& base, const std::vector<double>& grid,
                                        const std::vector<ActivityMode>& modes) {
  for (double a : grid)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("activity grid values must lie in (0, 1]");
  std::vector<SparsityRow> rows;
  for (auto mode : modes)
    for (double a : grid) {
      BenchConfig c = base;
      c.mode = mode;
      c.max_activity = a;
      const auto r = run_bench(c);
      rows.push_back({mode, a, 1.0 - a, r.measured_accel, r.modeled_accel, r.frames_per_sec});
    }
  return rows;
}

namespace {
std::ostream& csv_precision(std::ostream& out) { return out << std::setprecision(10); }
}  // namespace

void write_sparsity_csv(std::ostream& out, const std::vector<SparsityRow>& rows) {
  csv_precision(out) << "mode,max_activity,communication_sparsity,measured_accel,modeled_accel,frames_per_sec\n";
  for (const auto& r : rows)
    out << activity_mode_name(r.mode) << ',' << r.max_activity << ',' << r.communication_sparsity
        << ',' << r.measured_accel << ',' << r.modeled_accel << ',' << r.frames_per_sec << '\n';
}

std::vector<ScaleupRow> scaleup_sweep(const BenchConfig& base, const std::vector<int>& per_tile_grid) {
  if (per_tile_grid.empty()) throw ConfigError("scale-up grid is empty");
  std::vector<ScaleupRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int npt : per_tile_grid) {
    BenchConfig c = base;
    c.layer_sizes = shd_scaleup_sizes(npt);
    c.neurons_per_tile = npt;
    c.measure_wall_clock = false;
    const int total = std::accumulate(c.layer_sizes.begin() + 1, c.layer_sizes.end(), 0);
    try {
      const auto r = run_bench(c);
      rows.push_back({npt, total, true, "", r.modeled_accel, r.frames_per_sec});
    } catch (const OutOfTileMemory& e) {
      rows.push_back({npt, total, false, "out of tile memory", nan, nan});
    }
  }
  return rows;
}

void write_scaleup_csv(std::ostream& out, const std::vector<ScaleupRow>& rows) {
  csv_precision(out) << "neurons_per_tile,total_neurons,status,modeled_accel,frames_per_sec\n";
  for (const auto& r : rows)
    out << r.neurons_per_tile << ',' << r.total_neurons << ',' << (r.ok ? "ok" : r.error) << ','
        << r.modeled_accel << ',' << r.frames_per_sec << '\n';
}

std::vector<WeakScalingRow> weak_scaling_sweep(const WeakScaleConfig& base, const MachineSpec& machine,
                                               const std::vector<int>& chip_grid,
                                               const std::vector<int>& batch_grid,
                                               const std::vector<int>& per_tile_grid) {
  if (chip_grid.empty() || batch_grid.empty() || per_tile_grid.empty())
    throw ConfigError("weak scaling grids must be nonempty");
  std::vector<WeakScalingRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int npt : per_tile_grid) {
    const auto sizes = shd_scaleup_sizes(npt);
    for (int batch : batch_grid)
      for (int chips : chip_grid) {
        WeakScaleConfig c = base;
        c.input_size = sizes.front();
        c.output_size = sizes.back();
        c.hidden_per_chip.assign(sizes.begin() + 1, sizes.end() - 1);
        c.batch_size = batch;
        c.neurons_per_tile = npt;
        try {
          rows.push_back({chips, batch, npt, true, "", weak_scale_run(c, machine, chips)});
        } catch (const OutOfTileMemory&) {
          rows.push_back({chips, batch, npt, false, "out of tile memory", nan});
        }
      }
  }
  return rows;
}

void write_weak_scaling_csv(std::ostream& out, const std::vector<WeakScalingRow>& rows) {
  csv_precision(out) << "chips,batch_size,neurons_per_tile,status,slowdown\n";
  for (const auto& r : rows)
    out << r.chips << ',' << r.batch_size << ',' << r.neurons_per_tile << ','
        << (r.ok ? "ok" : r.error) << ',' << r.slowdown << '\n';
}

}  // namespace sparsnn
