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

// sparsnn command line: train, bench, simulate, gradcheck, gen-data.
//
// --config names a flat `key = value` file; keys are the long flag names of
// the subcommand (dashes or underscores). Flags on the command line win.
// Exit codes: 0 ok, 1 failed check or internal error, 2 configuration
// error, 3 data error, 4 out of tile memory.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sparsnn/bench.hpp"
#include "sparsnn/checkpoint.hpp"
#include "sparsnn/events.hpp"
#include "sparsnn/gradcheck.hpp"
#include "sparsnn/parallel.hpp"
#include "sparsnn/tile_machine.hpp"
#include "sparsnn/train.hpp"

namespace fs = std::filesystem;
using namespace sparsnn;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& what) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream conv(item);
    T v{};
    conv >> v;
    if (conv.fail() || !conv.eof()) throw ConfigError(what + ": cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

// Turns the --config file into `--key=value` tokens placed right after the
// subcommand, so later command-line flags override them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") throw ConfigError(path + ": nested config files are not supported");
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  const std::size_t at = args.empty() || args[0].rfind("-", 0) == 0 ? 0 : 1;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
  return args;
}

bool on_off(const std::string& v) { return v == "on"; }

struct Common {
  std::string config;
  std::uint64_t seed = 42;
  int threads = 0;
  std::string out_dir;
};

void add_common(CLI::App* app, Common& c, const std::string& out_default) {
  app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--config", c.config, "flat key = value file with defaults for these flags");
  app->add_option("--seed", c.seed, "random seed")->capture_default_str();
  app->add_option("--threads", c.threads, "worker threads (0 keeps the runtime default)")
      ->check(CLI::NonNegativeNumber);
  c.out_dir = out_default;
  app->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
}

void apply_threads(const Common& c) {
  if (c.threads > 0) set_num_threads(c.threads);
}

ExecMode parse_mode(const std::string& m) { return m == "sparse" ? ExecMode::sparse : ExecMode::dense; }

MachineSpec machine_from(const std::string& path, int chips) {
  MachineSpec m = path.empty() ? MachineSpec{} : load_machine_config(path);
  m.num_chips = chips;
  m.validate();
  return m;
}

// ---------------------------------------------------------------- gen-data

struct GenData {
  Common common;
  int num_classes = 10;
  int input_size = 128;
  int samples_per_class = 20;
  int test_samples_per_class = 10;
  int timesteps = 50;
  double noise_rate = 0.0;
  double template_density = 0.05;
  std::uint32_t bin_width_us = 1000;
};

void setup_gen_data(CLI::App& app, GenData& g) {
  auto* cmd = app.add_subcommand("gen-data", "write a synthetic pattern dataset (ESF + manifests)");
  add_common(cmd, g.common, "data");
  cmd->add_option("--num-classes", g.num_classes)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--input-size", g.input_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--samples-per-class", g.samples_per_class)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--test-samples-per-class", g.test_samples_per_class)->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--timesteps", g.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--noise-rate", g.noise_rate, "expected noise events per channel per bin")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--template-density", g.template_density)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--bin-width-us", g.bin_width_us)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->callback([&g] {
    apply_threads(g.common);
    SynthOptions o;
    o.num_classes = g.num_classes;
    o.input_size = g.input_size;
    o.samples_per_class = g.samples_per_class;
    o.num_timesteps = g.timesteps;
    o.noise_rate = g.noise_rate;
    o.template_density = g.template_density;
    o.bin_width_us = g.bin_width_us;
    o.seed = g.common.seed;
    fs::create_directories(g.common.out_dir);
    write_dataset(g.common.out_dir, "train_manifest.csv", "train", synth_pattern_dataset(o));
    o.first_sample = g.samples_per_class;
    o.samples_per_class = g.test_samples_per_class;
    write_dataset(g.common.out_dir, "test_manifest.csv", "test",
                  g.test_samples_per_class > 0 ? synth_pattern_dataset(o) : std::vector<EventStream>{});
    std::cout << "wrote " << g.num_classes * g.samples_per_class << " train and "
              << g.num_classes * g.test_samples_per_class << " test samples to " << g.common.out_dir << "\n";
  });
}

// ------------------------------------------------------------------- train

struct Train {
  Common common;
  std::string train_manifest;
  std::string test_manifest;
  std::string hidden = "128,128";
  int timesteps = 50;
  std::uint32_t bin_width_us = 1000;
  int sparse_input_size = 0;
  int epochs = 10;
  int batch_size = 48;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::string mode = "dense";
  double max_activity = 1.0;
  std::string readout = "membrane";
  double alpha = 0.9;
  double threshold = 1.0;
  double grad_threshold = 0.5;
  double beta = 10.0;
  double weight_gain = 3.0;
  double weight_mean = 0.15;
  bool detach_reset = false;
  std::string simulate_tiles = "off";
  int chips = 1;
  int neurons_per_tile = 2;
  std::string machine;
};

void setup_train(CLI::App& app, Train& tr) {
  auto* cmd = app.add_subcommand("train", "train a network on a manifest dataset");
  add_common(cmd, tr.common, "out");
  cmd->add_option("--train-manifest", tr.train_manifest, "path,label CSV")->required();
  cmd->add_option("--test-manifest", tr.test_manifest, "path,label CSV (optional)");
  cmd->add_option("--hidden", tr.hidden, "hidden layer sizes, comma separated")->capture_default_str();
  cmd->add_option("--timesteps", tr.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--bin-width-us", tr.bin_width_us)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--sparse-input-size", tr.sparse_input_size, "input capacity (0 derives it from --max-activity)")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", tr.epochs)->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--batch-size", tr.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--lr", tr.lr)->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--optimizer", tr.optimizer)->capture_default_str()->check(CLI::IsMember({"adam", "sgd"}));
  cmd->add_option("--mode", tr.mode)->capture_default_str()->check(CLI::IsMember({"dense", "sparse"}));
  cmd->add_option("--max-activity", tr.max_activity)->capture_default_str()->check(CLI::Range(1e-9, 1.0));
  cmd->add_option("--readout", tr.readout)->capture_default_str()->check(CLI::IsMember({"membrane", "spikes"}));
  cmd->add_option("--alpha", tr.alpha)->capture_default_str();
  cmd->add_option("--threshold", tr.threshold)->capture_default_str();
  cmd->add_option("--grad-threshold", tr.grad_threshold)->capture_default_str();
  cmd->add_option("--beta", tr.beta)->capture_default_str();
  cmd->add_option("--weight-gain", tr.weight_gain)->capture_default_str();
  cmd->add_option("--weight-mean", tr.weight_mean)->capture_default_str();
  cmd->add_flag("--detach-reset", tr.detach_reset, "stop gradients through the reset");
  cmd->add_option("--simulate-tiles", tr.simulate_tiles, "map onto the tile machine and report modeled cost")
      ->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--chips", tr.chips)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--neurons-per-tile", tr.neurons_per_tile)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--machine", tr.machine, "machine/cost config file");
  cmd->callback([&tr] {
    apply_threads(tr.common);
    const auto train = load_dataset(tr.train_manifest, tr.timesteps, tr.bin_width_us);
    Dataset test;
    if (!tr.test_manifest.empty()) test = load_dataset(tr.test_manifest, tr.timesteps, tr.bin_width_us);
    const int classes = std::max(train.num_classes, test.num_classes);
    if (train.size() == 0) throw DataError("training set is empty");
    if (test.size() > 0 && test.input_size != train.input_size)
      throw DataError("train and test inputs differ in size");

    NetworkSpec spec;
    spec.layer_sizes.push_back(train.input_size);
    const auto hidden = parse_list<int>(tr.hidden, "--hidden");
    spec.layer_sizes.insert(spec.layer_sizes.end(), hidden.begin(), hidden.end());
    spec.layer_sizes.push_back(classes);
    spec.sparse_sizes.push_back(tr.sparse_input_size > 0
                                    ? tr.sparse_input_size
                                    : sparse_hidden_size(tr.max_activity, train.input_size));
    for (int h : hidden) spec.sparse_sizes.push_back(sparse_hidden_size(tr.max_activity, h));
    spec.batch_size = tr.batch_size;
    spec.num_timesteps = tr.timesteps;
    spec.readout = tr.readout == "spikes" ? Readout::spike_count : Readout::membrane_sum;
    spec.validate();

    const bool adam = tr.optimizer == "adam";
    if (on_off(tr.simulate_tiles)) {
      const auto machine = machine_from(tr.machine, tr.chips);
      MappingOptions mo;
      mo.adam = adam;
      const auto mapping = map_neurons(spec, machine, tr.neurons_per_tile, mo);
      const auto ledger = simulate_batch(spec, mapping, machine, ActivityTrace::saturated(spec),
                                         parse_mode(tr.mode));
      std::cout << "tiles_used=" << mapping.tiles_used << " modeled_batch_seconds=" << ledger.seconds() << "\n";
    }

    NeuronConfig nc;
    nc.alpha = tr.alpha;
    nc.threshold = tr.threshold;
    nc.grad_threshold = tr.grad_threshold;
    nc.beta = tr.beta;
    nc.weight_gain = tr.weight_gain;
    nc.weight_mean = tr.weight_mean;
    Checkpoint ckpt;
    ckpt.seed = tr.common.seed;
    ckpt.net = make_network<float>(spec, nc, tr.common.seed);
    ckpt.optimizer = Optimizer<float>::make(adam ? OptimizerKind::adam : OptimizerKind::sgd, tr.lr, ckpt.net);

    TrainOptions opt;
    opt.mode = parse_mode(tr.mode);
    opt.detach_reset = tr.detach_reset;
    opt.seed = tr.common.seed;

    fs::create_directories(tr.common.out_dir);
    std::ofstream metrics(fs::path(tr.common.out_dir) / "metrics.csv");
    metrics << std::setprecision(17) << "epoch,train_loss,train_accuracy,test_loss,test_accuracy\n";
    for (int e = 0; e < tr.epochs; ++e) {
      const auto m = train_epoch(ckpt.net, train, ckpt.optimizer, opt, e);
      ckpt.epoch = e + 1;
      EvalMetrics ev{std::nan(""), std::nan("")};
      if (test.size() > 0) ev = evaluate(ckpt.net, test, opt.mode, tr.common.seed);
      metrics << e + 1 << ',' << m.mean_loss << ',' << m.accuracy << ',' << ev.loss << ',' << ev.accuracy << '\n';
      std::cout << "epoch " << e + 1 << " loss " << m.mean_loss << " acc " << m.accuracy;
      if (test.size() > 0) std::cout << " test_loss " << ev.loss << " test_acc " << ev.accuracy;
      std::cout << std::endl;
    }
    save_checkpoint(fs::path(tr.common.out_dir) / "checkpoint.bin", ckpt);
  });
}

// ------------------------------------------------------------------- bench

struct Bench {
  Common common;
  std::string sweep = "sparsity";
  std::string activity = "both";
  std::string grid = "1,0.5,0.2,0.1,0.05,0.02";
  double max_activity = 0;
  std::string layers = "700,974,974,974,20";
  int sparse_input_size = 48;
  int batch_size = 48;
  int timesteps = 10;
  int repetitions = 3;
  int warmup = 1;
  std::string wall_clock = "on";
  std::string neurons_per_tile = "2,4,8,16";
  std::string chips = "1,2,4,8,16";
  std::string batch_grid = "48,96,192";
  std::string machine;
  std::string run_name;
};

void setup_bench(CLI::App& app, Bench& b) {
  auto* cmd = app.add_subcommand("bench", "benchmark sweeps; writes <out-dir>/<run>/<sweep>.csv and config.txt");
  add_common(cmd, b.common, "runs");
  cmd->add_option("--sweep", b.sweep)->capture_default_str()->check(CLI::IsMember({"sparsity", "scaleup", "weak", "all"}));
  cmd->add_option("--activity", b.activity, "activity modes of the sparsity sweep")
      ->capture_default_str()->check(CLI::IsMember({"fixed", "natural", "both"}));
  cmd->add_option("--grid", b.grid, "max_activity grid")->capture_default_str();
  cmd->add_option("--max-activity", b.max_activity, "single grid point (overrides --grid)")->check(CLI::Range(1e-9, 1.0));
  cmd->add_option("--layers", b.layers, "dense sizes of the sparsity-sweep network")->capture_default_str();
  cmd->add_option("--sparse-input-size", b.sparse_input_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", b.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--timesteps", b.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--repetitions", b.repetitions)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--warmup", b.warmup, "leading repetitions discarded")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--wall-clock", b.wall_clock, "measure host dense/sparse time")
      ->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--neurons-per-tile", b.neurons_per_tile, "grid for scale-up and weak scaling")->capture_default_str();
  cmd->add_option("--chips", b.chips, "chip grid for weak scaling")->capture_default_str();
  cmd->add_option("--batch-grid", b.batch_grid, "batch grid for weak scaling")->capture_default_str();
  cmd->add_option("--machine", b.machine, "machine/cost config file");
  cmd->add_option("--run-name", b.run_name, "run directory name (default: UTC timestamp)");
  cmd->callback([&b, cmd] {
    apply_threads(b.common);
    std::string run = b.run_name;
    if (run.empty()) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::ostringstream s;
      s << std::put_time(std::gmtime(&now), "%Y%m%dT%H%M%SZ");
      run = s.str();
    }
    const fs::path dir = fs::path(b.common.out_dir) / run;
    fs::create_directories(dir);
    {
      std::ofstream cfg(dir / "config.txt");
      cfg << cmd->config_to_str(true, false);
    }
    const auto machine = machine_from(b.machine, 1);
    BenchConfig base;
    base.layer_sizes = parse_list<int>(b.layers, "--layers");
    base.sparse_input_size = b.sparse_input_size;
    base.batch_size = b.batch_size;
    base.num_timesteps = b.timesteps;
    base.repetitions = b.repetitions;
    base.warmup_discard = b.warmup;
    base.seed = b.common.seed;
    base.measure_wall_clock = on_off(b.wall_clock);
    base.machine = machine;
    const auto per_tile = parse_list<int>(b.neurons_per_tile, "--neurons-per-tile");
    base.neurons_per_tile = per_tile.front();

    if (b.sweep == "sparsity" || b.sweep == "all") {
      const auto grid = b.max_activity > 0 ? std::vector<double>{b.max_activity}
                                           : parse_list<double>(b.grid, "--grid");
      std::vector<ActivityMode> modes;
      if (b.activity != "natural") modes.push_back(ActivityMode::fixed_activity);
      if (b.activity != "fixed") modes.push_back(ActivityMode::natural_activity);
      const auto rows = sparsity_sweep(base, grid, modes);
      std::ofstream out(dir / "sparsity.csv");
      write_sparsity_csv(out, rows);
      write_sparsity_csv(std::cout, rows);
    }
    if (b.sweep == "scaleup" || b.sweep == "all") {
      BenchConfig c = base;
      c.max_activity = b.max_activity > 0 ? b.max_activity : 0.05;
      const auto rows = scaleup_sweep(c, per_tile);
      std::ofstream out(dir / "scaleup.csv");
      write_scaleup_csv(out, rows);
      write_scaleup_csv(std::cout, rows);
    }
    if (b.sweep == "weak" || b.sweep == "all") {
      WeakScaleConfig w;
      w.max_activity = b.max_activity > 0 ? b.max_activity : 0.05;
      w.sparse_input_size = b.sparse_input_size;
      w.num_timesteps = b.timesteps;
      const auto rows = weak_scaling_sweep(w, machine, parse_list<int>(b.chips, "--chips"),
                                           parse_list<int>(b.batch_grid, "--batch-grid"), per_tile);
      std::ofstream out(dir / "weak_scaling.csv");
      write_weak_scaling_csv(out, rows);
      write_weak_scaling_csv(std::cout, rows);
    }
    std::cout << "results in " << dir.string() << "\n";
  });
}

// ---------------------------------------------------------------- simulate

struct Simulate {
  Common common;
  std::string layers = "700,974,974,974,20";
  int sparse_input_size = 48;
  double max_activity = 0.05;
  std::string activity = "saturated";
  double fraction = 0.05;
  std::string mode = "sparse";
  int batch_size = 48;
  int timesteps = 10;
  int chips = 1;
  int neurons_per_tile = 2;
  std::string adam = "on";
  std::string machine;
};

void setup_simulate(CLI::App& app, Simulate& s) {
  auto* cmd = app.add_subcommand("simulate", "run the tile-machine cost model for one batch");
  add_common(cmd, s.common, "");
  cmd->add_option("--layers", s.layers, "dense layer sizes, input first")->capture_default_str();
  cmd->add_option("--sparse-input-size", s.sparse_input_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-activity", s.max_activity)->capture_default_str()->check(CLI::Range(1e-9, 1.0));
  cmd->add_option("--activity", s.activity, "traffic pattern")
      ->capture_default_str()->check(CLI::IsMember({"saturated", "zero", "uniform", "natural"}));
  cmd->add_option("--fraction", s.fraction, "active fraction for --activity uniform")
      ->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--mode", s.mode)->capture_default_str()->check(CLI::IsMember({"dense", "sparse"}));
  cmd->add_option("--batch-size", s.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--timesteps", s.timesteps)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--chips", s.chips)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--neurons-per-tile", s.neurons_per_tile)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--adam", s.adam, "count Adam moments in tile memory")
      ->capture_default_str()->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--machine", s.machine, "machine/cost config file");
  cmd->callback([&s] {
    apply_threads(s.common);
    NetworkSpec spec;
    spec.layer_sizes = parse_list<int>(s.layers, "--layers");
    if (spec.layer_sizes.size() < 2) throw ConfigError("--layers needs at least two sizes");
    spec.sparse_sizes.push_back(s.sparse_input_size);
    for (std::size_t l = 1; l + 1 < spec.layer_sizes.size(); ++l)
      spec.sparse_sizes.push_back(sparse_hidden_size(s.max_activity, spec.layer_sizes[l]));
    spec.batch_size = s.batch_size;
    spec.num_timesteps = s.timesteps;
    spec.validate();
    const auto machine = machine_from(s.machine, s.chips);
    MappingOptions mo;
    mo.adam = on_off(s.adam);
    const auto mapping = map_neurons(spec, machine, s.neurons_per_tile, mo);

    ActivityTrace activity;
    if (s.activity == "zero") {
      activity = ActivityTrace::zeros(spec);
    } else if (s.activity == "uniform") {
      activity = ActivityTrace::uniform(spec, s.fraction);
    } else if (s.activity == "natural") {
      BenchConfig c;
      c.mode = ActivityMode::natural_activity;
      c.layer_sizes = spec.layer_sizes;
      c.sparse_input_size = s.sparse_input_size;
      c.max_activity = s.max_activity;
      c.batch_size = s.batch_size;
      c.num_timesteps = s.timesteps;
      c.seed = s.common.seed;
      c.measure_wall_clock = false;
      c.machine = machine;
      c.neurons_per_tile = s.neurons_per_tile;
      c.adam = mo.adam;
      const auto net = make_network<float>(spec, c.neuron, c.seed);
      PassOptions pass;
      pass.mode = ExecMode::sparse;
      pass.rng = DropRng(c.seed).stream(0xbe4c);
      std::vector<BatchMatrix<float>> x;
      const DropRng root(c.seed);
      for (int t = 0; t < spec.num_timesteps; ++t) {
        DropRng rng = root.stream(0x1a9, static_cast<std::uint64_t>(t));
        BatchMatrix<float> step(spec.batch_size, spec.input_size());
        for (Eigen::Index b = 0; b < step.rows(); ++b)
          for (Eigen::Index i = 0; i < step.cols(); ++i)
            step(b, i) = rng.uniform01() < c.input_density ? 1.0f : 0.0f;
        x.push_back(std::move(step));
      }
      activity = ActivityTrace::from_trace(forward_pass(net, x, pass).trace);
    } else {
      activity = ActivityTrace::saturated(spec);
    }
    const auto ledger = simulate_batch(spec, mapping, machine, activity, parse_mode(s.mode));
    std::cout << std::setprecision(12) << "tiles_used " << mapping.tiles_used << "\n"
              << "chips_used " << mapping.chips_used() << "\n"
              << "supersteps " << ledger.sync_count() << "\n"
              << "total_cycles " << ledger.total_cycles() << "\n"
              << "compute_cycles " << ledger.compute_cycles() << "\n"
              << "exchange_cycles " << ledger.exchange_cycles() << "\n"
              << "sync_cycles " << ledger.sync_cycles() << "\n"
              << "intra_bytes " << ledger.intra_bytes() << "\n"
              << "inter_bytes " << ledger.inter_bytes() << "\n"
              << "header_bytes " << ledger.header_bytes() << "\n"
              << "payload_bytes " << ledger.payload_bytes() << "\n"
              << "batch_seconds " << ledger.seconds() << "\n";
    if (!s.common.out_dir.empty()) {
      fs::create_directories(s.common.out_dir);
      std::ofstream out(fs::path(s.common.out_dir) / "ledger.csv");
      ledger.write_csv(out);
    }
  });
}

// --------------------------------------------------------------- gradcheck

struct GradCheck {
  Common common;
  int cases = 20;
  double eps = 1e-3;
  double tolerance = 1e-3;
};

void setup_gradcheck(CLI::App& app, GradCheck& g, int& status) {
  auto* cmd = app.add_subcommand("gradcheck", "compare backward_pass with central finite differences");
  add_common(cmd, g.common, "");
  cmd->add_option("--cases", g.cases, "random tiny networks")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--eps", g.eps)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--tolerance", g.tolerance)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->callback([&g, &status] {
    apply_threads(g.common);
    double worst = 0;
    const DropRng root(g.common.seed);
    for (int k = 0; k < g.cases; ++k) {
      const auto r = finite_difference_check(random_gradcheck_case(root.stream(0x9c, k)), g.eps);
      worst = std::max(worst, r.max_rel_err);
    }
    const bool pass = worst < g.tolerance;
    std::cout << (pass ? "PASS" : "FAIL") << " max_rel_err " << worst << (pass ? " < " : " >= ")
              << g.tolerance << " over " << g.cases << " networks\n";
    status = pass ? 0 : 1;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparsnn: sparse spiking network training and tile-machine benchmarks"};
  app.require_subcommand(1);
  GenData gen;
  Train train;
  Bench bench;
  Simulate simulate;
  GradCheck gradcheck;
  int status = 0;
  setup_gen_data(app, gen);
  setup_train(app, train);
  setup_bench(app, bench);
  setup_simulate(app, simulate);
  setup_gradcheck(app, gradcheck, status);

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const OutOfTileMemory& e) {
    std::cerr << "out of tile memory: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const CorruptionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
