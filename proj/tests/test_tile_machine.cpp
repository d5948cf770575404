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

#include <doctest.h>

#include <sstream>

#include "sparsnn/events.hpp"
#include "sparsnn/parallel.hpp"
#include "sparsnn/tile_machine.hpp"

using namespace sparsnn;

namespace {

NetworkSpec spec_of(std::vector<int> sizes, std::vector<int> caps, int batch = 48, int steps = 4) {
  NetworkSpec s;
  s.layer_sizes = std::move(sizes);
  s.sparse_sizes = std::move(caps);
  s.batch_size = batch;
  s.num_timesteps = steps;
  return s;
}

NetworkSpec shd2() { return spec_of({700, 974, 974, 974, 20}, {48, 48, 48, 48}); }

}  // namespace

TEST_CASE("map: 2944 neurons at 2 per tile fill one chip") {
  auto s = spec_of({700, 1472, 1472}, {48, 48}, 8, 2);
  const auto m = map_neurons(s, MachineSpec{}, 2, {false, {}});
  CHECK(m.tiles_used == 1472);
  CHECK(m.chips_used() == 1);
  CHECK(m.tile_of(1, 1471) == 1471);
}

TEST_CASE("map: a single neuron lands on tile 0 of chip 0") {
  const auto m = map_neurons(spec_of({3, 1}, {2}), MachineSpec{}, 7);
  CHECK(m.locate(0, 0).tile == 0);
  CHECK(m.locate(0, 0).chip == 0);
  CHECK(m.tiles_used == 1);
}

TEST_CASE("map: contiguous layout, partial last tile, every neuron once") {
  const auto s = spec_of({10, 5, 7, 3}, {2, 2, 2});
  const auto m = map_neurons(s, MachineSpec{}, 4);
  std::vector<int> seen(m.tiles_used, 0);
  for (int l = 0; l < 3; ++l)
    for (int i = 0; i < s.layer_sizes[l + 1]; ++i) ++seen[m.tile_of(l, i)];
  CHECK(seen == std::vector<int>{4, 4, 4, 3});
  CHECK(m.neurons_on(1, 1) == 3);
  CHECK(m.neurons_on(1, 2) == 4);
}

TEST_CASE("map: chip_start_layers aligns a layer to the next chip") {
  MachineSpec machine;
  machine.tiles_per_chip = 4;
  machine.num_chips = 2;
  const auto m = map_neurons(spec_of({2, 3, 3}, {2, 2}), machine, 1, {false, {1}});
  CHECK(m.layer_first_tile[1] == 4);
  CHECK(m.chips_used() == 2);
  CHECK_THROWS_AS(map_neurons(spec_of({2, 5, 4}, {2, 2}), machine, 1, {false, {1}}), ConfigError);
}

TEST_CASE("map: out of tile memory exactly at the budget boundary") {
  // one neuron per tile, SGD: bytes = 8 * fan_in + 16B + 8BT + 8 + B(8 + 8 N_max)
  const int batch = 4, steps = 2, cap = 2;
  const MemoryModel mem{batch, steps, false};
  auto bytes = [&](int fan_in) {
    return mem.neuron_bytes(fan_in) + mem.receive_buffer_bytes(cap);
  };
  CHECK(bytes(100) == 8u * 100 + 16u * batch + 8u * batch * steps + 8 + batch * (8u + 8u * cap));
  const std::uint64_t budget = 624 * 1024;
  // largest fan-in that fits
  const int fits = static_cast<int>((budget - bytes(0)) / 8);
  REQUIRE(bytes(fits) <= budget);
  REQUIRE(bytes(fits + 1) > budget);
  MachineSpec machine;
  machine.sram_per_tile = bytes(fits);  // exactly full
  CHECK_NOTHROW(map_neurons(spec_of({fits, 1}, {cap}, batch, steps), machine, 1, {false, {}}));
  machine.sram_per_tile = bytes(fits) - 1;
  CHECK_THROWS_AS(map_neurons(spec_of({fits, 1}, {cap}, batch, steps), machine, 1, {false, {}}),
                  OutOfTileMemory);
  // with the default budget: one weight more or less
  CHECK_NOTHROW(map_neurons(spec_of({fits, 1}, {cap}, batch, steps), MachineSpec{}, 1, {false, {}}));
  try {
    map_neurons(spec_of({fits + 1, 1}, {cap}, batch, steps), MachineSpec{}, 1, {false, {}});
    FAIL("expected OutOfTileMemory");
  } catch (const OutOfTileMemory& e) {
    CHECK(e.tile() == 0);
    CHECK(e.bytes() == bytes(fits + 1));
  }
}

TEST_CASE("map: too many tiles is a config error, neurons_per_tile 0 too") {
  MachineSpec small;
  small.tiles_per_chip = 2;
  CHECK_THROWS_AS(map_neurons(spec_of({2, 5}, {2}), small, 2), ConfigError);
  CHECK_THROWS_AS(map_neurons(spec_of({2, 5}, {2}), MachineSpec{}, 0), ConfigError);
}

TEST_CASE("simulate: zero activity exchanges only headers") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  const auto ledger = simulate_batch(s, m, MachineSpec{}, ActivityTrace::zeros(s), ExecMode::sparse);
  CHECK(ledger.payload_bytes() == 0);
  CHECK(ledger.header_bytes() > 0);
  // compute floor: state updates only, busiest tile hosts 2 neurons, once forward and once backward
  const auto& c = MachineSpec{}.cost;
  CHECK(ledger.compute_cycles() == 2 * s.num_timesteps * 2 * 48 * c.cycles_per_state_update);
  CHECK(ledger.supersteps.front().compute_cycles == 2 * 48 * c.cycles_per_state_update);
}

TEST_CASE("simulate: exchange payload is linear in spike counts") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  const auto base = ActivityTrace::uniform(s, 0.01);
  const auto l1 = simulate_batch(s, m, MachineSpec{}, base, ExecMode::sparse);
  const auto l2 = simulate_batch(s, m, MachineSpec{}, base.scaled(2.0), ExecMode::sparse);
  const auto l0 = simulate_batch(s, m, MachineSpec{}, ActivityTrace::zeros(s), ExecMode::sparse);
  CHECK(l2.payload_bytes() == 2 * l1.payload_bytes());
  CHECK(l2.header_bytes() == l1.header_bytes());
  CHECK(l0.header_bytes() == l1.header_bytes());
}

TEST_CASE("simulate: saturation dominates any pattern with the same capacity") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  const double top = simulate_batch(s, m, MachineSpec{}, ActivityTrace::saturated(s), ExecMode::sparse).total_cycles();
  DropRng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    ActivityTrace a = ActivityTrace::saturated(s);
    for (auto& step : a.entries)
      for (double& v : step) v = std::floor(v * rng.uniform01());
    for (std::size_t t = 0; t < a.spikes.size(); ++t)
      for (std::size_t k = 0; k < a.spikes[t].size(); ++k)
        a.spikes[t][k] = std::floor(a.entries[t][k] * rng.uniform01());
    CHECK(simulate_batch(s, m, MachineSpec{}, a, ExecMode::sparse).total_cycles() <= top);
  }
}

TEST_CASE("simulate: superstep time is the max over tiles, not the sum") {
  // crafted imbalance: one tile hosts 3 neurons of a wide layer, another 1
  MachineSpec machine;
  machine.tiles_per_chip = 8;
  const auto s = spec_of({4, 3, 1}, {4, 2}, 1, 1);
  const auto m = map_neurons(s, machine, 3);
  REQUIRE(m.tiles_used == 2);
  const auto ledger = simulate_batch(s, m, machine, ActivityTrace::saturated(s), ExecMode::dense);
  const auto& c = machine.cost;
  const double heavy = 3 * (1 * c.cycles_per_state_update + 4 * c.cycles_per_mac);
  const double light = 1 * (1 * c.cycles_per_state_update + 3 * c.cycles_per_mac);
  REQUIRE(heavy > light);
  CHECK(ledger.supersteps.front().compute_cycles == heavy);
  CHECK(ledger.supersteps.front().time() ==
        heavy + ledger.supersteps.front().exchange_cycles + c.sync_cycles_per_superstep);
  double sum = 0;
  for (const auto& st : ledger.supersteps) sum += st.time();
  CHECK(ledger.total_cycles() == sum);
}

TEST_CASE("simulate: inconsistent mapping and bad activity are rejected") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  auto other = spec_of({700, 974, 974, 20}, {48, 48, 48});
  CHECK_THROWS_AS(simulate_batch(other, m, MachineSpec{}, ActivityTrace::zeros(other), ExecMode::sparse),
                  ContractViolation);
  auto a = ActivityTrace::zeros(s);
  a.entries[0][1] = a.spikes[0][1] = 48.0 * 974 + 1;
  CHECK_THROWS_AS(simulate_batch(s, m, MachineSpec{}, a, ExecMode::sparse), ContractViolation);
}

TEST_CASE("simulate: cross-chip traffic is counted as inter-chip") {
  MachineSpec machine;
  machine.num_chips = 2;
  const auto s = spec_of({700, 974, 974, 20}, {48, 48, 48});
  const auto one = map_neurons(s, machine, 2);
  const auto split = map_neurons(s, machine, 2, {true, {1}});
  const auto a = ActivityTrace::saturated(s);
  const auto l1 = simulate_batch(s, one, machine, a, ExecMode::sparse);
  const auto l2 = simulate_batch(s, split, machine, a, ExecMode::sparse);
  CHECK(l1.inter_bytes() == 0);
  CHECK(l2.inter_bytes() > 0);
  CHECK(l2.total_cycles() > l1.total_cycles());
}

TEST_CASE("simulate: ledger is independent of thread count") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  set_num_threads(1);
  std::ostringstream a, b;
  simulate_batch(s, m, MachineSpec{}, ActivityTrace::uniform(s, 0.03), ExecMode::sparse).write_csv(a);
  set_num_threads(3);
  simulate_batch(s, m, MachineSpec{}, ActivityTrace::uniform(s, 0.03), ExecMode::sparse).write_csv(b);
  set_num_threads(1);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("superstep,phase,chip,cycles,intra_bytes,inter_bytes\n", 0) == 0);
}

TEST_CASE("acceleration model") {
  const auto s = shd2();
  const auto m = map_neurons(s, MachineSpec{}, 2);
  const auto dense = simulate_batch(s, m, MachineSpec{}, ActivityTrace::zeros(s), ExecMode::dense);
  CHECK(acceleration_model(dense, dense) == 1.0);
  CostLedger ten = dense;
  for (auto& st : ten.supersteps) {
    st.compute_cycles *= 10;
    st.exchange_cycles *= 10;
    st.sync_cycles *= 10;
  }
  CHECK(acceleration_model(ten, dense) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK_THROWS_AS(acceleration_model(dense, CostLedger{}), ContractViolation);
  // nonincreasing in sparse activity
  double prev = 1e300;
  for (double a : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    const auto sp = simulate_batch(s, m, MachineSpec{}, ActivityTrace::uniform(s, a), ExecMode::sparse);
    const double acc = acceleration_model(dense, sp);
    CHECK(acc <= prev);
    prev = acc;
  }
}

TEST_CASE("weak scaling: one chip is exactly 1, unsupported topologies fail") {
  WeakScaleConfig cfg;
  cfg.hidden_per_chip = {974, 974, 974};
  CHECK(weak_scale_run(cfg, MachineSpec{}, 1) == 1.0);
  CHECK_THROWS_AS(weak_scale_run(cfg, MachineSpec{}, 3), ConfigError);
  CHECK(weak_scale_run(cfg, MachineSpec{}, 2) > 1.0);
  const auto net = weak_scale_network(cfg, 4);
  CHECK(net.layer_sizes.size() == 2 + 12);
  CHECK(net.sparse_sizes[1] == 48);
}

TEST_CASE("machine config: parse, unknown keys and bad values") {
  const auto m = parse_machine_config(
      "# comment\ntiles_per_chip = 16\nsram_per_tile=2048\ninter_chip_cycles_per_8_bytes = 12\n\n");
  CHECK(m.tiles_per_chip == 16);
  CHECK(m.sram_per_tile == 2048);
  CHECK(m.cost.inter_chip_cycles_per_8_bytes == 12.0);
  CHECK_THROWS_AS(parse_machine_config("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_machine_config("tiles_per_chip = many\n"), ConfigError);
  CHECK_THROWS_AS(parse_machine_config("tiles_per_chip 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_machine_config("intra_chip_cycles_per_8_bytes = 20\n"), ConfigError);
}
