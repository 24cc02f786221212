// Copyright 2026 The uopchar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <random>
#include <set>

#include "uopchar/simulator.hpp"

namespace uopchar {
namespace {

// Two-port toy: W writes RAX on {0,1}; CHAIN3 is a read-write op with latency 3;
// ELIM is an eliminated move; DIVLIKE occupies the divider on port 0.
struct Toy {
  Catalog catalog = parse_catalog(R"({"register-classes": {"gp": [{"name": "RAX", "width": 64}, {"name": "RBX", "width": 64},
      {"name": "RCX", "width": 64}]}, "instructions": [
    {"id": "W", "mnemonic": "w", "isa-class": "GP", "operands": [
      {"index": 0, "kind": "gp-register", "width": 64, "access": "write"}]},
    {"id": "CHAIN3", "mnemonic": "c", "isa-class": "GP", "operands": [
      {"index": 0, "kind": "gp-register", "width": 64, "access": "read-write"}]},
    {"id": "ELIM", "mnemonic": "m", "isa-class": "GP", "attributes": ["zero-latency-capable", "move-elimination-capable"],
     "operands": [{"index": 0, "kind": "gp-register", "width": 64, "access": "write"},
                  {"index": 1, "kind": "gp-register", "width": 64, "access": "read"}]},
    {"id": "DIVLIKE", "mnemonic": "d", "isa-class": "GP", "attributes": ["uses-divider"], "operands": [
      {"index": 0, "kind": "gp-register", "width": 64, "access": "read-write"}]}]})");
  MachineSpec machine = machine_from_json(nlohmann::json::parse(R"({"name": "toy", "ports": [0, 1],
    "functional-units": {"alu": [0, 1], "div": [0]}, "divider-ports": [0], "ground-truth": {
      "W": {"uops": [{"ports": [0, 1], "writes": [0]}]},
      "CHAIN3": {"uops": [{"ports": [0, 1], "latency": 3, "reads": [0], "writes": [0]}]},
      "ELIM": {"uops": [{"ports": [], "latency": 0, "reads": [1], "writes": [0], "eliminated": true}]},
      "DIVLIKE": {"uops": [{"ports": [0], "latency": 10, "reads": [0], "writes": [0], "divider": true}],
                  "value-classes": {"fast": {"latency": 10, "occupancy": 6}, "slow": {"latency": 20, "occupancy": 15}}}}})"));

  InstructionInstance inst(const std::string& id, std::vector<std::string> regs) const {
    InstructionInstance i{id, {}};
    for (auto& r : regs) i.bindings.push_back(RegisterBinding{r});
    return i;
  }
  Kernel repeat(const InstructionInstance& i, int n) const {
    Kernel k;
    for (int c = 0; c < n; ++c) k.instances.push_back(i);
    return k;
  }
};

TEST(SimulatorTest, EmptyKernel) {
  Toy t;
  CounterSnapshot s = execute(t.machine, t.catalog, Kernel{});
  EXPECT_EQ(s.cycles, 0);
  EXPECT_EQ(s.total_uops, 0);
  EXPECT_EQ(s.port_uops(), 0);
}

TEST(SimulatorTest, IndependentUopsAlternatePorts) {
  Toy t;
  CounterSnapshot s = execute(t.machine, t.catalog, t.repeat(t.inst("W", {"RAX"}), 100));
  // Two ports at one uop per cycle each: dispatch in cycles 0..49, last completes at 50.
  EXPECT_EQ(s.cycles, 50);
  EXPECT_EQ(s.uops_per_port.at(0), 50);
  EXPECT_EQ(s.uops_per_port.at(1), 50);
}

TEST(SimulatorTest, SerialChainCostsLatencyPerLink) {
  Toy t;
  for (int k : {1, 10, 37}) EXPECT_EQ(execute(t.machine, t.catalog, t.repeat(t.inst("CHAIN3", {"RBX"}), k)).cycles, 3 * k);
}

TEST(SimulatorTest, EliminatedMovesUseNoPort) {
  Toy t;
  Kernel k = t.repeat(t.inst("ELIM", {"RAX", "RBX"}), 8);
  CounterSnapshot s = execute(t.machine, t.catalog, k);
  EXPECT_EQ(s.port_uops(), 0);
  EXPECT_EQ(s.eliminated_uops, 8);
  EXPECT_EQ(s.total_uops, 8);
}

TEST(SimulatorTest, DividerOccupancyFollowsValueClass) {
  Toy t;
  // Independent instances: one per register, so throughput is bounded by occupancy.
  Kernel k;
  for (int c = 0; c < 10; ++c) k.instances.push_back(t.inst("DIVLIKE", {c % 2 ? "RAX" : "RBX"}));
  std::int64_t fast = execute(t.machine, t.catalog, k).cycles;
  k.init = {{"RAX", "slow"}, {"RBX", "slow"}};
  std::int64_t slow = execute(t.machine, t.catalog, k).cycles;
  EXPECT_EQ(fast, 9 * 6 + 10);
  EXPECT_EQ(slow, 9 * 15 + 20);
}

TEST(SimulatorTest, UnknownInstructionRejected) {
  Toy t;
  EXPECT_THROW(execute(t.machine, t.catalog, t.repeat(t.inst("NOPE", {"RAX"}), 1)), UnknownInstructionError);
}

// Random mixes of the toy instructions; checks the per-cycle port capacity,
// counter conservation, determinism, and the concatenation bounds.
class SimulatorPropertyTest : public ::testing::TestWithParam<int> {};

Kernel random_kernel(const Toy& t, std::mt19937& rng) {
  static const char* regs[] = {"RAX", "RBX", "RCX"};
  std::uniform_int_distribution<int> n(0, 40), pick(0, 3), reg(0, 2);
  Kernel k;
  int len = n(rng);
  for (int i = 0; i < len; ++i) {
    switch (pick(rng)) {
      case 0: k.instances.push_back(t.inst("W", {regs[reg(rng)]})); break;
      case 1: k.instances.push_back(t.inst("CHAIN3", {regs[reg(rng)]})); break;
      case 2: k.instances.push_back(t.inst("ELIM", {regs[reg(rng)], regs[reg(rng)]})); break;
      default: k.instances.push_back(t.inst("DIVLIKE", {regs[reg(rng)]})); break;
    }
  }
  return k;
}

TEST_P(SimulatorPropertyTest, Invariants) {
  Toy t;
  std::mt19937 rng(GetParam());
  Kernel a = random_kernel(t, rng);
  Kernel b = random_kernel(t, rng);

  std::set<std::pair<std::int64_t, int>> used;
  bool clash = false;
  CounterSnapshot sa = execute(t.machine, t.catalog, a, [&](std::int64_t cycle, int port, std::size_t) {
    clash |= !used.insert({cycle, port}).second;
  });
  EXPECT_FALSE(clash);
  EXPECT_EQ(sa.port_uops() + sa.eliminated_uops, sa.total_uops);
  EXPECT_EQ(sa, execute(t.machine, t.catalog, a));

  CounterSnapshot sb = execute(t.machine, t.catalog, b);
  Kernel ab = a;
  ab.instances.insert(ab.instances.end(), b.instances.begin(), b.instances.end());
  CounterSnapshot sab = execute(t.machine, t.catalog, ab);
  EXPECT_GE(sab.cycles, std::max(sa.cycles, sb.cycles));
  EXPECT_LE(sab.cycles, sa.cycles + sb.cycles + t.machine.issue_width);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SimulatorPropertyTest, ::testing::Range(1, 51));

}  // namespace
}  // namespace uopchar
