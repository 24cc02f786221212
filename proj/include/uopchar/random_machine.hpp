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

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/machine.hpp"

namespace uopchar {

struct RandomMachine {
  Catalog catalog;
  MachineSpec machine;
  std::vector<std::string> random_ids;
};

struct RandomMachineConfig {
  int instructions = 200;
  int min_uops = 1;
  int max_uops = 4;
  int min_latency = 1;
  int max_latency = 8;
};

namespace detail {

// Draws come straight from the engine, whose output sequence is fixed by the
// standard, so a seed yields the same machine with any standard library.
inline int draw(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace detail

// Extends a base catalog and machine with seeded two-operand GP instructions
// (op0 read-write, op1 read) whose uops use the machine's functional-unit
// port combinations. The uops form a single chain from both operands to op0;
// parallel uops could contend for a port, which the longest-path latency
// does not account for.
inline RandomMachine make_random_machine(const Catalog& base_catalog, const MachineSpec& base_machine,
                                         std::uint64_t seed, const RandomMachineConfig& config = {}) {
  if (config.instructions < 0 || config.min_uops < 1 || config.max_uops < config.min_uops ||
      config.min_latency < 1 || config.max_latency < config.min_latency)
    throw ValidationError("invalid random machine configuration");
  RandomMachine out{base_catalog, base_machine, {}};
  const auto combos = base_machine.port_combinations();
  if (combos.empty()) throw ValidationError("base machine has no functional units");
  std::mt19937_64 rng(seed);

  for (int n = 0; n < config.instructions; ++n) {
    std::string id = "RND_" + std::string(n < 10 ? "00" : n < 100 ? "0" : "") + std::to_string(n);
    if (out.catalog.find(id)) throw ValidationError("base catalog already defines '" + id + "'");
    InstructionDesc desc;
    desc.id = id;
    desc.mnemonic = "RND";
    desc.isa_class = IsaClass::kGP;
    desc.operands = {OperandSpec{0, OperandKind::kGpRegister, 64, Access::kReadWrite},
                     OperandSpec{1, OperandKind::kGpRegister, 64, Access::kRead}};
    out.catalog.instructions.push_back(desc);

    GroundTruthEntry entry;
    const int count = detail::draw(rng, config.min_uops, config.max_uops);
    for (int i = 0; i < count; ++i) {
      Uop u;
      u.ports = combos[detail::draw(rng, 0, static_cast<int>(combos.size()) - 1)];
      u.latency = detail::draw(rng, config.min_latency, config.max_latency);
      if (i == 0) u.reads = {0, 1};
      else u.after = {i - 1};
      if (i == count - 1) u.writes = {0};
      entry.uops.push_back(u);
    }
    out.machine.ground_truth[id] = entry;
    out.random_ids.push_back(id);
  }
  out.machine.name = base_machine.name + "+random(" + std::to_string(seed) + ")";
  out.machine.source_hash = fnv1a_hex(machine_to_json(out.machine).dump());
  return out;
}

}  // namespace uopchar
