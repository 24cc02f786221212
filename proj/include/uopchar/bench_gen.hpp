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

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/kernel.hpp"
#include "uopchar/measure.hpp"
#include "uopchar/registers.hpp"

namespace uopchar {

// Helper instructions the generators rely on. All must be present in the
// catalog (and supported by the backend) for the kernels that use them.
namespace helper_ids {
inline constexpr const char* kGpBreaker = "MOV_R64_I32";
inline constexpr const char* kSseBreaker = "PXOR_X_X";
inline constexpr const char* kAvxBreaker = "VPXOR_Y_Y_Y";
inline constexpr const char* kMmxBreaker = "PXOR_MM_MM";
inline constexpr const char* kMemoryBreaker = "MOV_M64_I32";
inline constexpr const char* kFlagsWriter = "TEST_R64_R64";
inline constexpr const char* kMovsx8 = "MOVSX_R64_R8";
inline constexpr const char* kMovsx16 = "MOVSX_R64_R16";
inline constexpr const char* kMovsx32 = "MOVSXD_R64_R32";
inline constexpr const char* kIntShuffle = "PSHUFD_X_X_I8";
inline constexpr const char* kFpShuffle = "SHUFPD_X_X_I8";
inline constexpr const char* kAvxIntShuffle = "VPSHUFD_Y_Y_I8";
inline constexpr const char* kAvxFpShuffle = "VSHUFPD_Y_Y_Y_I8";
inline constexpr const char* kMmxMove = "MOVQ_MM_MM";
inline constexpr const char* kXor = "XOR_R64_R64";
inline constexpr const char* kAnd = "AND_R64_R64";
inline constexpr const char* kOr = "OR_R64_R64";
inline constexpr const char* kGpLoad = "MOV_R64_M64";
inline constexpr const char* kSseLoad = "MOVDQU_X_M128";
inline constexpr const char* kAvxLoad = "VMOVDQU_Y_M256";
}  // namespace helper_ids

namespace detail {

inline std::vector<std::string> fixed_families(const Catalog& catalog, const InstructionDesc& desc) {
  std::vector<std::string> out;
  for (const auto& op : desc.operands)
    if (op.fixed_register) out.push_back(catalog.family_of(*op.fixed_register));
  return out;
}

inline std::string register_name(const Binding& b) {
  if (auto* r = std::get_if<RegisterBinding>(&b)) return r->name;
  throw ValidationError("operand is not bound to a register");
}

inline InstructionInstance make_instance(const std::string& id, std::vector<Binding> bindings) {
  return InstructionInstance{id, std::move(bindings)};
}

}  // namespace detail

// Binds every operand of `desc` from `pool`, honoring `overrides`. Explicit
// read-only registers are bound to never-written shared sources (distinct per
// operand position), written registers get fresh families, memory operands
// get fresh slots on the shared base register.
inline InstructionInstance bind_operands(const Catalog& catalog, const InstructionDesc& desc, RegisterPool& pool,
                                         const std::map<int, Binding>& overrides = {}) {
  for (const auto& f : detail::fixed_families(catalog, desc)) pool.exclude(f);
  InstructionInstance inst{desc.id, std::vector<Binding>(desc.operands.size())};
  int read_only = 0;
  for (const auto& op : desc.operands) {
    if (auto it = overrides.find(op.index); it != overrides.end()) {
      inst.bindings[op.index] = it->second;
      continue;
    }
    switch (op.kind) {
      case OperandKind::kGpRegister:
      case OperandKind::kSimdRegister:
      case OperandKind::kMmxRegister:
      case OperandKind::kAgenBase: {
        if (op.fixed_register) {
          inst.bindings[op.index] = RegisterBinding{*op.fixed_register};
          break;
        }
        const auto cls = register_class_of(op.kind);
        const auto family = op.writes() ? pool.take(cls, op.width) : pool.shared_source(cls, op.width, read_only++);
        inst.bindings[op.index] = RegisterBinding{pool.name(cls, family, op.width)};
        break;
      }
      case OperandKind::kMemory:
        inst.bindings[op.index] = MemoryBinding{pool.memory_base(), pool.fresh_slot()};
        break;
      case OperandKind::kImmediate:
        inst.bindings[op.index] = ImmediateBinding{1};
        break;
      case OperandKind::kFlags:
        inst.bindings[op.index] = FlagsBinding{};
        break;
    }
  }
  return inst;
}

// An instance that writes the location bound to `op` without reading it.
inline InstructionInstance make_dep_breaker(const Catalog& catalog, const OperandSpec& op, const Binding& binding,
                                            RegisterPool& pool, BlockingIsa isa = BlockingIsa::kSSE) {
  using namespace helper_ids;
  auto family = [&] { return catalog.family_of(detail::register_name(binding)); };
  switch (op.kind) {
    case OperandKind::kGpRegister:
    case OperandKind::kAgenBase:
      return {kGpBreaker, {RegisterBinding{pool.name("gp", family(), 64)}, ImmediateBinding{0}}};
    case OperandKind::kSimdRegister:
      if (isa == BlockingIsa::kAVX) {
        RegisterBinding y{pool.name("simd", family(), 256)};
        return {kAvxBreaker, {y, y, y}};
      } else {
        RegisterBinding x{pool.name("simd", family(), 128)};
        return {kSseBreaker, {x, x}};
      }
    case OperandKind::kMmxRegister: {
      RegisterBinding m{pool.name("mmx", family(), 64)};
      return {kMmxBreaker, {m, m}};
    }
    case OperandKind::kMemory:
      return {kMemoryBreaker, {binding, ImmediateBinding{0}}};
    case OperandKind::kFlags: {
      RegisterBinding s{pool.name("gp", pool.shared_source("gp", 64, kScratchSlot), 64)};
      return {kFlagsWriter, {s, s, FlagsBinding{}}};
    }
    case OperandKind::kImmediate:
      break;
  }
  throw ValidationError("no dependency breaker for an immediate operand");
}

namespace detail {

// Locations whose values `inst` consumes (register families and memory slots).
inline std::vector<std::string> value_locations(const Catalog& catalog, const InstructionDesc& desc,
                                                const InstructionInstance& inst) {
  std::vector<std::string> out;
  for (const auto& op : desc.operands) {
    if (!op.reads()) continue;
    const auto& b = inst.bindings[op.index];
    if (auto* r = std::get_if<RegisterBinding>(&b)) out.push_back(catalog.family_of(r->name));
    if (auto* m = std::get_if<MemoryBinding>(&b)) out.push_back(slot_location(m->slot));
  }
  return out;
}

// Tags every value `kernel` reads with `value_class`.
inline void tag_values(const Catalog& catalog, Kernel& kernel, const std::string& value_class) {
  std::set<std::string> seen;
  for (const auto& inst : kernel.instances)
    for (const auto& loc : value_locations(catalog, catalog.at(inst.id), inst))
      if (seen.insert(loc).second) kernel.init.push_back({loc, value_class});
}

inline bool has_implicit_read_write(const InstructionDesc& desc) {
  return std::any_of(desc.operands.begin(), desc.operands.end(),
                     [](const OperandSpec& op) { return op.implicit && op.reads() && op.writes(); });
}

}  // namespace detail

inline const std::vector<std::string>& divider_value_classes() {
  static const std::vector<std::string> kClasses = {"fast", "slow"};
  return kClasses;
}

struct ThroughputKernel {
  Kernel kernel;
  int length = 1;
  bool breakers = false;
  std::string value_class;  // empty unless the instruction uses the divider
};

// Sequences of 1, 2, 4 and 8 mutually independent instances. Instructions with
// implicit read-write operands get extra variants with a breaker after every
// instance; divider instructions get fast- and slow-value variants.
inline std::vector<ThroughputKernel> make_throughput_kernels(const Catalog& catalog, const InstructionDesc& desc) {
  std::vector<std::string> classes{""};
  if (desc.has(Attribute::kUsesDivider)) classes = divider_value_classes();
  std::vector<bool> breaker_modes{false};
  if (detail::has_implicit_read_write(desc)) breaker_modes.push_back(true);
  const BlockingIsa isa = blocking_isa_for(desc);

  std::vector<ThroughputKernel> out;
  for (const auto& value_class : classes) {
    for (bool breakers : breaker_modes) {
      for (int length : {1, 2, 4, 8}) {
        RegisterPool pool(catalog);
        ThroughputKernel tk;
        tk.length = length;
        tk.breakers = breakers;
        tk.value_class = value_class;
        for (int i = 0; i < length; ++i) {
          auto inst = bind_operands(catalog, desc, pool);
          tk.kernel.instances.push_back(inst);
          if (!breakers) continue;
          for (const auto& op : desc.operands)
            if (op.implicit && op.reads() && op.writes())
              tk.kernel.instances.push_back(make_dep_breaker(catalog, op, inst.bindings[op.index], pool, isa));
        }
        if (!value_class.empty()) detail::tag_values(catalog, tk.kernel, value_class);
        tk.kernel.register_pressure = pool.pressure();
        tk.kernel.label = desc.id + " L=" + std::to_string(length) + (breakers ? " +breakers" : "") +
                          (value_class.empty() ? "" : " " + value_class);
        out.push_back(std::move(tk));
      }
    }
  }
  return out;
}

struct BlockingEntry {
  PortSet ports;
  std::string instruction;
  bool store = false;  // two uops: store data plus store address
  Rational cycles{0};  // measured cycles per instance
  friend bool operator==(const BlockingEntry&, const BlockingEntry&) = default;
};

struct BlockingTable {
  BlockingIsa isa = BlockingIsa::kSSE;
  std::vector<BlockingEntry> entries;  // sorted by port combination

  const BlockingEntry* find(PortSet pc) const {
    for (const auto& e : entries)
      if (e.ports == pc) return &e;
    return nullptr;
  }
  friend bool operator==(const BlockingTable&, const BlockingTable&) = default;
};

// blockRep copies of the blocker followed by one instance of `desc`. The
// blockers never touch a register or slot of the instance under test.
inline Kernel make_port_probe(const Catalog& catalog, const InstructionDesc& desc, const BlockingEntry& blocker,
                              int block_rep) {
  if (block_rep < 1) throw ValidationError("blockRep must be >= 1");
  const auto& blocker_desc = catalog.at(blocker.instruction);
  RegisterPool pool(catalog);
  auto inst = bind_operands(catalog, desc, pool);
  for (const auto& b : inst.bindings)
    if (auto* r = std::get_if<RegisterBinding>(&b)) pool.exclude(catalog.family_of(r->name));
  Kernel k;
  for (int i = 0; i < block_rep; ++i) k.instances.push_back(bind_operands(catalog, blocker_desc, pool));
  k.instances.push_back(inst);
  k.register_pressure = pool.pressure();
  k.label = desc.id + " probe p" + port_digits(blocker.ports) + " x" + std::to_string(block_rep);
  return k;
}

namespace detail {

struct IsolationProfile {
  Rational cycles{0};       // best cycles per instance over the throughput kernels
  Rational port_uops{0};    // dispatched uops per instance
  Rational total_uops{0};   // including eliminated uops
  PortSet ports;            // ports that saw uops
  MeasurementResult single; // one instance per iteration
};

inline IsolationProfile isolation_profile(const InstructionDesc& desc, Backend& backend,
                                          const MeasurementConfig& config) {
  IsolationProfile prof;
  bool first = true;
  for (const auto& tk : make_throughput_kernels(backend.catalog(), desc)) {
    if (tk.breakers || tk.value_class == "slow") continue;
    auto r = run_delta(tk.kernel, backend, config);
    Rational per = r.cycles / tk.length;
    if (first || per < prof.cycles) prof.cycles = per;
    if (first) {
      prof.port_uops = r.port_uops();
      prof.total_uops = r.total_uops;
      prof.single = r;
    }
    prof.ports = prof.ports | r.used_ports();
    first = false;
  }
  return prof;
}

// Cycles per instance of a run of blockers bound the way a port probe binds
// them; register reuse can chain copies of a long-latency blocker.
inline Rational blocker_stream_cycles(const InstructionDesc& desc, Backend& backend, const MeasurementConfig& config) {
  constexpr int kStreamLength = 60;  // divisible by every combination size up to 6
  RegisterPool pool(backend.catalog());
  Kernel k;
  for (int i = 0; i < kStreamLength; ++i) k.instances.push_back(bind_operands(backend.catalog(), desc, pool));
  k.register_pressure = pool.pressure();
  k.label = desc.id + " blocker stream";
  return run_delta(k, backend, config).cycles / kStreamLength;
}

inline int implicit_writes(const InstructionDesc& desc) {
  return static_cast<int>(std::count_if(desc.operands.begin(), desc.operands.end(),
                                        [](const OperandSpec& op) { return op.implicit && op.writes(); }));
}

}  // namespace detail

// Groups the 1-uop candidates that saturate their ports by the ports they use
// and keeps the fastest of each group (ties: fewer implicit writes, then id).
// Functional-unit combinations left uncovered are served by a
// register-to-memory store when it covers them; anything else is an error.
inline BlockingTable build_blocking_table(Backend& backend, BlockingIsa isa, const MeasurementConfig& config = {}) {
  const Catalog& catalog = backend.catalog();
  BlockingTable table;
  table.isa = isa;
  std::map<PortSet, std::tuple<Rational, int, std::string>> best;
  std::optional<std::pair<std::string, detail::IsolationProfile>> store;

  for (const auto& desc : blocking_candidates(catalog, isa)) {
    if (!backend.supports(desc.id)) continue;
    if (std::any_of(desc.operands.begin(), desc.operands.end(),
                    [](const OperandSpec& op) { return op.implicit && op.reads(); }))
      continue;  // consecutive copies would depend on each other
    auto prof = detail::isolation_profile(desc, backend, config);
    const auto* mem = desc.memory_operand();
    const bool is_store = mem && mem->writes() && std::any_of(desc.operands.begin(), desc.operands.end(),
                                                              [](const OperandSpec& op) {
                                                                return op.is_register() && op.reads();
                                                              });
    if (is_store && prof.total_uops == Rational(2) && prof.port_uops == Rational(2)) {
      auto rank = [](const std::string& id, const Catalog& c) {
        return std::make_pair(c.at(id).isa_class != IsaClass::kGP, id);
      };
      if (!store || rank(desc.id, catalog) < rank(store->first, catalog)) store = std::make_pair(desc.id, prof);
      continue;
    }
    if (prof.total_uops != Rational(1) || prof.port_uops != Rational(1)) continue;
    const Rational stream = detail::blocker_stream_cycles(desc, backend, config);
    if (stream * Rational(prof.ports.size()) > Rational(101, 100)) continue;  // cannot keep its ports busy
    auto key = std::make_tuple(stream, detail::implicit_writes(desc), desc.id);
    auto it = best.find(prof.ports);
    if (it == best.end() || key < it->second) best[prof.ports] = key;
  }
  for (const auto& [pc, key] : best) table.entries.push_back({pc, std::get<2>(key), false, std::get<0>(key)});

  std::vector<PortSet> uncovered;
  for (const auto& pc : backend.capabilities().port_combinations) {
    if (table.find(pc)) continue;
    if (store && pc.subset_of(store->second.ports) && store->second.single.uops_on(pc) == Rational(1)) {
      table.entries.push_back({pc, store->first, true, store->second.cycles});
      continue;
    }
    uncovered.push_back(pc);
  }
  if (!uncovered.empty()) {
    std::string list;
    for (const auto& pc : uncovered) list += (list.empty() ? "p" : ", p") + port_digits(pc);
    throw UncoverableCombinationError(std::string(isa == BlockingIsa::kAVX ? "AVX" : "SSE") +
                                      " blocking table: no blocking instruction for " + list);
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const BlockingEntry& a, const BlockingEntry& b) { return a.ports < b.ports; });
  return table;
}

}  // namespace uopchar
