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
#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "uopchar/bench_gen.hpp"
#include "uopchar/latency_kernels.hpp"
#include "uopchar/lp.hpp"
#include "uopchar/measure.hpp"

namespace uopchar {

// Measures the latency of every available chain helper with a self chain.
inline ChainLatencies calibrate_chains(Backend& backend, const MeasurementConfig& config = {}) {
  ChainLatencies out;
  for (const auto& id : chain_helpers()) {
    if (!backend.catalog().find(id) || !backend.supports(id)) continue;
    out[id] = run_delta(make_self_chain(backend.catalog(), id), backend, config).cycles;
  }
  return out;
}

struct LatencyEntry {
  int src = 0;
  int dst = 0;
  LatencyKind kind = LatencyKind::kExact;
  Rational cycles{0};
  std::string variant;
  std::string value_class;
  std::string chain;                     // description of the winning chain
  std::optional<Rational> chain_minimum; // upper bounds: fastest measured chain
  friend bool operator==(const LatencyEntry&, const LatencyEntry&) = default;
};

struct UnchainablePair {
  int src = 0;
  int dst = 0;
  std::string reason;
  friend bool operator==(const UnchainablePair&, const UnchainablePair&) = default;
};

struct LatencyResult {
  std::vector<LatencyEntry> entries;
  std::vector<UnchainablePair> unchainable;

  // Largest exact or upper-bound latency; round trips and the same-register
  // fast path are excluded.
  std::optional<Rational> max_latency() const {
    std::optional<Rational> best;
    for (const auto& e : entries) {
      if (e.kind != LatencyKind::kExact && e.kind != LatencyKind::kUpperBound) continue;
      if (!best || e.cycles > *best) best = e.cycles;
    }
    return best;
  }
  friend bool operator==(const LatencyResult&, const LatencyResult&) = default;
};

namespace detail {

inline bool is_same_register_variant(const LatencyKernel& k) { return k.variant == "same-register"; }

}  // namespace detail

// One entry per (kind, same-register or not, value class) group of each
// pair's kernels; within a group the lowest per-occurrence latency wins.
inline LatencyResult infer_latency(const InstructionDesc& desc, Backend& backend, const ChainLatencies& calibration,
                                   const MeasurementConfig& config = {}) {
  LatencyContext ctx{backend.catalog(), [&backend](const std::string& id) { return backend.supports(id); },
                     calibration};
  LatencyResult result;
  for (const auto& [src, dst] : latency_pairs(desc)) {
    LatencyPlan plan = make_latency_kernels(ctx, desc, src, dst);
    if (plan.kernels.empty()) {
      result.unchainable.push_back({src, dst, plan.unchainable});
      continue;
    }
    std::map<std::tuple<int, bool, std::string>, LatencyEntry> groups;
    for (const auto& lk : plan.kernels) {
      const auto& meta = *lk.kernel.chain;
      Rational measured = run_delta(lk.kernel, backend, config).cycles / meta.occurrences;
      Rational latency = measured - meta.subtract;
      auto key = std::make_tuple(static_cast<int>(lk.kind), detail::is_same_register_variant(lk), lk.value_class);
      auto it = groups.find(key);
      if (it != groups.end() && it->second.cycles <= latency) continue;
      LatencyEntry e{src, dst, lk.kind, latency, lk.variant, lk.value_class, meta.description, std::nullopt};
      if (lk.kind == LatencyKind::kUpperBound) e.chain_minimum = measured;
      groups[key] = e;
    }
    for (auto& [key, e] : groups) result.entries.push_back(e);
  }
  return result;
}

// Repetitions of the blocking instruction per probe: enough to keep every
// port of the combination busy for several latencies of the instruction.
inline int block_repetitions(const std::optional<Rational>& max_latency) {
  constexpr int kFallbackLatency = 32;
  Rational lat = max_latency ? *max_latency : Rational(kFallbackLatency);
  int whole = static_cast<int>(ceil_rational(lat));
  return 8 * std::max(whole, 1);
}

namespace detail {

inline int round_uops(const Rational& value, const std::string& what) {
  const Rational nearest(floor_rational(value + Rational(1, 2)));
  Rational off = value - nearest;
  if (off < Rational(0)) off = -off;
  if (off > Rational(1, 10) || nearest < Rational(0))
    throw InconsistencyError(what + ": measured " + to_string(value) + " uops is not a non-negative integer");
  return static_cast<int>(nearest.numerator());
}

}  // namespace detail

// Walks the functional-unit port combinations that meet the ports the
// instruction uses in isolation, smallest first. For each one, a probe fills
// the combination with blockers; uops that still land there and are not
// explained by a smaller combination belong to it.
inline PortUsage infer_port_usage(const InstructionDesc& desc, Backend& backend, const BlockingTable& table,
                                  int block_rep, const MeasurementConfig& config = {}) {
  const auto prof = detail::isolation_profile(desc, backend, config);
  PortUsage pu;
  const int total = detail::round_uops(prof.port_uops, desc.id + " isolation");
  if (total == 0) return pu;

  std::vector<PortSet> combos;
  for (const auto& pc : backend.capabilities().port_combinations)
    if (pc.intersects(prof.ports) && std::find(combos.begin(), combos.end(), pc) == combos.end()) combos.push_back(pc);
  std::sort(combos.begin(), combos.end(), [](PortSet a, PortSet b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });

  int attributed = 0;
  for (const auto& pc : combos) {
    const BlockingEntry* blocker = table.find(pc);
    if (!blocker) throw UncoverableCombinationError("no blocking instruction for p" + port_digits(pc));
    auto r = run_delta(make_port_probe(backend.catalog(), desc, *blocker, block_rep), backend, config);
    Rational remainder = r.uops_on(pc) - Rational(block_rep);
    for (const auto& e : pu.entries)
      if (e.ports.strict_subset_of(pc)) remainder -= Rational(e.count);
    const int n = detail::round_uops(remainder, desc.id + " on p" + port_digits(pc));
    if (n > 0) {
      pu.add(pc, n);
      attributed += n;
    }
    if (attributed >= total) break;
  }
  if (attributed != total)
    throw InconsistencyError(desc.id + ": attributed " + std::to_string(attributed) + " of " +
                             std::to_string(total) + " uops");
  pu.canonicalize();
  return pu;
}

struct ClassThroughput {
  Rational cycles{0};
  std::string variant;
  friend bool operator==(const ClassThroughput&, const ClassThroughput&) = default;
};

struct ThroughputResult {
  Rational measured{0};
  std::string measured_variant;
  std::optional<Rational> computed;               // nullopt: not computable
  std::map<std::string, ClassThroughput> by_class; // divider instructions only
  friend bool operator==(const ThroughputResult&, const ThroughputResult&) = default;
};

// Best cycles per instance over every throughput kernel, and per value class.
inline ThroughputResult measure_throughput(const InstructionDesc& desc, Backend& backend,
                                           const MeasurementConfig& config = {}) {
  ThroughputResult out;
  bool first = true;
  for (const auto& tk : make_throughput_kernels(backend.catalog(), desc)) {
    Rational per = run_delta(tk.kernel, backend, config).cycles / tk.length;
    if (first || per < out.measured) {
      out.measured = per;
      out.measured_variant = tk.kernel.label;
    }
    first = false;
    if (tk.value_class.empty()) continue;
    auto it = out.by_class.find(tk.value_class);
    if (it == out.by_class.end() || per < it->second.cycles) out.by_class[tk.value_class] = {per, tk.kernel.label};
  }
  return out;
}

struct ZeroIdiomEvidence {
  bool zero_idiom = false;
  Rational chain_cycles{0};        // same-register instance depending on itself
  Rational independent_cycles{0};  // same-register instances on distinct registers
  std::optional<Rational> different_register_latency;
  friend bool operator==(const ZeroIdiomEvidence&, const ZeroIdiomEvidence&) = default;
};

namespace detail {

// Register class with at least two explicit operands, one of them written.
inline std::optional<std::string> same_register_class(const InstructionDesc& desc) {
  std::map<std::string, std::pair<int, bool>> seen;
  for (const auto& op : desc.operands) {
    if (op.implicit || !op.is_register()) continue;
    auto& [count, written] = seen[register_class_of(op.kind)];
    ++count;
    written = written || op.writes();
  }
  for (const auto& [cls, info] : seen)
    if (info.first >= 2 && info.second) return cls;
  return std::nullopt;
}

inline InstructionInstance bind_same_register(const Catalog& catalog, const InstructionDesc& desc,
                                              const std::string& cls, RegisterPool& pool) {
  std::map<int, Binding> fixed;
  std::string family;
  for (const auto& op : desc.operands) {
    if (op.implicit || !op.is_register() || register_class_of(op.kind) != cls) continue;
    if (family.empty()) family = pool.take(cls, op.width);
    fixed[op.index] = RegisterBinding{pool.name(cls, family, op.width)};
  }
  return bind_operands(catalog, desc, pool, fixed);
}

}  // namespace detail

// A same-register form breaks the dependency when a self-dependent chain of it
// runs no slower than independent copies, and faster than the latency with
// distinct registers.
inline ZeroIdiomEvidence detect_zero_idiom(const InstructionDesc& desc, Backend& backend, const LatencyResult& latency,
                                           const MeasurementConfig& config = {}) {
  ZeroIdiomEvidence ev;
  const auto cls = detail::same_register_class(desc);
  if (!cls) return ev;
  const Catalog& catalog = backend.catalog();
  constexpr int kIndependentCopies = 8;

  RegisterPool chain_pool(catalog);
  Kernel chain;
  chain.instances.push_back(detail::bind_same_register(catalog, desc, *cls, chain_pool));
  chain.label = desc.id + " same-register chain";
  ev.chain_cycles = run_delta(chain, backend, config).cycles;

  RegisterPool pool(catalog);
  Kernel independent;
  for (int i = 0; i < kIndependentCopies; ++i)
    independent.instances.push_back(detail::bind_same_register(catalog, desc, *cls, pool));
  independent.register_pressure = pool.pressure();
  independent.label = desc.id + " same-register independent";
  ev.independent_cycles = run_delta(independent, backend, config).cycles / kIndependentCopies;

  for (const auto& e : latency.entries) {
    if (e.kind != LatencyKind::kExact || e.variant == "same-register" || !e.value_class.empty()) continue;
    const auto& s = desc.operands.at(e.src);
    const auto& d = desc.operands.at(e.dst);
    if (s.implicit || d.implicit || !s.is_register() || !d.is_register()) continue;
    if (register_class_of(s.kind) != *cls || register_class_of(d.kind) != *cls) continue;
    if (!ev.different_register_latency || e.cycles < *ev.different_register_latency)
      ev.different_register_latency = e.cycles;
  }
  ev.zero_idiom = ev.different_register_latency && ev.chain_cycles <= ev.independent_cycles &&
                  ev.chain_cycles < *ev.different_register_latency;
  return ev;
}

// A same-register chain that runs no slower than independent same-register
// copies is throughput-bound, so it only bounds the latency from above.
inline void bound_same_register_latencies(LatencyResult& latency, const ZeroIdiomEvidence& evidence) {
  if (evidence.independent_cycles == Rational(0)) return;
  for (auto& e : latency.entries) {
    if (e.variant != "same-register" || e.kind != LatencyKind::kExact) continue;
    if (e.cycles > evidence.independent_cycles) continue;
    e.kind = LatencyKind::kUpperBound;
    e.chain_minimum = e.cycles;
  }
}

struct Provenance {
  std::string backend;
  std::string machine_hash;
  std::string config;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct CharacterizationResult {
  std::string id;
  Provenance provenance;
  std::optional<PortUsage> port_usage;
  LatencyResult latency;
  ThroughputResult throughput;
  ZeroIdiomEvidence zero_idiom;
  int block_rep = 0;
  std::string error;  // empty on success
  friend bool operator==(const CharacterizationResult&, const CharacterizationResult&) = default;
};

// Shared, read-only state for characterizing instructions on one backend.
class Characterizer {
 public:
  Characterizer(Backend& backend, MeasurementConfig config) : backend_(backend), config_(config) {
    config_.validate();
    calibration_ = calibrate_chains(backend_, config_);
    for (auto isa : {BlockingIsa::kSSE, BlockingIsa::kAVX}) {
      try {
        tables_[isa] = build_blocking_table(backend_, isa, config_);
      } catch (const UncoverableCombinationError& e) {
        table_errors_[isa] = e.what();
      }
    }
  }

  const ChainLatencies& calibration() const { return calibration_; }
  const MeasurementConfig& config() const { return config_; }
  const BlockingTable* table(BlockingIsa isa) const {
    auto it = tables_.find(isa);
    return it == tables_.end() ? nullptr : &it->second;
  }
  // Swaps in a hand-built table, e.g. to check that a bad blocker is caught.
  void replace_table(const BlockingTable& table) {
    tables_[table.isa] = table;
    table_errors_.erase(table.isa);
  }

  // Errors are recorded in the result rather than thrown, so one bad
  // instruction does not stop a batch.
  CharacterizationResult characterize(const InstructionDesc& desc) const {
    CharacterizationResult out;
    out.id = desc.id;
    const auto caps = backend_.capabilities();
    out.provenance = {caps.id, caps.machine_hash, config_.describe()};
    try {
      if (!backend_.supports(desc.id)) throw ValidationError(desc.id + ": not supported by the backend");
      out.latency = infer_latency(desc, backend_, calibration_, config_);
      out.throughput = measure_throughput(desc, backend_, config_);
      out.zero_idiom = detect_zero_idiom(desc, backend_, out.latency, config_);
      bound_same_register_latencies(out.latency, out.zero_idiom);
      out.block_rep = block_repetitions(out.latency.max_latency());
      const BlockingIsa isa = blocking_isa_for(desc);
      const BlockingTable* t = table(isa);
      if (!t) throw UncoverableCombinationError(table_errors_.at(isa));
      out.port_usage = infer_port_usage(desc, backend_, *t, out.block_rep, config_);
      out.throughput.computed = compute_throughput(*out.port_usage, desc.has(Attribute::kUsesDivider));
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  }

  // Results come back in input order whatever the number of workers.
  std::vector<CharacterizationResult> characterize_all(const std::vector<const InstructionDesc*>& descs,
                                                       int jobs) const {
    if (jobs < 1) throw ValidationError("jobs must be >= 1");
    std::vector<CharacterizationResult> results(descs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < descs.size(); i = next++) results[i] = characterize(*descs[i]);
    };
    std::vector<std::thread> pool;
    const int extra = std::min<int>(jobs, static_cast<int>(descs.size())) - 1;
    for (int j = 0; j < extra; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
  }

 private:
  Backend& backend_;
  MeasurementConfig config_;
  ChainLatencies calibration_;
  std::map<BlockingIsa, BlockingTable> tables_;
  std::map<BlockingIsa, std::string> table_errors_;
};

}  // namespace uopchar
