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
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/kernel.hpp"
#include "uopchar/machine.hpp"
#include "uopchar/rational.hpp"
#include "uopchar/simulator.hpp"

namespace uopchar {

enum class Aggregator { kMean, kMedian };

struct MeasurementConfig {
  int n_small = 10;
  int n_large = 110;
  int repetitions = 100;
  bool warm_up = true;
  Aggregator aggregator = Aggregator::kMean;

  void validate() const {
    if (n_small < 0) throw ValidationError("n-small must be non-negative");
    if (n_large <= n_small) throw ValidationError("n-large must exceed n-small");
    if (repetitions < 1) throw ValidationError("repetitions must be >= 1");
  }
  std::string describe() const {
    return "n=" + std::to_string(n_small) + "/" + std::to_string(n_large) + ",reps=" + std::to_string(repetitions) +
           ",warmup=" + (warm_up ? "1" : "0") + ",agg=" + (aggregator == Aggregator::kMean ? "mean" : "median");
  }
};

struct MeasurementResult {
  Rational cycles{0};
  std::map<int, Rational> uops_per_port;
  Rational total_uops{0};
  Rational raw_spread{0};
  int discarded = 0;

  Rational uops_on(PortSet pc) const {
    Rational s{0};
    for (const auto& [p, n] : uops_per_port)
      if (pc.contains(p)) s += n;
    return s;
  }
  Rational port_uops() const {
    Rational s{0};
    for (const auto& [p, n] : uops_per_port) s += n;
    return s;
  }
  PortSet used_ports() const {
    PortSet s;
    for (const auto& [p, n] : uops_per_port)
      if (n > Rational(0)) s.insert(p);
    return s;
  }
  friend bool operator==(const MeasurementResult&, const MeasurementResult&) = default;
};

struct BackendCapabilities {
  std::string id;
  std::vector<int> ports;
  std::vector<PortSet> port_combinations;  // ports(fu) for every functional unit
  std::string machine_hash;                // identifies the measured machine
};

// A measurement target: runs `copies` back-to-back copies of a kernel body and
// returns raw counter deltas for the whole run.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendCapabilities capabilities() const = 0;
  virtual CounterSnapshot run(const Kernel& kernel, int copies) = 0;
  virtual const Catalog& catalog() const = 0;
  // Whether the backend can execute the instruction at all.
  virtual bool supports(const std::string& id) const = 0;
};

inline std::string kernel_fingerprint(const Kernel& kernel) {
  std::ostringstream out;
  for (const auto& inst : kernel.instances) {
    out << inst.id << '(';
    for (const auto& b : inst.bindings) {
      if (auto* r = std::get_if<RegisterBinding>(&b)) out << r->name;
      else if (auto* m = std::get_if<MemoryBinding>(&b)) out << '[' << m->base << '#' << m->slot << ']';
      else if (auto* i = std::get_if<ImmediateBinding>(&b)) out << '$' << i->value;
      else if (std::holds_alternative<FlagsBinding>(b)) out << 'F';
      out << ',';
    }
    out << ')';
  }
  out << '|';
  for (const auto& e : kernel.init) out << e.location << '=' << e.value_class << ';';
  return out.str();
}

inline Kernel repeat_kernel(const Kernel& kernel, int copies) {
  Kernel out;
  out.init = kernel.init;
  out.instances.reserve(kernel.instances.size() * static_cast<std::size_t>(std::max(copies, 0)));
  for (int c = 0; c < copies; ++c)
    out.instances.insert(out.instances.end(), kernel.instances.begin(), kernel.instances.end());
  return out;
}

// Measurement backend over the port-model simulator. `overhead_cycles` and
// `overhead_uops` are added to every run, standing in for the serializing and
// counter-reading code that surrounds a hardware measurement.
class SimulatorBackend : public Backend {
 public:
  SimulatorBackend(const MachineSpec& machine, const Catalog& catalog, std::int64_t overhead_cycles = 0,
                   std::int64_t overhead_uops = 0)
      : machine_(machine), catalog_(catalog), overhead_cycles_(overhead_cycles), overhead_uops_(overhead_uops) {}

  BackendCapabilities capabilities() const override {
    return {"simulator:" + machine_.name, machine_.ports, machine_.port_combinations(), machine_.source_hash};
  }
  bool supports(const std::string& id) const override { return machine_.ground_truth.count(id) != 0; }
  const Catalog& catalog() const override { return catalog_; }
  const MachineSpec& machine() const { return machine_; }

  CounterSnapshot run(const Kernel& kernel, int copies) override {
    const std::string key = std::to_string(copies) + ":" + kernel_fingerprint(kernel);
    CounterSnapshot snap;
    bool hit = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        snap = it->second;
        hit = true;
      }
    }
    if (!hit) {
      snap = execute(machine_, catalog_, repeat_kernel(kernel, copies));
      std::lock_guard<std::mutex> lock(mu_);
      cache_.emplace(key, snap);
      ++simulations_;
    }
    snap.cycles += overhead_cycles_;
    for (auto& [p, n] : snap.uops_per_port) n += overhead_uops_;
    snap.total_uops += overhead_uops_ * static_cast<std::int64_t>(snap.uops_per_port.size());
    return snap;
  }

  // Number of distinct simulations performed; runs are pure, so identical
  // (kernel, copies) requests are served from a cache.
  std::size_t simulations() const {
    std::lock_guard<std::mutex> lock(mu_);
    return simulations_;
  }

 private:
  const MachineSpec& machine_;
  const Catalog& catalog_;
  std::int64_t overhead_cycles_;
  std::int64_t overhead_uops_;
  mutable std::mutex mu_;
  std::map<std::string, CounterSnapshot> cache_;
  std::size_t simulations_ = 0;
};

namespace detail {

inline Rational aggregate(std::vector<Rational> values, Aggregator agg) {
  if (values.empty()) return Rational{0};
  if (agg == Aggregator::kMean) {
    Rational sum{0};
    for (const auto& v : values) sum += v;
    return sum / static_cast<std::int64_t>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2;
}

}  // namespace detail

// Per-iteration counters via the difference of an n_large-copy and an
// n_small-copy run, which cancels any fixed per-run overhead.
inline MeasurementResult run_delta(const Kernel& kernel, Backend& backend, const MeasurementConfig& config = {}) {
  config.validate();
  MeasurementResult result;
  for (int p : backend.capabilities().ports) result.uops_per_port[p] = 0;
  if (kernel.instances.empty()) return result;

  if (config.warm_up) (void)backend.run(kernel, config.n_small);

  const std::int64_t span = config.n_large - config.n_small;
  std::vector<Rational> cycles, totals;
  std::map<int, std::vector<Rational>> per_port;
  for (int rep = 0; rep < config.repetitions; ++rep) {
    const auto small = backend.run(kernel, config.n_small);
    const auto large = backend.run(kernel, config.n_large);
    bool overflow = large.cycles < small.cycles || large.total_uops < small.total_uops;
    for (const auto& [p, n] : large.uops_per_port) {
      auto it = small.uops_per_port.find(p);
      if (it != small.uops_per_port.end() && n < it->second) overflow = true;
    }
    if (overflow) {
      ++result.discarded;
      continue;
    }
    cycles.emplace_back(large.cycles - small.cycles, span);
    totals.emplace_back(large.total_uops - small.total_uops, span);
    for (const auto& [p, n] : large.uops_per_port) {
      auto it = small.uops_per_port.find(p);
      std::int64_t base = it == small.uops_per_port.end() ? 0 : it->second;
      per_port[p].emplace_back(n - base, span);
    }
  }
  if (cycles.empty()) throw InconsistencyError("all repetitions discarded (counter overflow)");

  auto [lo, hi] = std::minmax_element(cycles.begin(), cycles.end());
  result.raw_spread = *hi - *lo;
  result.cycles = detail::aggregate(cycles, config.aggregator);
  result.total_uops = detail::aggregate(totals, config.aggregator);
  for (auto& [p, values] : per_port) result.uops_per_port[p] = detail::aggregate(std::move(values), config.aggregator);
  return result;
}

}  // namespace uopchar
