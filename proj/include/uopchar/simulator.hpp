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
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/kernel.hpp"
#include "uopchar/machine.hpp"

namespace uopchar {

struct CounterSnapshot {
  std::int64_t cycles = 0;
  std::map<int, std::int64_t> uops_per_port;
  std::int64_t total_uops = 0;
  std::int64_t eliminated_uops = 0;

  std::int64_t port_uops() const {
    std::int64_t s = 0;
    for (const auto& [p, n] : uops_per_port) s += n;
    return s;
  }
  friend bool operator==(const CounterSnapshot&, const CounterSnapshot&) = default;
};

// Called once per dispatched uop: (cycle, port, dynamic uop index).
using DispatchTrace = std::function<void(std::int64_t, int, std::size_t)>;

namespace detail {

inline constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

struct DynUop {
  struct Input {
    std::ptrdiff_t producer;  // index into the dynamic uop list
    int delay;                // bypass delay on this edge
  };
  std::vector<Input> inputs;
  PortSet ports;
  int latency = 0;
  int occupancy = 0;
  bool eliminated = false;
  bool divider = false;
  std::string domain;
  std::int64_t issue = 0;
  std::int64_t complete = kNever;  // kNever until dispatched
};

inline bool same_register_form(const Catalog& catalog, const InstructionDesc& desc, const InstructionInstance& inst) {
  std::string family;
  int count = 0;
  for (const auto& op : desc.operands) {
    if (op.implicit || !op.is_register()) continue;
    auto* r = std::get_if<RegisterBinding>(&inst.bindings[op.index]);
    if (!r) return false;
    auto f = catalog.family_of(r->name);
    if (count++ == 0) family = f;
    else if (f != family) return false;
  }
  return count >= 2;
}

}  // namespace detail

// Cycle-level out-of-order port model. In-order issue of `issue_width` uops per
// cycle into an unbounded scheduler; each cycle ready uops dispatch oldest
// first. A uop is bound to the allowed port with the least cumulative load
// (ties to the lowest index) and waits a cycle if that port already took a uop
// this cycle. Divider uops only consider ports whose divider is free and hold
// it for `occupancy` cycles. Eliminated uops complete at issue and use no port.
inline CounterSnapshot execute(const MachineSpec& machine, const Catalog& catalog, const Kernel& kernel,
                               const DispatchTrace& trace = {}) {
  using detail::DynUop;
  using detail::kNever;

  std::unordered_map<std::string, std::string> init_class;
  for (const auto& e : kernel.init) {
    auto loc = e.location.rfind("slot:", 0) == 0 ? e.location : catalog.family_of(e.location);
    init_class[loc] = e.value_class;
  }

  std::vector<DynUop> uops;
  std::unordered_map<std::string, std::ptrdiff_t> producer;  // location -> dynamic uop
  std::map<std::pair<std::string, int>, int> elimination_counter;
  const std::string kFlags = "FLAGS";

  for (std::size_t n = 0; n < kernel.instances.size(); ++n) {
    const auto& inst = kernel.instances[n];
    const auto* desc = catalog.find(inst.id);
    if (!desc) throw UnknownInstructionError("kernel instance " + std::to_string(n) + ": unknown instruction '" + inst.id + "'");
    const auto& entry = machine.entry(inst.id);
    if (inst.bindings.size() != desc->operands.size())
      throw ValidationError("kernel instance " + std::to_string(n) + " (" + inst.id + "): unbound operand");

    auto location_of = [&](int operand) -> std::string {
      const auto& b = inst.bindings[operand];
      if (auto* r = std::get_if<RegisterBinding>(&b)) return catalog.family_of(r->name);
      if (auto* m = std::get_if<MemoryBinding>(&b)) return slot_location(m->slot);
      if (std::holds_alternative<FlagsBinding>(b)) return kFlags;
      if (std::holds_alternative<ImmediateBinding>(b)) return "";
      throw ValidationError("kernel instance " + std::to_string(n) + " (" + inst.id + "): unbound operand " +
                            std::to_string(operand));
    };
    auto base_of = [&](int operand) -> std::string {
      auto* m = std::get_if<MemoryBinding>(&inst.bindings[operand]);
      if (!m) throw ValidationError("kernel instance " + std::to_string(n) + ": operand " + std::to_string(operand) + " is not memory");
      return catalog.family_of(m->base);
    };

    const bool same_reg = entry.same_register && detail::same_register_form(catalog, *desc, inst);
    const auto& static_uops = same_reg ? *entry.same_register : entry.uops;

    std::optional<ValueClassTiming> timing;
    if (!entry.value_classes.empty()) {
      std::string cls = "fast";
      for (const auto& op : desc->operands) {
        if (!op.reads()) continue;
        auto loc = location_of(op.index);
        if (auto it = init_class.find(loc); it != init_class.end() && it->second == "slow") cls = "slow";
      }
      timing = entry.value_classes.at(cls);
    }

    const std::size_t first = uops.size();
    for (std::size_t k = 0; k < static_uops.size(); ++k) {
      const auto& su = static_uops[k];
      DynUop du;
      du.ports = su.ports;
      du.latency = su.latency;
      du.divider = su.divider;
      du.domain = su.domain;
      du.eliminated = su.eliminated;
      if (su.eliminate_every > 1) {
        int& c = elimination_counter[{inst.id, static_cast<int>(k)}];
        du.eliminated = (c++ % su.eliminate_every) == 0;
      }
      if (su.divider && timing) {
        du.latency = timing->latency;
        du.occupancy = timing->occupancy;
      }
      auto add_input = [&](const std::string& loc) {
        if (loc.empty()) return;
        auto it = producer.find(loc);
        if (it == producer.end()) return;
        const auto& p = uops[it->second];
        int delay = (!p.domain.empty() && !du.domain.empty() && p.domain != du.domain) ? machine.bypass_delay : 0;
        du.inputs.push_back({it->second, delay});
      };
      for (int o : su.reads) {
        if (desc->operands[o].kind == OperandKind::kMemory) {
          add_input(base_of(o));
          auto slot = location_of(o);
          if (producer.count(slot)) {
            du.latency = machine.store_forward_latency;  // forwarded from an in-flight store
            add_input(slot);
          }
        } else {
          add_input(location_of(o));
        }
      }
      for (int o : su.agen) add_input(base_of(o));
      for (int a : su.after) du.inputs.push_back({static_cast<std::ptrdiff_t>(first + a), 0});
      uops.push_back(std::move(du));
    }
    for (std::size_t k = 0; k < static_uops.size(); ++k)
      for (int o : static_uops[k].writes) {
        auto loc = location_of(o);
        if (!loc.empty()) producer[loc] = static_cast<std::ptrdiff_t>(first + k);
      }
  }

  CounterSnapshot snap;
  for (int p : machine.ports) snap.uops_per_port[p] = 0;
  if (uops.empty()) return snap;

  const int width = machine.issue_width;
  std::vector<int> unresolved(uops.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(uops.size());
  for (std::size_t i = 0; i < uops.size(); ++i) {
    uops[i].issue = static_cast<std::int64_t>(i / width);
    for (const auto& in : uops[i].inputs) {
      consumers[in.producer].push_back(i);
      ++unresolved[i];
    }
  }

  // Ready uops wait in queues keyed by (port mask, divider), each in program
  // order. A merge heap over the queue heads visits them oldest first; a queue
  // whose head fails to dispatch stays blocked for the rest of the cycle,
  // since every later entry would fail the same way.
  using QueueKey = std::pair<std::uint32_t, bool>;
  std::map<QueueKey, std::set<std::size_t>> queues;
  using Future = std::pair<std::int64_t, std::size_t>;  // (ready cycle, uop)
  std::priority_queue<Future, std::vector<Future>, std::greater<>> future;
  using Head = std::pair<std::size_t, QueueKey>;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heads;

  std::vector<std::int64_t> port_load(kMaxPorts, 0);
  std::vector<std::int64_t> divider_free(kMaxPorts, 0);
  const std::uint32_t all = machine.all_ports().mask();
  std::size_t done = 0;
  std::int64_t cycle = 0;
  std::int64_t last_complete = 0;
  std::vector<std::size_t> worklist;

  auto ready_time = [&](const DynUop& u) {
    std::int64_t t = u.issue;
    for (const auto& in : u.inputs) t = std::max(t, uops[in.producer].complete + in.delay);
    return t;
  };
  // Makes `i` ready at cycle `at`; eliminated uops complete immediately.
  auto make_ready = [&](std::size_t i, std::int64_t at) {
    if (at > cycle) {
      future.emplace(at, i);
    } else if (uops[i].eliminated) {
      worklist.push_back(i);
    } else {
      QueueKey key{uops[i].ports.mask(), uops[i].divider};
      queues[key].insert(i);
      heads.emplace(i, key);
    }
  };
  auto complete = [&](std::size_t i) {
    ++snap.total_uops;
    last_complete = std::max(last_complete, uops[i].complete);
    ++done;
    for (std::size_t c : consumers[i])
      if (--unresolved[c] == 0) make_ready(c, ready_time(uops[c]));
  };
  auto drain_eliminated = [&] {
    while (!worklist.empty()) {
      std::size_t i = worklist.back();
      worklist.pop_back();
      uops[i].complete = cycle + uops[i].latency;
      ++snap.eliminated_uops;
      complete(i);
    }
  };

  for (std::size_t i = 0; i < uops.size(); ++i)
    if (unresolved[i] == 0) future.emplace(uops[i].issue, i);

  while (done < uops.size()) {
    while (!future.empty() && future.top().first <= cycle) {
      std::size_t i = future.top().second;
      future.pop();
      make_ready(i, cycle);
    }
    drain_eliminated();

    std::uint32_t used = 0;
    std::set<QueueKey> blocked;
    while (!heads.empty() && (used & all) != all) {
      auto [i, key] = heads.top();
      heads.pop();
      auto& q = queues[key];
      if (blocked.count(key) || q.empty() || *q.begin() != i) continue;
      auto& u = uops[i];
      int best = -1;
      for (int p : machine.ports) {
        if (!u.ports.contains(p)) continue;
        if (u.divider && divider_free[p] > cycle) continue;
        if (best < 0 || port_load[p] < port_load[best]) best = p;
      }
      if (best < 0 || ((used >> best) & 1u)) {
        blocked.insert(key);
        continue;
      }
      q.erase(q.begin());
      if (!q.empty()) heads.emplace(*q.begin(), key);
      used |= 1u << best;
      ++port_load[best];
      ++snap.uops_per_port[best];
      if (u.divider) divider_free[best] = cycle + std::max(1, u.occupancy);
      u.complete = cycle + u.latency;
      if (trace) trace(cycle, best, i);
      complete(i);
      drain_eliminated();
    }
    if (done == uops.size()) break;

    // Requeue heads of every non-empty queue for the next cycle.
    heads = {};
    bool waiting = false;
    for (auto& [key, q] : queues) {
      if (q.empty()) continue;
      heads.emplace(*q.begin(), key);
      waiting = true;
    }
    std::int64_t next = waiting ? cycle + 1 : kNever;
    if (!future.empty()) next = std::min(next, future.top().first);
    if (next == kNever) throw InconsistencyError("simulation stalled with uops outstanding");
    cycle = std::max(cycle + 1, next);
  }
  snap.cycles = last_complete;
  return snap;
}

}  // namespace uopchar
