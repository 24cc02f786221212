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
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/port_usage.hpp"

namespace uopchar {

struct Uop {
  PortSet ports;
  int latency = 1;
  std::vector<int> reads;   // operand indices whose value the uop consumes
  std::vector<int> agen;    // memory operands whose address (base register) the uop consumes
  std::vector<int> after;   // earlier uops of the same instruction it consumes
  std::vector<int> writes;  // operand indices it produces
  bool eliminated = false;  // executed by the reorder buffer, no port
  int eliminate_every = 0;  // >1: every k-th dynamic instance is eliminated
  bool divider = false;     // occupies the non-pipelined divider
  std::string domain;       // "int", "fp" or empty; crossing domains adds the bypass delay

  friend bool operator==(const Uop&, const Uop&) = default;
};

struct ValueClassTiming {
  int latency = 1;
  int occupancy = 1;
  friend bool operator==(const ValueClassTiming&, const ValueClassTiming&) = default;
};

struct GroundTruthEntry {
  std::vector<Uop> uops;
  // Used instead of `uops` when every explicit register operand names the same register.
  std::optional<std::vector<Uop>> same_register;
  std::map<std::string, ValueClassTiming> value_classes;  // "fast" / "slow"

  friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

struct MachineSpec {
  std::string name;
  std::vector<int> ports;
  int issue_width = 4;
  int load_latency = 5;
  int store_forward_latency = 4;
  int bypass_delay = 1;
  std::map<std::string, PortSet> functional_units;
  PortSet divider_ports;
  std::map<std::string, GroundTruthEntry> ground_truth;
  std::string source_hash;

  PortSet all_ports() const { return PortSet::of(ports); }

  const GroundTruthEntry& entry(const std::string& id) const {
    auto it = ground_truth.find(id);
    if (it == ground_truth.end()) throw UnknownInstructionError("no ground truth for instruction '" + id + "'");
    return it->second;
  }

  // Distinct port combinations {ports(fu) | fu in FU}.
  std::vector<PortSet> port_combinations() const {
    std::vector<PortSet> out;
    for (const auto& [fu, pc] : functional_units)
      if (std::find(out.begin(), out.end(), pc) == out.end()) out.push_back(pc);
    return out;
  }
};

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

// Longest-path latency from operand `src` to operand `dst` through the uop DAG,
// or nullopt when `dst` does not depend on `src`.
inline std::optional<int> path_latency(const std::vector<Uop>& uops, int src, int dst,
                                       const std::optional<ValueClassTiming>& divider_timing = std::nullopt) {
  std::vector<std::optional<int>> finish(uops.size());
  for (std::size_t i = 0; i < uops.size(); ++i) {
    const auto& u = uops[i];
    std::optional<int> start;
    auto has = [](const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); };
    if (has(u.reads, src) || has(u.agen, src)) start = 0;
    for (int p : u.after)
      if (finish[p] && (!start || *finish[p] > *start)) start = finish[p];
    if (!start) continue;
    int lat = (u.divider && divider_timing) ? divider_timing->latency : u.latency;
    finish[i] = *start + lat;
  }
  std::optional<int> best;
  for (std::size_t i = 0; i < uops.size(); ++i)
    if (finish[i] && std::find(uops[i].writes.begin(), uops[i].writes.end(), dst) != uops[i].writes.end())
      if (!best || *finish[i] > *best) best = finish[i];
  return best;
}

inline bool is_latency_source(const OperandSpec& op) { return op.reads() && op.kind != OperandKind::kImmediate; }
inline bool is_latency_destination(const OperandSpec& op) { return op.writes(); }

inline std::optional<int> ground_truth_latency(const MachineSpec& machine, const InstructionDesc& desc, int src,
                                               int dst, const std::string& value_class = "fast") {
  const auto& e = machine.entry(desc.id);
  std::optional<ValueClassTiming> timing;
  if (auto it = e.value_classes.find(value_class); it != e.value_classes.end()) timing = it->second;
  return path_latency(e.uops, src, dst, timing);
}

inline PortUsage ground_truth_port_usage(const MachineSpec& machine, const std::string& id) {
  PortUsage pu;
  for (const auto& u : machine.entry(id).uops)
    if (!u.eliminated) pu.add(u.ports, 1);
  pu.canonicalize();
  return pu;
}

namespace detail {

inline void validate_uops(const MachineSpec& m, const std::vector<Uop>& uops, const std::string& where) {
  for (std::size_t i = 0; i < uops.size(); ++i) {
    const auto& u = uops[i];
    const std::string uw = where + " uop " + std::to_string(i);
    if (u.eliminated && !u.ports.empty()) throw ValidationError(uw + ": eliminated uop must have no ports");
    if (!u.eliminated && u.ports.empty()) throw ValidationError(uw + ": uop needs a non-empty port set");
    if (!u.ports.subset_of(m.all_ports())) throw ValidationError(uw + ": port set references unknown port");
    if (u.latency < 0) throw ValidationError(uw + ": negative latency");
    if (u.divider && !u.ports.intersects(m.divider_ports))
      throw ValidationError(uw + ": divider uop must use a divider port");
    for (int a : u.after)
      if (a < 0 || a >= static_cast<int>(i)) throw ValidationError(uw + ": 'after' must reference an earlier uop");
  }
}

inline Uop uop_from_json(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j, {"ports", "latency", "reads", "agen", "after", "writes", "eliminated", "eliminate-every", "divider", "domain"},
                 where);
  Uop u;
  auto ints = [&](const char* key) {
    std::vector<int> out;
    if (j.contains(key)) {
      if (j[key].is_array()) {
        for (const auto& v : j[key]) out.push_back(get_int(v, where + ": " + key));
      } else {
        for (const auto& s : get_string_list(j[key], where)) out.push_back(get_int(nlohmann::json(s), where));
      }
    }
    return out;
  };
  for (int p : ints("ports")) {
    if (p < 0 || p >= kMaxPorts) throw ValidationError(where + ": port " + std::to_string(p) + " out of range");
    u.ports.insert(p);
  }
  if (j.contains("latency")) u.latency = get_int(j["latency"], where + ": latency");
  u.reads = ints("reads");
  u.agen = ints("agen");
  u.after = ints("after");
  u.writes = ints("writes");
  if (j.contains("eliminated")) u.eliminated = get_bool(j["eliminated"], where);
  if (j.contains("eliminate-every")) u.eliminate_every = get_int(j["eliminate-every"], where);
  if (j.contains("divider")) u.divider = get_bool(j["divider"], where);
  if (j.contains("domain")) u.domain = j["domain"].get<std::string>();
  return u;
}

inline nlohmann::json uop_to_json(const Uop& u) {
  nlohmann::json j;
  j["ports"] = u.ports.ports();
  j["latency"] = u.latency;
  if (!u.reads.empty()) j["reads"] = u.reads;
  if (!u.agen.empty()) j["agen"] = u.agen;
  if (!u.after.empty()) j["after"] = u.after;
  if (!u.writes.empty()) j["writes"] = u.writes;
  if (u.eliminated) j["eliminated"] = true;
  if (u.eliminate_every) j["eliminate-every"] = u.eliminate_every;
  if (u.divider) j["divider"] = true;
  if (!u.domain.empty()) j["domain"] = u.domain;
  return j;
}

}  // namespace detail

// Checks that every ground-truth entry is consistent with its catalog description:
// operand references exist, and every readable/writable pair has a latency path.
inline void validate_machine_against(const MachineSpec& machine, const Catalog& catalog) {
  for (const auto& [id, e] : machine.ground_truth) {
    const std::string where = "machine '" + machine.name + "' entry '" + id + "'";
    const auto* desc = catalog.find(id);
    if (!desc) throw ValidationError(where + ": instruction not in catalog");
    const int n = static_cast<int>(desc->operands.size());
    auto check_uops = [&](const std::vector<Uop>& uops) {
      for (const auto& u : uops) {
        for (const auto* list : {&u.reads, &u.agen, &u.writes})
          for (int o : *list)
            if (o < 0 || o >= n) throw ValidationError(where + ": operand index " + std::to_string(o) + " out of range");
        for (int o : u.writes)
          if (!desc->operands[o].writes()) throw ValidationError(where + ": uop writes read-only operand " + std::to_string(o));
        for (int o : u.reads)
          if (!desc->operands[o].reads()) throw ValidationError(where + ": uop reads write-only operand " + std::to_string(o));
        for (int o : u.agen)
          if (desc->operands[o].kind != OperandKind::kMemory)
            throw ValidationError(where + ": agen operand " + std::to_string(o) + " is not memory");
      }
    };
    check_uops(e.uops);
    if (e.same_register) check_uops(*e.same_register);
    const bool zero_ok = desc->has(Attribute::kZeroLatencyCapable);
    for (const auto& s : desc->operands) {
      if (!is_latency_source(s)) continue;
      for (const auto& d : desc->operands) {
        if (!is_latency_destination(d)) continue;
        auto lat = path_latency(e.uops, s.index, d.index);
        if (!lat)
          throw ValidationError(where + ": missing latency edge " + std::to_string(s.index) + "->" +
                                std::to_string(d.index));
        if (*lat < 1 && !zero_ok)
          throw ValidationError(where + ": zero latency " + std::to_string(s.index) + "->" + std::to_string(d.index) +
                                " requires zero-latency-capable");
      }
    }
    bool divider = std::any_of(e.uops.begin(), e.uops.end(), [](const Uop& u) { return u.divider; });
    if (divider != desc->has(Attribute::kUsesDivider))
      throw ValidationError(where + ": divider uops and uses-divider attribute disagree");
    if (divider && (!e.value_classes.count("fast") || !e.value_classes.count("slow")))
      throw ValidationError(where + ": divider entry needs fast and slow value classes");
  }
}

inline MachineSpec machine_from_json(const nlohmann::json& doc, const std::string& source = "machine") {
  using namespace detail;
  reject_unknown(doc, {"name", "ports", "issue-width", "load-latency", "store-forward-latency", "bypass-delay",
                       "functional-units", "divider-ports", "ground-truth"},
                 source);
  MachineSpec m;
  m.name = doc.contains("name") ? doc["name"].get<std::string>() : source;
  for (const auto& p : require(doc, "ports", source)) {
    int port = get_int(p, source + ": ports");
    if (port < 0 || port >= kMaxPorts) throw ValidationError(source + ": port " + std::to_string(port) + " out of range");
    m.ports.push_back(port);
  }
  if (m.ports.empty()) throw ValidationError(source + ": no ports");
  if (doc.contains("issue-width")) m.issue_width = get_int(doc["issue-width"], source + ": issue-width");
  if (doc.contains("load-latency")) m.load_latency = get_int(doc["load-latency"], source + ": load-latency");
  if (doc.contains("store-forward-latency"))
    m.store_forward_latency = get_int(doc["store-forward-latency"], source + ": store-forward-latency");
  if (doc.contains("bypass-delay")) m.bypass_delay = get_int(doc["bypass-delay"], source + ": bypass-delay");
  if (m.issue_width < 1) throw ValidationError(source + ": issue-width must be >= 1");
  if (m.load_latency < 1) throw ValidationError(source + ": load-latency must be >= 1");
  if (m.store_forward_latency < 1) throw ValidationError(source + ": store-forward-latency must be >= 1");

  auto port_list = [&](const nlohmann::json& v, const std::string& where) {
    PortSet s;
    for (const auto& p : v) {
      int port = get_int(p, where);
      if (std::find(m.ports.begin(), m.ports.end(), port) == m.ports.end())
        throw ValidationError(where + ": unknown port " + std::to_string(port));
      s.insert(port);
    }
    return s;
  };
  const auto& fus = require(doc, "functional-units", source);
  for (auto it = fus.begin(); it != fus.end(); ++it) {
    auto pc = port_list(it.value(), source + ": functional unit '" + it.key() + "'");
    if (pc.empty()) throw ValidationError(source + ": functional unit '" + it.key() + "' has no ports");
    m.functional_units[it.key()] = pc;
  }
  if (doc.contains("divider-ports")) m.divider_ports = port_list(doc["divider-ports"], source + ": divider-ports");

  if (doc.contains("ground-truth")) {
    const auto& gt = doc["ground-truth"];
    for (auto it = gt.begin(); it != gt.end(); ++it) {
      const std::string where = source + ": entry '" + it.key() + "'";
      reject_unknown(it.value(), {"uops", "same-register", "value-classes"}, where);
      GroundTruthEntry e;
      int i = 0;
      for (const auto& u : require(it.value(), "uops", where))
        e.uops.push_back(uop_from_json(u, where + " uop " + std::to_string(i++)));
      if (it.value().contains("same-register")) {
        std::vector<Uop> alt;
        for (const auto& u : it.value()["same-register"]) alt.push_back(uop_from_json(u, where + " same-register"));
        e.same_register = std::move(alt);
      }
      if (it.value().contains("value-classes")) {
        const auto& vc = it.value()["value-classes"];
        for (auto c = vc.begin(); c != vc.end(); ++c) {
          reject_unknown(c.value(), {"latency", "occupancy"}, where + " value class");
          if (c.key() != "fast" && c.key() != "slow")
            throw ValidationError(where + ": unknown value class '" + c.key() + "'");
          e.value_classes[c.key()] = {get_int(require(c.value(), "latency", where), where),
                                      get_int(require(c.value(), "occupancy", where), where)};
        }
      }
      validate_uops(m, e.uops, where);
      if (e.same_register) validate_uops(m, *e.same_register, where + " same-register");
      m.ground_truth[it.key()] = std::move(e);
    }
  }
  m.source_hash = fnv1a_hex(doc.dump());
  return m;
}

inline nlohmann::json machine_to_json(const MachineSpec& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["ports"] = m.ports;
  j["issue-width"] = m.issue_width;
  j["load-latency"] = m.load_latency;
  j["store-forward-latency"] = m.store_forward_latency;
  j["bypass-delay"] = m.bypass_delay;
  for (const auto& [fu, pc] : m.functional_units) j["functional-units"][fu] = pc.ports();
  j["divider-ports"] = m.divider_ports.ports();
  j["ground-truth"] = nlohmann::json::object();
  for (const auto& [id, e] : m.ground_truth) {
    nlohmann::json je;
    for (const auto& u : e.uops) je["uops"].push_back(detail::uop_to_json(u));
    if (e.same_register) {
      je["same-register"] = nlohmann::json::array();
      for (const auto& u : *e.same_register) je["same-register"].push_back(detail::uop_to_json(u));
    }
    for (const auto& [cls, t] : e.value_classes)
      je["value-classes"][cls] = {{"latency", t.latency}, {"occupancy", t.occupancy}};
    j["ground-truth"][id] = je;
  }
  return j;
}

// Loads a JSON or XML machine description. When a catalog is given, ground
// truth is also checked against the instruction descriptions.
inline MachineSpec load_machine(const std::string& path, const Catalog* catalog = nullptr) {
  auto text = detail::read_file(path);
  nlohmann::json doc;
  if (detail::looks_like_xml(text)) {
    throw ParseError(path + ": XML machine descriptions are not supported; use JSON");
  }
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  auto m = machine_from_json(doc, path);
  m.source_hash = fnv1a_hex(text);
  if (catalog) validate_machine_against(m, *catalog);
  return m;
}

}  // namespace uopchar
