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

#include <sstream>
#include <string>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/inference.hpp"
#include "uopchar/machine.hpp"

namespace uopchar {

struct Mismatch {
  std::string what;
  std::string expected;
  std::string actual;
};

struct InstructionAgreement {
  std::string id;
  bool port_usage_ok = false;
  int latencies_checked = 0;
  int latencies_ok = 0;
  std::vector<Mismatch> mismatches;

  bool agrees() const { return mismatches.empty(); }
};

struct ValidationReport {
  std::vector<InstructionAgreement> rows;

  int agreeing() const {
    int n = 0;
    for (const auto& r : rows) n += r.agrees() ? 1 : 0;
    return n;
  }
  bool all_agree() const { return agreeing() == static_cast<int>(rows.size()); }

  // One line per instruction, then a summary line.
  std::string render() const {
    std::ostringstream out;
    int pu_ok = 0, lat_checked = 0, lat_ok = 0;
    for (const auto& r : rows) {
      out << (r.agrees() ? "ok    " : "MISMATCH ") << r.id << "  ports=" << (r.port_usage_ok ? "ok" : "bad")
          << "  latency=" << r.latencies_ok << "/" << r.latencies_checked << "\n";
      for (const auto& m : r.mismatches)
        out << "    " << m.what << ": expected " << m.expected << ", got " << m.actual << "\n";
      pu_ok += r.port_usage_ok ? 1 : 0;
      lat_checked += r.latencies_checked;
      lat_ok += r.latencies_ok;
    }
    out << "agreement: " << agreeing() << "/" << rows.size() << " instructions, port usage " << pu_ok << "/"
        << rows.size() << ", latencies " << lat_ok << "/" << lat_checked << "\n";
    return out.str();
  }
};

namespace detail {

inline std::string show(const std::optional<int>& v) { return v ? std::to_string(*v) : "no dependency"; }

// With one register for every explicit operand of the source's class, each
// of those operands feeds the destination; the slowest path bounds the chain.
inline std::optional<int> same_register_latency(const InstructionDesc& desc, const std::vector<Uop>& uops, int src,
                                                int dst, const std::optional<ValueClassTiming>& timing) {
  const auto cls = register_class_of(desc.operands.at(src).kind);
  std::optional<int> best;
  for (const auto& op : desc.operands) {
    if (op.implicit || !op.is_register() || !op.reads() || register_class_of(op.kind) != cls) continue;
    auto lat = path_latency(uops, op.index, dst, timing);
    if (lat && (!best || *lat > *best)) best = lat;
  }
  return best;
}

// The same-register form breaks the dependency when no explicit register
// operand reaches a written register through its uops.
inline bool ground_truth_zero_idiom(const MachineSpec& machine, const InstructionDesc& desc) {
  const auto& e = machine.entry(desc.id);
  if (!e.same_register) return false;
  for (const auto& s : desc.operands) {
    if (s.implicit || !s.is_register() || !s.reads()) continue;
    for (const auto& d : desc.operands)
      if (!d.implicit && d.is_register() && d.writes() && path_latency(*e.same_register, s.index, d.index))
        return false;
  }
  return true;
}

}  // namespace detail

// Round-trip latencies are not latencies of the instruction alone and are
// not compared; upper bounds must not undercut the ground truth.
inline InstructionAgreement compare_with_ground_truth(const MachineSpec& machine, const Catalog& catalog,
                                                      const CharacterizationResult& result) {
  InstructionAgreement row;
  row.id = result.id;
  if (!result.error.empty()) {
    row.mismatches.push_back({"analysis", "success", result.error});
    return row;
  }
  const auto& desc = catalog.at(result.id);
  const auto& entry = machine.entry(result.id);

  const PortUsage expected = ground_truth_port_usage(machine, result.id);
  row.port_usage_ok = result.port_usage && *result.port_usage == expected;
  if (!row.port_usage_ok)
    row.mismatches.push_back({"port usage", format_port_usage(expected),
                              result.port_usage ? format_port_usage(*result.port_usage) : "none"});

  for (const auto& e : result.latency.entries) {
    if (e.kind == LatencyKind::kRoundTrip || e.kind == LatencyKind::kZeroIdiomFastPath) continue;
    const bool same = e.variant == "same-register";
    const auto& uops = same && entry.same_register ? *entry.same_register : entry.uops;
    std::optional<ValueClassTiming> timing;
    if (auto it = entry.value_classes.find(e.value_class.empty() ? "fast" : e.value_class);
        it != entry.value_classes.end())
      timing = it->second;
    const auto truth = same ? detail::same_register_latency(desc, uops, e.src, e.dst, timing)
                            : path_latency(uops, e.src, e.dst, timing);
    ++row.latencies_checked;
    const bool ok = truth && (e.kind == LatencyKind::kExact ? e.cycles == Rational(*truth)
                                                            : e.cycles >= Rational(*truth));
    if (ok) {
      ++row.latencies_ok;
      continue;
    }
    std::string what = "latency " + std::to_string(e.src) + "->" + std::to_string(e.dst) + " " +
                       std::string(to_string(e.kind));
    if (!e.variant.empty()) what += " [" + e.variant + "]";
    if (!e.value_class.empty()) what += " (" + e.value_class + ")";
    row.mismatches.push_back({what, (e.kind == LatencyKind::kUpperBound ? ">= " : "") + detail::show(truth),
                              to_string(e.cycles)});
  }

  const bool zero = detail::ground_truth_zero_idiom(machine, desc);
  if (zero != result.zero_idiom.zero_idiom)
    row.mismatches.push_back({"zero idiom", zero ? "true" : "false", result.zero_idiom.zero_idiom ? "true" : "false"});
  return row;
}

inline ValidationReport validate_results(const MachineSpec& machine, const Catalog& catalog,
                                         const std::vector<CharacterizationResult>& results) {
  ValidationReport report;
  for (const auto& r : results) report.rows.push_back(compare_with_ground_truth(machine, catalog, r));
  return report;
}

}  // namespace uopchar
