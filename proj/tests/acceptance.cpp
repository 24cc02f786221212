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

// One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

#include "uopchar/inference.hpp"
#include "uopchar/lp.hpp"
#include "uopchar/random_machine.hpp"
#include "uopchar/report.hpp"
#include "uopchar/validate.hpp"

namespace uopchar {
namespace {

using Clock = std::chrono::steady_clock;

std::string data(const char* name) { return std::string(UOPCHAR_DATA_DIR) + "/" + name; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) out += (i ? "; " : "") + failures_[i];
    if (failures_.size() > 5) out += "; ... " + std::to_string(failures_.size() - 5) + " more";
    return out;
  }

 private:
  std::vector<std::string> failures_;
};

struct Fixture {
  Catalog catalog = load_catalog(data("catalog.json"));
  MachineSpec ref6 = load_machine(data("ref6.json"), &catalog);
  MachineSpec ref8 = load_machine(data("ref8.json"), &catalog);
};

const LatencyEntry* latency(const CharacterizationResult& r, int src, int dst, bool same_register) {
  for (const auto& e : r.latency.entries)
    if (e.src == src && e.dst == dst && (e.variant == "same-register") == same_register) return &e;
  return nullptr;
}

std::string show(const LatencyEntry* e) { return e ? to_string(e->cycles) : "missing"; }

std::string show(const std::optional<PortUsage>& pu) { return pu ? format_port_usage(*pu) : "none"; }

PortUsage truth_port_usage(const GroundTruthEntry& gt) {
  PortUsage pu;
  for (const auto& u : gt.uops)
    if (!u.eliminated && !u.ports.empty()) pu.add(u.ports, 1);
  return pu;
}

void criterion1(const Fixture& f, Check& c, std::string& detail) {
  const auto start = Clock::now();
  auto rm = make_random_machine(f.catalog, f.ref6, 1);
  SimulatorBackend backend(rm.machine, rm.catalog);
  Characterizer ch(backend, {});
  c.expect(ch.table(BlockingIsa::kSSE) != nullptr, "no SSE blocking table");
  std::vector<const InstructionDesc*> descs;
  for (const auto& id : rm.random_ids) descs.push_back(&rm.catalog.at(id));
  int agree = 0;
  for (const auto& r : ch.characterize_all(descs, 1)) {
    const auto expected = truth_port_usage(rm.machine.entry(r.id));
    const bool ok = r.error.empty() && r.port_usage && *r.port_usage == expected;
    agree += ok ? 1 : 0;
    c.expect(ok, r.id + " expected " + format_port_usage(expected) + " got " + show(r.port_usage) + " " + r.error);
  }
  const double secs = seconds_since(start);
  c.expect(descs.size() == 200, "expected 200 random instructions");
  c.expect(secs < 120, "took " + std::to_string(secs) + " s");
  std::ostringstream out;
  out << agree << "/" << descs.size() << " port usages, " << static_cast<int>(secs) << " s";
  detail = out.str();
}

void criterion2(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend b6(f.ref6, f.catalog);
  Characterizer c6(b6, {});
  const auto blend = c6.characterize(f.catalog.at("VPBLENDVB_Y_Y_Y_Y")).port_usage;
  c.expect(show(blend) == "2*p05", "VPBLENDVB gave " + show(blend));
  SimulatorBackend b8(f.ref8, f.catalog);
  Characterizer c8(b8, {});
  const auto adc = c8.characterize(f.catalog.at("ADC_R64_R64")).port_usage;
  const auto cmov = c8.characterize(f.catalog.at("CMOVNZ_R64_R64")).port_usage;
  c.expect(show(adc) == "1*p0156+1*p06", "ADC gave " + show(adc));
  c.expect(show(cmov) == "2*p0156", "CMOVNZ gave " + show(cmov));
  detail = show(blend) + ", " + show(adc) + " vs " + show(cmov);
}

void criterion3(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend backend(f.ref6, f.catalog);
  Characterizer ch(backend, {});
  const auto r = ch.characterize(f.catalog.at("AESDEC_X_X"));
  const auto* self = latency(r, 0, 0, false);
  const auto* other = latency(r, 1, 0, false);
  c.expect(self && self->kind == LatencyKind::kExact && self->cycles == Rational(8), "lat(op1,op1) " + show(self));
  c.expect(other && other->kind == LatencyKind::kExact && other->cycles == Rational(1), "lat(op2,op1) " + show(other));
  detail = "lat(op1,op1)=" + show(self) + " lat(op2,op1)=" + show(other);
}

void criterion4(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend backend(f.ref6, f.catalog);
  Characterizer ch(backend, {});
  const auto r = ch.characterize(f.catalog.at("SHLD_R64_R64_I8"));
  const auto* self = latency(r, 0, 0, false);
  const auto* other = latency(r, 1, 0, false);
  const auto* same = latency(r, 0, 0, true);
  c.expect(self && self->cycles == Rational(3), "lat(op1,op1) " + show(self));
  c.expect(other && other->cycles == Rational(4), "lat(op2,op1) " + show(other));
  c.expect(same && same->cycles == Rational(1), "same-register " + show(same));
  detail = "lat(op1,op1)=" + show(self) + " lat(op2,op1)=" + show(other) + " same-register=" + show(same);
}

void criterion5(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend backend(f.ref6, f.catalog);
  Characterizer ch(backend, {});
  const auto* table = ch.table(BlockingIsa::kSSE);
  c.expect(table && table->find(PortSet{1, 5}), "no p15 blocker");
  const auto pu = ch.characterize(f.catalog.at("MOVQ2DQ_X_MM")).port_usage;
  c.expect(show(pu) == "1*p0+1*p015", "MOVQ2DQ gave " + show(pu));
  detail = show(pu);
}

// Exact optimum: the largest ratio of uops confined to a port subset to its size.
Rational subset_bound(const PortUsage& pu, int ports) {
  Rational best(0);
  for (std::uint32_t mask = 1; mask < (1u << ports); ++mask) {
    PortSet s(mask);
    int confined = 0;
    for (const auto& e : pu.entries)
      if (e.ports.subset_of(s)) confined += e.count;
    best = std::max(best, Rational(confined, s.size()));
  }
  return best;
}

void criterion6(const Fixture&, Check& c, std::string& detail) {
  constexpr int kPorts = 4;
  std::vector<PortSet> subsets;
  for (std::uint32_t m = 1; m < (1u << kPorts); ++m) subsets.push_back(PortSet(m));
  int checked = 0;
  std::function<void(std::size_t, PortUsage&)> walk = [&](std::size_t next, PortUsage& pu) {
    if (!pu.entries.empty()) {
      const auto lp = compute_throughput(pu, false);
      const Rational expected = subset_bound(pu, kPorts);
      c.expect(lp && *lp == expected, format_port_usage(pu) + " lp " + (lp ? to_string(*lp) : "none") +
                                          " expected " + to_string(expected));
      ++checked;
    }
    if (pu.entries.size() == 3) return;
    for (std::size_t i = next; i < subsets.size(); ++i) {
      for (int count = 1; count <= 3; ++count) {
        pu.entries.push_back({subsets[i], count});
        walk(i + 1, pu);
        pu.entries.pop_back();
      }
    }
  };
  PortUsage pu;
  walk(0, pu);
  int single = 0;
  for (std::uint32_t m = 1; m < (1u << kMaxPorts) && m < (1u << 10); ++m) {
    PortUsage one;
    one.add(PortSet(m), 1);
    const auto lp = compute_throughput(one, false);
    c.expect(lp && *lp == Rational(1, PortSet(m).size()), "1/|P| fails for p" + port_digits(PortSet(m)));
    ++single;
  }
  detail = std::to_string(checked) + " usages exact, " + std::to_string(single) + " single-uop usages";
}

void criterion7(const Fixture& f, Check& c, std::string& detail) {
  int kernels = 0;
  for (const auto& [id, gt] : f.ref6.ground_truth) {
    for (const auto& tk : make_throughput_kernels(f.catalog, f.catalog.at(id))) {
      std::optional<MeasurementResult> first;
      for (std::int64_t overhead : {0, 37, 1000}) {
        SimulatorBackend backend(f.ref6, f.catalog, overhead, overhead / 10);
        const auto r = run_delta(tk.kernel, backend);
        if (first) c.expect(r == *first, tk.kernel.label + " differs with overhead " + std::to_string(overhead));
        else first = r;
      }
      ++kernels;
    }
  }
  detail = std::to_string(kernels) + " kernels identical under overhead 0, 37, 1000";
}

void criterion8(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend backend(f.ref6, f.catalog);
  Characterizer ch(backend, {});
  const auto r = ch.characterize(f.catalog.at("DIV_R64"));
  c.expect(r.error.empty(), r.error);
  std::optional<Rational> fast, slow;
  for (const auto& e : r.latency.entries) {
    if (e.kind != LatencyKind::kExact) continue;
    auto& slot = e.value_class == "slow" ? slow : fast;
    if (e.value_class.empty()) continue;
    if (!slot || e.cycles > *slot) slot = e.cycles;
  }
  c.expect(fast && slow && *slow > *fast, "slow latency not above fast");
  c.expect(!r.throughput.computed, "LP throughput should be not computable");
  c.expect(r.throughput.measured > Rational(0), "no measured throughput");
  detail = "latency fast " + (fast ? to_string(*fast) : "-") + " slow " + (slow ? to_string(*slow) : "-") +
           ", measured " + to_string(r.throughput.measured) + ", computed not computable";
}

void criterion9(const Fixture& f, Check& c, std::string& detail) {
  SimulatorBackend backend(f.ref6, f.catalog);
  Characterizer ch(backend, {});
  std::vector<const InstructionDesc*> descs;
  for (const auto& [id, gt] : f.ref6.ground_truth) descs.push_back(&f.catalog.at(id));
  const auto results = ch.characterize_all(descs, 1);
  const auto expected = report_detail::sorted(results);
  for (auto format : {ReportFormat::kJson, ReportFormat::kXml}) {
    const auto text = render_results(results, format);
    const auto back = parse_results(text, "acceptance");
    c.expect(back == expected, std::string(format == ReportFormat::kXml ? "xml" : "json") + " round trip differs");
  }
  const std::regex grammar("([1-9][0-9]*\\*p[0-9A-F]+(\\+[1-9][0-9]*\\*p[0-9A-F]+)*)?");
  for (const auto& r : results)
    if (r.port_usage) c.expect(std::regex_match(format_port_usage(*r.port_usage), grammar), r.id + " p-notation");
  detail = std::to_string(results.size()) + " results, xml and json";
}

void criterion10(const Fixture& f, Check& c, std::string& detail) {
  const auto start = Clock::now();
  const std::string command = std::string("\"") + UOPCHAR_CLI + "\" validate > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  const double secs = seconds_since(start);
  c.expect(status == 0, "uopchar validate exited with status " + std::to_string(status));
  c.expect(secs < 300, "took " + std::to_string(secs) + " s");
  c.expect(f.ref6.ground_truth.size() >= 30, "reference machine has fewer than 30 instructions");
  detail = "exit " + std::to_string(status) + ", " + std::to_string(f.ref6.ground_truth.size()) +
           " instructions, " + std::to_string(static_cast<int>(secs)) + " s";
}

}  // namespace
}  // namespace uopchar

int main() {
  using namespace uopchar;
  const Fixture fixture;
  const std::vector<std::pair<std::string, void (*)(const Fixture&, Check&, std::string&)>> criteria{
      {"port usage matches ground truth on 200 random instructions", criterion1},
      {"2*p05 and 1*p0156+1*p06 vs 2*p0156 disambiguated", criterion2},
      {"AES latencies 8 and 1", criterion3},
      {"SHLD latencies 3, 4 and same-register 1", criterion4},
      {"MOVQ2DQ second uop on p015", criterion5},
      {"throughput LP exact on all small usages", criterion6},
      {"run overhead cancels exactly", criterion7},
      {"divider value classes and not-computable throughput", criterion8},
      {"report round trip and p-notation", criterion9},
      {"uopchar validate on the reference machine", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    std::string detail;
    try {
      criteria[i].second(fixture, check, detail);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (check.ok() ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << " (" << detail
              << ")";
    if (!check.ok()) std::cout << ": " << check.summary();
    std::cout << std::endl;
    failed += check.ok() ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
