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

#include <set>

#include "uopchar/bench_gen.hpp"

namespace uopchar {
namespace {

std::string data(const char* name) { return std::string(UOPCHAR_DATA_DIR) + "/" + name; }

class BenchGenTest : public ::testing::Test {
 protected:
  Catalog catalog = load_catalog(data("catalog.json"));
  MachineSpec ref6 = load_machine(data("ref6.json"), &catalog);

  std::set<std::string> families(const InstructionInstance& inst, bool written) const {
    std::set<std::string> out;
    const auto& desc = catalog.at(inst.id);
    for (const auto& op : desc.operands) {
      if (op.implicit || !(written ? op.writes() : op.reads())) continue;
      if (auto* r = std::get_if<RegisterBinding>(&inst.bindings[op.index])) out.insert(catalog.family_of(r->name));
    }
    return out;
  }

  // ref6 narrowed to three functional units; instructions with a uop outside them are dropped.
  MachineSpec toy(const std::set<std::string>& drop = {}) const {
    MachineSpec m = ref6;
    m.functional_units = {{"alu", PortSet{0, 1, 5}}, {"load", PortSet{2, 3}}, {"store_data", PortSet{4}}};
    const std::vector<PortSet> allowed{PortSet{0, 1, 5}, PortSet{2, 3}, PortSet{4}};
    for (auto it = m.ground_truth.begin(); it != m.ground_truth.end();) {
      bool keep = !drop.count(it->first) && !it->second.uops.empty();
      for (const auto& u : it->second.uops)
        keep = keep && std::find(allowed.begin(), allowed.end(), u.ports) != allowed.end();
      it = keep ? std::next(it) : m.ground_truth.erase(it);
    }
    return m;
  }
};

TEST_F(BenchGenTest, ThroughputKernelCounts) {
  EXPECT_EQ(make_throughput_kernels(catalog, catalog.at("ADD_R64_R64")).size(), 4u);
  EXPECT_EQ(make_throughput_kernels(catalog, catalog.at("ADC_R64_R64")).size(), 8u);
  EXPECT_EQ(make_throughput_kernels(catalog, catalog.at("DIV_R64")).size(), 16u);
}

TEST_F(BenchGenTest, ThroughputKernelLengths) {
  std::vector<int> lengths;
  for (const auto& tk : make_throughput_kernels(catalog, catalog.at("ADD_R64_R64"))) lengths.push_back(tk.length);
  EXPECT_EQ(lengths, (std::vector<int>{1, 2, 4, 8}));
}

TEST_F(BenchGenTest, NoExplicitDependencyAcrossInstances) {
  for (const auto& desc : catalog.instructions) {
    for (const auto& tk : make_throughput_kernels(catalog, desc)) {
      const auto& xs = tk.kernel.instances;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].id != desc.id) continue;
        const auto written = families(xs[i], true);
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
          if (xs[j].id != desc.id) continue;
          for (const auto& f : families(xs[j], false))
            EXPECT_TRUE(tk.kernel.register_pressure || !written.count(f))
                << tk.kernel.label << ": instance " << j << " reads " << f;
        }
      }
    }
  }
}

TEST_F(BenchGenTest, RegisterPressureOnlyWhereTheFileRunsOut) {
  for (const auto& tk : make_throughput_kernels(catalog, catalog.at("PADDD_MM_MM")))
    EXPECT_EQ(tk.kernel.register_pressure, tk.length == 8) << tk.kernel.label;
  for (const auto& tk : make_throughput_kernels(catalog, catalog.at("PADDD_X_X")))
    EXPECT_FALSE(tk.kernel.register_pressure) << tk.kernel.label;
}

TEST_F(BenchGenTest, BreakerVariantsInterleaveBreakers) {
  for (const auto& tk : make_throughput_kernels(catalog, catalog.at("ADC_R64_R64"))) {
    if (!tk.breakers) continue;
    ASSERT_EQ(tk.kernel.instances.size(), static_cast<std::size_t>(2 * tk.length));
    for (int i = 0; i < tk.length; ++i) {
      EXPECT_EQ(tk.kernel.instances[2 * i].id, "ADC_R64_R64");
      EXPECT_EQ(tk.kernel.instances[2 * i + 1].id, helper_ids::kFlagsWriter);
    }
  }
}

TEST_F(BenchGenTest, PortProbeShape) {
  const auto& desc = catalog.at("SHLD_R64_R64_I8");
  BlockingEntry blocker{PortSet{0, 5}, "SHL_R64_I8"};
  Kernel k = make_port_probe(catalog, desc, blocker, 24);
  ASSERT_EQ(k.instances.size(), 25u);
  for (int i = 0; i < 24; ++i) EXPECT_EQ(k.instances[i].id, "SHL_R64_I8");
  EXPECT_EQ(k.instances.back().id, desc.id);

  std::set<std::string> under_test = families(k.instances.back(), true);
  for (const auto& f : families(k.instances.back(), false)) under_test.insert(f);
  for (int i = 0; i < 24; ++i) {
    for (const auto& f : families(k.instances[i], true)) EXPECT_FALSE(under_test.count(f)) << f;
    for (const auto& f : families(k.instances[i], false)) EXPECT_FALSE(under_test.count(f)) << f;
  }
}

TEST_F(BenchGenTest, PortProbeRejectsZeroRepetitions) {
  EXPECT_THROW(make_port_probe(catalog, catalog.at("ADD_R64_R64"), {PortSet{0, 1, 5}, "MOV_R64_I32"}, 0),
               ValidationError);
}

TEST_F(BenchGenTest, DependencyBreakers) {
  RegisterPool pool(catalog);
  const auto& adc = catalog.at("ADC_R64_R64");
  auto inst = bind_operands(catalog, adc, pool);
  for (const auto& op : adc.operands) {
    if (!op.writes()) continue;
    auto b = make_dep_breaker(catalog, op, inst.bindings[op.index], pool);
    EXPECT_EQ(b.id, op.kind == OperandKind::kFlags ? helper_ids::kFlagsWriter : helper_ids::kGpBreaker);
  }
  const auto& store = catalog.at("MOV_M64_R64");
  auto st = bind_operands(catalog, store, pool);
  const auto* mem = store.memory_operand();
  ASSERT_NE(mem, nullptr);
  EXPECT_EQ(make_dep_breaker(catalog, *mem, st.bindings[mem->index], pool).id, helper_ids::kMemoryBreaker);
}

TEST_F(BenchGenTest, Ref6TablesMatchGroundTruth) {
  SimulatorBackend backend(ref6, catalog);
  for (BlockingIsa isa : {BlockingIsa::kSSE, BlockingIsa::kAVX}) {
    BlockingTable table = build_blocking_table(backend, isa);
    for (const auto& pc : ref6.port_combinations()) EXPECT_NE(table.find(pc), nullptr) << port_digits(pc);
    for (const auto& e : table.entries) {
      PortUsage gt = ground_truth_port_usage(ref6, e.instruction);
      if (e.store) {
        EXPECT_EQ(e.instruction, "MOV_M64_R64");
        EXPECT_EQ(gt, parse_port_usage("1*p23+1*p4"));
      } else {
        EXPECT_EQ(format_port_usage(gt), "1*p" + port_digits(e.ports)) << e.instruction;
        EXPECT_LE(e.cycles * Rational(e.ports.size()), Rational(101, 100)) << e.instruction;
      }
    }
  }
}

TEST_F(BenchGenTest, Ref6BlockersSaturateTheirPorts) {
  SimulatorBackend backend(ref6, catalog);
  BlockingTable table = build_blocking_table(backend, BlockingIsa::kSSE);
  for (const auto& e : table.entries) {
    if (e.store) continue;
    Rational stream = detail::blocker_stream_cycles(catalog.at(e.instruction), backend, {});
    EXPECT_EQ(stream, Rational(1, e.ports.size())) << e.instruction;
  }
}

TEST_F(BenchGenTest, ToyMachineTable) {
  MachineSpec m = toy();
  SimulatorBackend backend(m, catalog);
  BlockingTable table = build_blocking_table(backend, BlockingIsa::kSSE);
  ASSERT_EQ(table.entries.size(), 3u);
  EXPECT_EQ(table.entries[0].ports, (PortSet{0, 1, 5}));
  EXPECT_EQ(table.entries[1].ports, (PortSet{2, 3}));
  EXPECT_FALSE(table.entries[1].store);
  EXPECT_EQ(table.entries[2].ports, PortSet{4});
  EXPECT_TRUE(table.entries[2].store);
  EXPECT_EQ(table.entries[2].instruction, "MOV_M64_R64");
}

TEST_F(BenchGenTest, ToyMachineWithoutLoadsOrStoresIsUncoverable) {
  MachineSpec m = toy({"MOV_R64_M64", "MOV_R16_M16", "MOVDQU_X_M128", "VMOVDQU_Y_M256", "MOV_M64_R64",
                       "MOV_M64_I32", "MOVDQU_M128_X", "VMOVDQU_M256_Y"});
  SimulatorBackend backend(m, catalog);
  try {
    build_blocking_table(backend, BlockingIsa::kSSE);
    FAIL() << "expected UncoverableCombinationError";
  } catch (const UncoverableCombinationError& e) {
    std::string what = e.what();
    EXPECT_NE(what.find("p23"), std::string::npos) << what;
    EXPECT_NE(what.find("p4"), std::string::npos) << what;
    EXPECT_EQ(what.find("p015"), std::string::npos) << what;
  }
}

}  // namespace
}  // namespace uopchar
