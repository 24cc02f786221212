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

#include "uopchar/latency_kernels.hpp"

namespace uopchar {
namespace {

std::string data(const char* name) { return std::string(UOPCHAR_DATA_DIR) + "/" + name; }

class LatencyKernelsTest : public ::testing::Test {
 protected:
  Catalog catalog = load_catalog(data("catalog.json"));
  LatencyContext ctx{catalog, {}, {}};

  LatencyPlan plan(const std::string& id, int src, int dst) {
    return make_latency_kernels(ctx, catalog.at(id), src, dst);
  }
  static std::vector<std::string> ids(const Kernel& k) {
    std::vector<std::string> out;
    for (const auto& i : k.instances) out.push_back(i.id);
    return out;
  }
  static std::vector<std::string> variants(const LatencyPlan& p) {
    std::vector<std::string> out;
    for (const auto& k : p.kernels) out.push_back(k.variant);
    return out;
  }
};

TEST_F(LatencyKernelsTest, PairsCoverReadSourcesAndWrittenDestinations) {
  using Pairs = std::vector<std::pair<int, int>>;
  EXPECT_EQ(latency_pairs(catalog.at("ADC_R64_R64")), (Pairs{{0, 0}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 2}}));
  EXPECT_EQ(latency_pairs(catalog.at("MOV_R64_M64")), (Pairs{{1, 0}}));
}

TEST_F(LatencyKernelsTest, LoadUsesSelfAddressingChain) {
  auto p = plan("MOV_R64_M64", 1, 0);
  ASSERT_EQ(p.kernels.size(), 1u);
  const auto& k = p.kernels[0];
  EXPECT_EQ(k.kind, LatencyKind::kExact);
  EXPECT_EQ(k.variant, "self-addressing");
  EXPECT_EQ(k.kernel.chain->subtract, Rational(0));
  ASSERT_EQ(k.kernel.instances.size(), 1u);
  const auto& inst = k.kernel.instances[0];
  const auto& dst = std::get<RegisterBinding>(inst.bindings[0]);
  const auto& mem = std::get<MemoryBinding>(inst.bindings[1]);
  EXPECT_EQ(mem.base, dst.name);
}

TEST_F(LatencyKernelsTest, FlagReadingInstructionGetsFlagsWriterBeforeIt) {
  for (int src : {0, 1}) {
    auto p = plan("ADC_R64_R64", src, 0);
    ASSERT_FALSE(p.kernels.empty());
    for (const auto& k : p.kernels) {
      auto seq = ids(k.kernel);
      auto adc = std::find(seq.begin(), seq.end(), "ADC_R64_R64");
      ASSERT_NE(adc, seq.end());
      EXPECT_NE(std::find(seq.begin(), adc, helper_ids::kFlagsWriter), adc) << k.variant;
    }
  }
}

TEST_F(LatencyKernelsTest, FlagsToRegisterClosesThroughTest) {
  auto p = plan("ADC_R64_R64", 2, 0);
  ASSERT_EQ(p.kernels.size(), 1u);
  EXPECT_EQ(p.kernels[0].variant, "test");
  EXPECT_EQ(p.kernels[0].kind, LatencyKind::kExact);
  EXPECT_EQ(p.kernels[0].kernel.chain->subtract, Rational(1));
}

TEST_F(LatencyKernelsTest, RegisterToFlagsIsAnUpperBound) {
  auto p = plan("ADC_R64_R64", 0, 2);
  ASSERT_FALSE(p.kernels.empty());
  for (const auto& k : p.kernels) EXPECT_EQ(k.kind, LatencyKind::kUpperBound) << k.variant;
}

TEST_F(LatencyKernelsTest, SimdPairsGetBothShuffleDomainsAndSameRegister) {
  auto p = plan("PADDD_X_X", 1, 0);
  EXPECT_EQ(variants(p), (std::vector<std::string>{"int-shuffle", "fp-shuffle", "same-register"}));
  auto avx = plan("VPADDD_Y_Y_Y", 1, 0);
  ASSERT_GE(avx.kernels.size(), 2u);
  EXPECT_EQ(ids(avx.kernels[0].kernel).back(), helper_ids::kAvxIntShuffle);
  EXPECT_EQ(ids(avx.kernels[1].kernel).back(), helper_ids::kAvxFpShuffle);
}

TEST_F(LatencyKernelsTest, CrossClassChainIsAnUpperBound) {
  auto p = plan("MOVQ_R64_X", 1, 0);
  ASSERT_FALSE(p.kernels.empty());
  for (const auto& k : p.kernels) EXPECT_EQ(k.kind, LatencyKind::kUpperBound);
}

TEST_F(LatencyKernelsTest, StoreIsARoundTrip) {
  auto p = plan("MOV_M64_R64", 1, 0);
  ASSERT_FALSE(p.kernels.empty());
  for (const auto& k : p.kernels) EXPECT_EQ(k.kind, LatencyKind::kRoundTrip);
}

TEST_F(LatencyKernelsTest, EveryPairHasKernelsOrALabelledReason) {
  for (const auto& desc : catalog.instructions) {
    for (const auto& [src, dst] : latency_pairs(desc)) {
      auto p = make_latency_kernels(ctx, desc, src, dst);
      if (p.kernels.empty()) {
        EXPECT_EQ(p.unchainable.rfind("unchainable pair: ", 0), 0u) << desc.id << " " << p.unchainable;
        continue;
      }
      EXPECT_TRUE(p.unchainable.empty()) << desc.id;
      for (const auto& k : p.kernels) {
        ASSERT_TRUE(k.kernel.chain.has_value()) << desc.id;
        EXPECT_EQ(k.kernel.chain->instruction, desc.id);
        EXPECT_GE(k.kernel.chain->occurrences, 1);
        EXPECT_GE(k.kernel.chain->subtract, Rational(0));
        const auto seq = ids(k.kernel);
        EXPECT_GE(std::count(seq.begin(), seq.end(), desc.id), k.kernel.chain->occurrences) << desc.id;
      }
    }
  }
}

TEST_F(LatencyKernelsTest, DividerChainsCoverBothValueClasses) {
  auto p = plan("DIV_R64", 1, 1);
  std::set<std::string> classes;
  for (const auto& k : p.kernels) classes.insert(k.value_class);
  EXPECT_EQ(classes, (std::set<std::string>{"fast", "slow"}));
}

}  // namespace
}  // namespace uopchar
