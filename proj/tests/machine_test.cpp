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

#include "uopchar/machine.hpp"

namespace uopchar {
namespace {

std::string data(const char* name) { return std::string(UOPCHAR_DATA_DIR) + "/" + name; }

class ReferenceMachineTest : public ::testing::Test {
 protected:
  Catalog catalog = load_catalog(data("catalog.json"));
  MachineSpec ref6 = load_machine(data("ref6.json"), &catalog);
  MachineSpec ref8 = load_machine(data("ref8.json"), &catalog);
};

TEST_F(ReferenceMachineTest, SixPortShape) {
  EXPECT_EQ(ref6.ports, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(ref6.issue_width, 4);
  EXPECT_GE(ref6.ground_truth.size(), 30u);
  EXPECT_FALSE(ref6.source_hash.empty());
}

TEST_F(ReferenceMachineTest, GroundTruthPortUsage) {
  EXPECT_EQ(format_port_usage(ground_truth_port_usage(ref6, "VPBLENDVB_Y_Y_Y_Y")), "2*p05");
  EXPECT_EQ(format_port_usage(ground_truth_port_usage(ref8, "ADC_R64_R64")), "1*p0156+1*p06");
  EXPECT_EQ(format_port_usage(ground_truth_port_usage(ref8, "CMOVNZ_R64_R64")), "2*p0156");
  EXPECT_EQ(format_port_usage(ground_truth_port_usage(ref6, "MOV_R64_R64")), "");
  EXPECT_EQ(format_port_usage(ground_truth_port_usage(ref6, "MOVQ2DQ_X_MM")), "1*p0+1*p015");
  EXPECT_THROW(ground_truth_port_usage(ref6, "NOPE"), UnknownInstructionError);
}

TEST_F(ReferenceMachineTest, CaseStudyEdgeLatencies) {
  const auto& aes = catalog.at("AESDEC_X_X");
  EXPECT_EQ(ground_truth_latency(ref6, aes, 0, 0), 8);
  EXPECT_EQ(ground_truth_latency(ref6, aes, 1, 0), 1);
  const auto& shld = catalog.at("SHLD_R64_R64_I8");
  EXPECT_EQ(ground_truth_latency(ref6, shld, 0, 0), 3);
  EXPECT_EQ(ground_truth_latency(ref6, shld, 1, 0), 4);
  const auto& div = catalog.at("DIV_R64");
  EXPECT_LT(*ground_truth_latency(ref6, div, 0, 1, "fast"), *ground_truth_latency(ref6, div, 0, 1, "slow"));
}

TEST(PathLatencyTest, LongestPathThroughDag) {
  // uop0: reads op1 (lat 2); uop1: reads op0, after uop0 (lat 3), writes op0.
  std::vector<Uop> uops(2);
  uops[0].ports = PortSet{0};
  uops[0].latency = 2;
  uops[0].reads = {1};
  uops[1].ports = PortSet{1};
  uops[1].latency = 3;
  uops[1].reads = {0};
  uops[1].after = {0};
  uops[1].writes = {0};
  EXPECT_EQ(path_latency(uops, 0, 0), 3);
  EXPECT_EQ(path_latency(uops, 1, 0), 5);
  EXPECT_EQ(path_latency(uops, 2, 0), std::nullopt);
}

nlohmann::json tiny_machine() {
  return nlohmann::json::parse(R"({"name": "t", "ports": [0, 1, 2, 3, 4, 5],
    "functional-units": {"alu": [0, 1]},
    "ground-truth": {"ADD": {"uops": [{"ports": [0, 1], "latency": 1, "reads": [0, 1], "writes": [0]}]}}})");
}

Catalog tiny_catalog() {
  return parse_catalog(R"({"register-classes": {"gp": [{"name": "RAX", "width": 64}]}, "instructions": [
    {"id": "ADD", "mnemonic": "add", "isa-class": "GP", "operands": [
      {"index": 0, "kind": "gp-register", "width": 64, "access": "read-write"},
      {"index": 1, "kind": "gp-register", "width": 64, "access": "read"}]}]})");
}

TEST(MachineLoadTest, ValidTinyMachine) {
  MachineSpec m = machine_from_json(tiny_machine());
  validate_machine_against(m, tiny_catalog());
  EXPECT_EQ(m.port_combinations().size(), 1u);
  EXPECT_EQ(machine_from_json(machine_to_json(m)).ground_truth, m.ground_truth);
}

TEST(MachineLoadTest, UnknownPortRejected) {
  auto j = tiny_machine();
  j["ground-truth"]["ADD"]["uops"][0]["ports"] = {9};
  EXPECT_THROW(machine_from_json(j), ValidationError);
}

TEST(MachineLoadTest, MissingLatencyEdgeRejected) {
  auto j = tiny_machine();
  j["ground-truth"]["ADD"]["uops"][0]["reads"] = {0};
  MachineSpec m = machine_from_json(j);
  try {
    validate_machine_against(m, tiny_catalog());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("ADD"), std::string::npos);
  }
}

TEST(MachineLoadTest, EliminationRules) {
  auto j = tiny_machine();
  j["ground-truth"]["ADD"]["uops"][0]["eliminated"] = true;
  EXPECT_THROW(machine_from_json(j), ValidationError);
  j = tiny_machine();
  j["ground-truth"]["ADD"]["uops"][0]["ports"] = nlohmann::json::array();
  EXPECT_THROW(machine_from_json(j), ValidationError);
  j = tiny_machine();
  j["ground-truth"]["ADD"]["uops"][0]["latency"] = 0;
  EXPECT_THROW(validate_machine_against(machine_from_json(j), tiny_catalog()), ValidationError);
}

}  // namespace
}  // namespace uopchar
