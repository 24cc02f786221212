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

#include <fnmatch.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uopchar/random_machine.hpp"
#include "uopchar/report.hpp"
#include "uopchar/validate.hpp"

namespace {

using namespace uopchar;

constexpr int kExitOk = 0;
constexpr int kExitInconsistent = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string catalog = std::string(UOPCHAR_DATA_DIR) + "/catalog.json";
  std::string machine = std::string(UOPCHAR_DATA_DIR) + "/ref6.json";
  std::vector<std::string> filter;
  std::string out = "-";
  std::string format = "xml";
  std::optional<std::uint64_t> seed;
  int random_count = 200;
  int jobs = 1;
  MeasurementConfig measurement;
  std::string aggregator = "mean";
  bool list_json = false;
};

Catalog load_catalog_or_usage(const std::string& path) {
  try {
    return load_catalog(path);
  } catch (const Error& e) {
    throw UsageError(std::string("cannot load catalog: ") + e.what());
  }
}

MachineSpec load_machine_or_usage(const std::string& path, const Catalog& catalog) {
  try {
    return load_machine(path, &catalog);
  } catch (const Error& e) {
    throw UsageError(std::string("cannot load machine: ") + e.what());
  }
}

// Filter tokens match an id, a mnemonic, or an id glob. Without a filter,
// every instruction the machine describes is selected.
std::vector<const InstructionDesc*> select(const Catalog& catalog, const MachineSpec& machine,
                                           const std::vector<std::string>& filter) {
  std::vector<const InstructionDesc*> out;
  for (const auto& desc : catalog.instructions) {
    if (!machine.ground_truth.count(desc.id)) continue;
    bool keep = filter.empty();
    for (const auto& token : filter)
      keep = keep || token == desc.id || token == desc.mnemonic || fnmatch(token.c_str(), desc.id.c_str(), 0) == 0;
    if (keep) out.push_back(&desc);
  }
  if (out.empty()) throw UsageError("filter matches no instruction");
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text).flush()) throw UsageError("cannot write '" + path + "'");
}

MeasurementConfig measurement_of(const RunConfig& cfg) {
  MeasurementConfig m = cfg.measurement;
  m.aggregator = cfg.aggregator == "median" ? Aggregator::kMedian : Aggregator::kMean;
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  return m;
}

std::vector<CharacterizationResult> characterize(const MachineSpec& machine, const Catalog& catalog,
                                                 const std::vector<const InstructionDesc*>& descs,
                                                 const RunConfig& cfg) {
  if (cfg.jobs < 1) throw UsageError("--jobs must be >= 1");
  SimulatorBackend backend(machine, catalog);
  Characterizer characterizer(backend, measurement_of(cfg));
  return characterizer.characterize_all(descs, cfg.jobs);
}

int report_errors(const std::vector<CharacterizationResult>& results) {
  int failed = 0;
  for (const auto& r : results) {
    if (r.error.empty()) continue;
    std::cerr << "error: " << r.id << ": " << r.error << "\n";
    ++failed;
  }
  if (failed) std::cerr << failed << " of " << results.size() << " instructions failed\n";
  return failed;
}

int cmd_analyze(const RunConfig& cfg) {
  const auto format = parse_report_format(cfg.format);
  const Catalog catalog = load_catalog_or_usage(cfg.catalog);
  const MachineSpec machine = load_machine_or_usage(cfg.machine, catalog);
  const auto results = characterize(machine, catalog, select(catalog, machine, cfg.filter), cfg);
  emit(render_results(results, format), cfg.out);
  return report_errors(results) ? kExitInconsistent : kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
  const Catalog base_catalog = load_catalog_or_usage(cfg.catalog);
  const MachineSpec base_machine = load_machine_or_usage(cfg.machine, base_catalog);
  std::optional<RandomMachine> random;
  if (cfg.seed) {
    RandomMachineConfig rc;
    rc.instructions = cfg.random_count;
    random = make_random_machine(base_catalog, base_machine, *cfg.seed, rc);
  }
  const Catalog& catalog = random ? random->catalog : base_catalog;
  const MachineSpec& machine = random ? random->machine : base_machine;
  std::vector<std::string> filter = cfg.filter;
  if (random && filter.empty()) filter = random->random_ids;
  const auto results = characterize(machine, catalog, select(catalog, machine, filter), cfg);
  const auto report = validate_results(machine, catalog, results);
  emit(report.render(), cfg.out);
  return report.all_agree() ? kExitOk : kExitInconsistent;
}

int cmd_list(const RunConfig& cfg) {
  const Catalog catalog = load_catalog_or_usage(cfg.catalog);
  std::ostringstream out;
  if (cfg.list_json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : catalog.instructions) {
      nlohmann::json attrs = nlohmann::json::array();
      for (auto a : d.attributes) attrs.push_back(std::string(to_string(a)));
      arr.push_back({{"id", d.id}, {"mnemonic", d.mnemonic}, {"isa-class", std::string(to_string(d.isa_class))},
                     {"operands", d.operands.size()}, {"attributes", attrs}});
    }
    out << arr.dump(2) << "\n";
  } else {
    for (const auto& d : catalog.instructions) {
      out << d.id << "  " << d.mnemonic << "  " << to_string(d.isa_class);
      for (auto a : d.attributes) out << "  " << to_string(a);
      out << "\n";
    }
  }
  emit(out.str(), cfg.out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Infers port usage, latency and throughput of instructions on a port-model machine"};
  app.require_subcommand(1);
  auto* analyze = app.add_subcommand("analyze", "characterize instructions and write a result document");
  auto* validate = app.add_subcommand("validate", "characterize instructions and compare with the machine's ground truth");
  auto* list = app.add_subcommand("list", "print the instruction catalog");

  for (auto* sub : {analyze, validate, list}) {
    sub->add_option("--catalog", cfg.catalog, "instruction catalog (JSON or XML)")->envname("UOPCHAR_CATALOG");
    sub->add_option("--out", cfg.out, "output path, '-' for stdout")->envname("UOPCHAR_OUT");
  }
  for (auto* sub : {analyze, validate}) {
    sub->add_option("--machine", cfg.machine, "machine description (JSON)")->envname("UOPCHAR_MACHINE");
    sub->add_option("--filter", cfg.filter, "instruction ids, mnemonics or id globs")
        ->delimiter(',')
        ->envname("UOPCHAR_FILTER");
    sub->add_option("--jobs", cfg.jobs, "worker threads")->envname("UOPCHAR_JOBS")->check(CLI::PositiveNumber);
    sub->add_option("--n-small", cfg.measurement.n_small, "copies in the small run")->envname("UOPCHAR_N_SMALL");
    sub->add_option("--n-large", cfg.measurement.n_large, "copies in the large run")->envname("UOPCHAR_N_LARGE");
    sub->add_option("--reps", cfg.measurement.repetitions, "measurement repetitions")
        ->envname("UOPCHAR_REPS")
        ->check(CLI::PositiveNumber);
    sub->add_option("--aggregator", cfg.aggregator, "mean or median")
        ->envname("UOPCHAR_AGGREGATOR")
        ->check(CLI::IsMember({"mean", "median"}));
  }
  analyze->add_option("--format", cfg.format, "xml or json")
      ->envname("UOPCHAR_FORMAT")
      ->check(CLI::IsMember({"xml", "json"}));
  validate->add_option("--seed", cfg.seed, "extend the machine with seeded random instructions and validate those")
      ->envname("UOPCHAR_SEED");
  validate->add_option("--random-count", cfg.random_count, "number of random instructions")
      ->envname("UOPCHAR_RANDOM_COUNT")
      ->check(CLI::NonNegativeNumber);
  list->add_flag("--json", cfg.list_json, "print a JSON array");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (validate->parsed()) return cmd_validate(cfg);
    return cmd_list(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInconsistent;
  }
}
