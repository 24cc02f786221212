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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "uopchar/catalog.hpp"

namespace uopchar {

// Families never handed out: two reserved for the harness, plus the stack pointer.
inline const std::set<std::string>& reserved_families() {
  static const std::set<std::string> kReserved = {"R14", "R15", "RSP"};
  return kReserved;
}

// Shared-source position reserved for the scratch register of flags breakers.
inline constexpr int kScratchSlot = 1000;

// Deterministic register allocation for one kernel. Families are handed out in
// catalog order; when a class runs dry, allocation rotates over the class
// (oldest hand-out first) and the pool records register pressure.
class RegisterPool {
 public:
  explicit RegisterPool(const Catalog& catalog) : catalog_(catalog) {}

  // Keeps `family` out of all future hand-outs.
  void exclude(const std::string& family) { excluded_.insert(family); }

  // A family of `cls` with a register of `width`, not handed out before if possible.
  std::string take(const std::string& cls, int width) {
    std::vector<std::string> eligible;
    for (const auto& f : catalog_.families(cls))
      if (!excluded_.count(f) && !reserved_families().count(f) && catalog_.register_in_family(cls, f, width))
        eligible.push_back(f);
    if (eligible.empty())
      throw ValidationError("no allocatable " + cls + " register of width " + std::to_string(width));
    for (const auto& f : eligible) {
      if (!handed_.count(f)) {
        handed_[f] = counter_++;
        return f;
      }
    }
    pressure_ = true;
    auto oldest = eligible.front();
    for (const auto& f : eligible)
      if (handed_[f] < handed_[oldest]) oldest = f;
    handed_[oldest] = counter_++;
    return oldest;
  }

  // A fresh family of `cls`, excluded from later hand-outs, that kernels only
  // read. Distinct `position`s give distinct families.
  std::string shared_source(const std::string& cls, int width, int position = 0) {
    auto key = cls + "/" + std::to_string(width) + "/" + std::to_string(position);
    if (auto it = sources_.find(key); it != sources_.end()) return it->second;
    auto f = take(cls, width);
    exclude(f);
    sources_[key] = f;
    return f;
  }

  // The 64-bit GP register used as base for all memory operands.
  std::string memory_base() {
    if (base_.empty()) {
      auto f = take("gp", 64);
      exclude(f);
      base_ = *catalog_.register_in_family("gp", f, 64);
    }
    return base_;
  }

  std::string name(const std::string& cls, const std::string& family, int width) const {
    auto n = catalog_.register_in_family(cls, family, width);
    if (!n) throw ValidationError("register family " + family + " has no " + std::to_string(width) + "-bit register");
    return *n;
  }

  int fresh_slot() { return next_slot_++; }
  bool pressure() const { return pressure_; }

 private:
  const Catalog& catalog_;
  std::set<std::string> excluded_;
  std::map<std::string, long> handed_;
  std::map<std::string, std::string> sources_;
  std::string base_;
  long counter_ = 0;
  int next_slot_ = 0;
  bool pressure_ = false;
};

}  // namespace uopchar
