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

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/rational.hpp"

namespace uopchar {

struct RegisterBinding {
  std::string name;
  friend bool operator==(const RegisterBinding&, const RegisterBinding&) = default;
};

// Memory is addressed through a single base register; `slot` identifies the
// addressed location, distinct slots are distinct addresses.
struct MemoryBinding {
  std::string base;
  int slot = 0;
  friend bool operator==(const MemoryBinding&, const MemoryBinding&) = default;
};

struct ImmediateBinding {
  std::int64_t value = 0;
  friend bool operator==(const ImmediateBinding&, const ImmediateBinding&) = default;
};

struct FlagsBinding {
  friend bool operator==(const FlagsBinding&, const FlagsBinding&) = default;
};

using Binding = std::variant<std::monostate, RegisterBinding, MemoryBinding, ImmediateBinding, FlagsBinding>;

struct InstructionInstance {
  std::string id;
  std::vector<Binding> bindings;  // indexed by operand index
  friend bool operator==(const InstructionInstance&, const InstructionInstance&) = default;
};

// A value-class tag placed on a register family or memory slot before the run.
struct InitEntry {
  std::string location;  // register name, or "slot:<n>"
  std::string value_class;
  friend bool operator==(const InitEntry&, const InitEntry&) = default;
};

struct ChainMeta {
  std::string instruction;  // instruction under test
  int occurrences = 1;      // instances of it per kernel body
  Rational subtract{0};     // chain latency to subtract per occurrence
  std::string description;
  friend bool operator==(const ChainMeta&, const ChainMeta&) = default;
};

struct Kernel {
  std::vector<InstructionInstance> instances;
  std::optional<ChainMeta> chain;
  std::vector<InitEntry> init;
  bool register_pressure = false;  // bindings had to reuse registers
  std::string label;

  friend bool operator==(const Kernel&, const Kernel&) = default;
};

inline std::string slot_location(int slot) { return "slot:" + std::to_string(slot); }

inline std::string format_operand(const Binding& b, const OperandSpec& op) {
  if (auto* r = std::get_if<RegisterBinding>(&b)) return r->name;
  if (auto* m = std::get_if<MemoryBinding>(&b)) {
    std::string size;
    switch (op.width) {
      case 8: size = "byte"; break;
      case 16: size = "word"; break;
      case 32: size = "dword"; break;
      case 64: size = "qword"; break;
      case 128: size = "xmmword"; break;
      case 256: size = "ymmword"; break;
      default: size = "zmmword"; break;
    }
    return size + " ptr [" + m->base + "+" + std::to_string(m->slot * 64) + "]";
  }
  if (auto* i = std::get_if<ImmediateBinding>(&b)) return std::to_string(i->value);
  return "";
}

// Assembler-like listing, Intel operand order, implicit operands omitted.
inline std::string format_instance(const Catalog& catalog, const InstructionInstance& inst) {
  const auto& desc = catalog.at(inst.id);
  std::string out = desc.mnemonic;
  bool first = true;
  for (const auto& op : desc.operands) {
    if (op.implicit) continue;
    const Binding& b = op.index < static_cast<int>(inst.bindings.size()) ? inst.bindings[op.index] : Binding{};
    out += first ? " " : ", ";
    out += format_operand(b, op);
    first = false;
  }
  return out;
}

inline std::string format_kernel(const Catalog& catalog, const Kernel& kernel) {
  std::ostringstream out;
  for (const auto& inst : kernel.instances) out << format_instance(catalog, inst) << "\n";
  return out.str();
}

// Checks binding kinds/widths and distinctness of initialized memory slots.
inline void validate_kernel(const Catalog& catalog, const Kernel& kernel) {
  for (std::size_t n = 0; n < kernel.instances.size(); ++n) {
    const auto& inst = kernel.instances[n];
    const auto& desc = catalog.at(inst.id);
    const std::string where = "kernel instance " + std::to_string(n) + " (" + inst.id + ")";
    if (inst.bindings.size() != desc.operands.size())
      throw ValidationError(where + ": expected " + std::to_string(desc.operands.size()) + " bindings");
    for (const auto& op : desc.operands) {
      const auto& b = inst.bindings[op.index];
      const std::string owhere = where + " operand " + std::to_string(op.index);
      switch (op.kind) {
        case OperandKind::kGpRegister:
        case OperandKind::kSimdRegister:
        case OperandKind::kMmxRegister:
        case OperandKind::kAgenBase: {
          auto* r = std::get_if<RegisterBinding>(&b);
          if (!r) throw ValidationError(owhere + ": unbound register operand");
          auto info = catalog.lookup_register(r->name);
          if (!info || info->first != register_class_of(op.kind) || info->second.width != op.width)
            throw ValidationError(owhere + ": register '" + r->name + "' does not match operand");
          if (op.fixed_register && *op.fixed_register != r->name)
            throw ValidationError(owhere + ": fixed register must be " + *op.fixed_register);
          break;
        }
        case OperandKind::kMemory: {
          auto* m = std::get_if<MemoryBinding>(&b);
          if (!m) throw ValidationError(owhere + ": unbound memory operand");
          auto info = catalog.lookup_register(m->base);
          if (!info || info->first != "gp" || info->second.width != 64)
            throw ValidationError(owhere + ": base '" + m->base + "' must be a 64-bit GP register");
          break;
        }
        case OperandKind::kImmediate:
          if (!std::holds_alternative<ImmediateBinding>(b)) throw ValidationError(owhere + ": unbound immediate");
          break;
        case OperandKind::kFlags:
          if (!std::holds_alternative<FlagsBinding>(b)) throw ValidationError(owhere + ": unbound flags operand");
          break;
      }
    }
  }
  std::set<std::string> locations;
  for (const auto& e : kernel.init)
    if (!locations.insert(e.location).second)
      throw ValidationError("kernel init lists '" + e.location + "' twice");
}

}  // namespace uopchar
