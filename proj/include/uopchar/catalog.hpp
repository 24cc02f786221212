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
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"
#include "uopchar/errors.hpp"

namespace uopchar {

enum class OperandKind { kGpRegister, kSimdRegister, kMmxRegister, kMemory, kImmediate, kFlags, kAgenBase };
enum class Access { kRead, kWrite, kReadWrite };
enum class IsaClass { kGP, kSSE, kAVX };

enum class Attribute {
  kUsesDivider,
  kSerializing,
  kSystem,
  kControlFlowOnRegister,
  kPauseLike,
  kZeroLatencyCapable,
  kZeroIdiom,
  kMoveEliminationCapable,
};

inline const std::vector<std::pair<OperandKind, std::string_view>>& operand_kind_names() {
  static const std::vector<std::pair<OperandKind, std::string_view>> names = {
      {OperandKind::kGpRegister, "gp-register"},   {OperandKind::kSimdRegister, "simd-register"},
      {OperandKind::kMmxRegister, "mmx-register"}, {OperandKind::kMemory, "memory"},
      {OperandKind::kImmediate, "immediate"},      {OperandKind::kFlags, "flags"},
      {OperandKind::kAgenBase, "agen-base"}};
  return names;
}

inline const std::vector<std::pair<Attribute, std::string_view>>& attribute_names() {
  static const std::vector<std::pair<Attribute, std::string_view>> names = {
      {Attribute::kUsesDivider, "uses-divider"},
      {Attribute::kSerializing, "serializing"},
      {Attribute::kSystem, "system"},
      {Attribute::kControlFlowOnRegister, "control-flow-on-register"},
      {Attribute::kPauseLike, "pause-like"},
      {Attribute::kZeroLatencyCapable, "zero-latency-capable"},
      {Attribute::kZeroIdiom, "zero-idiom"},
      {Attribute::kMoveEliminationCapable, "move-elimination-capable"}};
  return names;
}

inline const std::vector<std::string>& flag_names() {
  static const std::vector<std::string> names = {"CF", "PF", "AF", "ZF", "SF", "OF"};
  return names;
}

template <typename E>
std::string_view enum_name(E value, const std::vector<std::pair<E, std::string_view>>& table) {
  for (const auto& [v, n] : table)
    if (v == value) return n;
  return "?";
}

inline std::string_view to_string(OperandKind k) { return enum_name(k, operand_kind_names()); }
inline std::string_view to_string(Attribute a) { return enum_name(a, attribute_names()); }
inline std::string_view to_string(Access a) {
  switch (a) {
    case Access::kRead: return "read";
    case Access::kWrite: return "write";
    case Access::kReadWrite: return "read-write";
  }
  return "?";
}
inline std::string_view to_string(IsaClass c) {
  switch (c) {
    case IsaClass::kGP: return "GP";
    case IsaClass::kSSE: return "SSE";
    case IsaClass::kAVX: return "AVX";
  }
  return "?";
}

inline bool is_register_kind(OperandKind k) {
  return k == OperandKind::kGpRegister || k == OperandKind::kSimdRegister ||
         k == OperandKind::kMmxRegister || k == OperandKind::kAgenBase;
}

// Register class that backs a register operand kind.
inline std::string register_class_of(OperandKind k) {
  switch (k) {
    case OperandKind::kGpRegister:
    case OperandKind::kAgenBase:
    case OperandKind::kMemory:  // base register
      return "gp";
    case OperandKind::kSimdRegister: return "simd";
    case OperandKind::kMmxRegister: return "mmx";
    default: return "";
  }
}

struct OperandSpec {
  int index = 0;
  OperandKind kind = OperandKind::kGpRegister;
  int width = 0;
  Access access = Access::kRead;
  bool implicit = false;
  std::optional<std::string> fixed_register;
  std::vector<std::string> flag_set;

  bool reads() const { return access != Access::kWrite; }
  bool writes() const { return access != Access::kRead; }
  bool is_register() const { return is_register_kind(kind); }
  friend bool operator==(const OperandSpec&, const OperandSpec&) = default;
};

struct InstructionDesc {
  std::string id;
  std::string mnemonic;
  IsaClass isa_class = IsaClass::kGP;
  std::vector<OperandSpec> operands;
  std::set<Attribute> attributes;

  bool has(Attribute a) const { return attributes.count(a) != 0; }
  const OperandSpec* memory_operand() const {
    for (const auto& op : operands)
      if (op.kind == OperandKind::kMemory) return &op;
    return nullptr;
  }
  const OperandSpec* flags_operand() const {
    for (const auto& op : operands)
      if (op.kind == OperandKind::kFlags) return &op;
    return nullptr;
  }
  friend bool operator==(const InstructionDesc&, const InstructionDesc&) = default;
};

struct RegisterInfo {
  std::string name;
  int width = 0;
  std::string family;  // architectural register the name aliases (RAX for EAX/AX/AL)
  friend bool operator==(const RegisterInfo&, const RegisterInfo&) = default;
};

class Catalog {
 public:
  std::vector<InstructionDesc> instructions;
  std::map<std::string, std::vector<RegisterInfo>> register_classes;

  const InstructionDesc* find(std::string_view id) const {
    for (const auto& i : instructions)
      if (i.id == id) return &i;
    return nullptr;
  }
  const InstructionDesc& at(std::string_view id) const {
    if (auto* i = find(id)) return *i;
    throw UnknownInstructionError("unknown instruction id '" + std::string(id) + "'");
  }

  // Returns the class name and info of a register by name, or nullopt.
  std::optional<std::pair<std::string, RegisterInfo>> lookup_register(std::string_view name) const {
    for (const auto& [cls, regs] : register_classes)
      for (const auto& r : regs)
        if (r.name == name) return std::make_pair(cls, r);
    return std::nullopt;
  }

  // Distinct families of a class in declaration order.
  std::vector<std::string> families(const std::string& cls) const {
    std::vector<std::string> out;
    auto it = register_classes.find(cls);
    if (it == register_classes.end()) return out;
    for (const auto& r : it->second)
      if (std::find(out.begin(), out.end(), r.family) == out.end()) out.push_back(r.family);
    return out;
  }

  // Name of the register of `family` with the given width, if any.
  std::optional<std::string> register_in_family(const std::string& cls, const std::string& family,
                                                int width) const {
    auto it = register_classes.find(cls);
    if (it == register_classes.end()) return std::nullopt;
    for (const auto& r : it->second)
      if (r.family == family && r.width == width) return r.name;
    return std::nullopt;
  }

  std::string family_of(std::string_view name) const {
    auto r = lookup_register(name);
    return r ? r->second.family : std::string(name);
  }

  friend bool operator==(const Catalog&, const Catalog&) = default;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ParseError(where + ": unknown field '" + it.key() + "'");
  }
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

template <typename E>
E parse_enum(const json& v, const std::vector<std::pair<E, std::string_view>>& table,
             const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  auto s = v.get<std::string>();
  for (const auto& [e, n] : table)
    if (n == s) return e;
  throw ParseError(where + ": invalid value '" + s + "'");
}

inline int get_int(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    try {
      std::size_t pos = 0;
      int x = std::stoi(v.get<std::string>(), &pos);
      if (pos == v.get<std::string>().size()) return x;
    } catch (const std::exception&) {
    }
  }
  throw ParseError(where + ": expected an integer");
}

inline bool get_bool(const json& v, const std::string& where) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string() && (v == "true" || v == "false")) return v == "true";
  throw ParseError(where + ": expected a boolean");
}

inline std::vector<std::string> get_string_list(const json& v, const std::string& where) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_string()) throw ParseError(where + ": expected strings");
      out.push_back(e.get<std::string>());
    }
  } else if (v.is_string()) {  // XML form: space-separated
    std::istringstream in(v.get<std::string>());
    std::string tok;
    while (in >> tok) out.push_back(tok);
  } else {
    throw ParseError(where + ": expected a list");
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline bool looks_like_xml(std::string_view text) {
  auto pos = text.find_first_not_of(" \t\r\n");
  return pos != std::string_view::npos && text[pos] == '<';
}

// Generic XML -> JSON conversion: attributes become fields, child elements
// become arrays keyed by `child_keys` (element name -> JSON key).
inline json xml_element_to_json(const boost::property_tree::ptree& node,
                                const std::map<std::string, std::string>& child_keys,
                                const std::string& where) {
  json out = json::object();
  for (const auto& [name, child] : node) {
    if (name == "<xmlattr>") {
      for (const auto& [attr, value] : child) out[attr] = value.data();
    } else if (name == "<xmlcomment>") {
      continue;
    } else {
      auto it = child_keys.find(name);
      if (it == child_keys.end()) throw ParseError(where + ": unknown element <" + name + ">");
      out[it->second].push_back(xml_element_to_json(child, child_keys, where + "/" + name));
    }
  }
  return out;
}

inline json parse_document(const std::string& text, const std::string& root,
                           const std::map<std::string, std::string>& child_keys,
                           const std::string& path) {
  if (looks_like_xml(text)) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
      boost::property_tree::read_xml(in, tree);
    } catch (const std::exception& e) {
      throw ParseError(path + ": " + e.what());
    }
    auto it = tree.find(root);
    if (it == tree.not_found()) throw ParseError(path + ": missing root element <" + root + ">");
    return xml_element_to_json(it->second, child_keys, path + ":" + root);
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace detail

inline void validate_catalog(const Catalog& catalog) {
  std::set<std::string> ids;
  for (const auto& instr : catalog.instructions) {
    const std::string where = "instruction '" + instr.id + "'";
    if (!ids.insert(instr.id).second) throw ValidationError("duplicate instruction id '" + instr.id + "'");
    int memory_operands = 0;
    bool seen_implicit = false;
    for (std::size_t i = 0; i < instr.operands.size(); ++i) {
      const auto& op = instr.operands[i];
      const std::string owhere = where + " operand " + std::to_string(i);
      if (op.index != static_cast<int>(i)) throw ValidationError(owhere + ": index must equal position");
      if (op.implicit) seen_implicit = true;
      else if (seen_implicit) throw ValidationError(owhere + ": explicit operand after implicit ones");
      if (op.kind == OperandKind::kMemory) ++memory_operands;
      static const std::set<int> reg_widths = {8, 16, 32, 64, 128, 256, 512};
      static const std::set<int> imm_widths = {8, 16, 32, 64};
      if (op.kind == OperandKind::kImmediate) {
        if (!imm_widths.count(op.width)) throw ValidationError(owhere + ": illegal immediate width " + std::to_string(op.width));
        if (op.access != Access::kRead) throw ValidationError(owhere + ": immediates are read-only");
      } else if (op.kind != OperandKind::kFlags) {
        if (!reg_widths.count(op.width)) throw ValidationError(owhere + ": illegal width " + std::to_string(op.width));
      }
      if (op.implicit && !op.fixed_register && op.kind != OperandKind::kFlags)
        throw ValidationError(owhere + ": implicit operand needs a fixed register");
      if (op.kind == OperandKind::kFlags) {
        if (op.flag_set.empty()) throw ValidationError(owhere + ": empty flag set");
        for (const auto& f : op.flag_set)
          if (std::find(flag_names().begin(), flag_names().end(), f) == flag_names().end())
            throw ValidationError(owhere + ": unknown flag '" + f + "'");
      } else if (!op.flag_set.empty()) {
        throw ValidationError(owhere + ": flag-set only allowed on flags operands");
      }
      if (op.fixed_register) {
        auto reg = catalog.lookup_register(*op.fixed_register);
        if (!reg) throw ValidationError(owhere + ": unresolvable register '" + *op.fixed_register + "'");
        if (reg->first != register_class_of(op.kind) || reg->second.width != op.width)
          throw ValidationError(owhere + ": register '" + *op.fixed_register + "' does not match kind/width");
      } else if (op.is_register()) {
        const auto cls = register_class_of(op.kind);
        auto it = catalog.register_classes.find(cls);
        bool ok = it != catalog.register_classes.end() &&
                  std::any_of(it->second.begin(), it->second.end(),
                              [&](const RegisterInfo& r) { return r.width == op.width; });
        if (!ok) throw ValidationError(owhere + ": no " + cls + " register of width " + std::to_string(op.width));
      }
    }
    if (memory_operands > 1) throw ValidationError(where + ": more than one memory operand");
    if (instr.has(Attribute::kZeroIdiom)) {
      std::map<OperandKind, int> per_kind;
      for (const auto& op : instr.operands)
        if (op.is_register()) ++per_kind[op.kind];
      bool ok = std::any_of(per_kind.begin(), per_kind.end(), [](const auto& kv) { return kv.second >= 2; });
      if (!ok) throw ValidationError(where + ": zero-idiom needs two register operands of the same class");
    }
  }
}

inline Catalog catalog_from_json(const nlohmann::json& doc, const std::string& source = "catalog") {
  using namespace detail;
  Catalog catalog;
  reject_unknown(doc, {"register-classes", "instructions"}, source);
  const auto& classes = require(doc, "register-classes", source);
  if (classes.is_object()) {
    for (auto it = classes.begin(); it != classes.end(); ++it) {
      const std::string where = source + ": register class '" + it.key() + "'";
      if (!it.value().is_array()) throw ParseError(where + ": expected a list");
      auto& regs = catalog.register_classes[it.key()];
      for (const auto& r : it.value()) {
        reject_unknown(r, {"name", "width", "family"}, where);
        RegisterInfo info;
        info.name = require(r, "name", where).get<std::string>();
        info.width = get_int(require(r, "width", where), where);
        info.family = r.contains("family") ? r["family"].get<std::string>() : info.name;
        regs.push_back(info);
      }
    }
  } else if (classes.is_array()) {  // XML form: [{name, register: [...]}]
    for (const auto& c : classes) {
      reject_unknown(c, {"name", "register"}, source + ": register-class");
      const std::string name = require(c, "name", source).get<std::string>();
      auto& regs = catalog.register_classes[name];
      if (!c.contains("register")) continue;
      for (const auto& r : c["register"]) {
        reject_unknown(r, {"name", "width", "family"}, source + ": register-class " + name);
        RegisterInfo info;
        info.name = require(r, "name", name).get<std::string>();
        info.width = get_int(require(r, "width", name), name);
        info.family = r.contains("family") ? r["family"].get<std::string>() : info.name;
        regs.push_back(info);
      }
    }
  } else {
    throw ParseError(source + ": register-classes must be an object");
  }

  const auto& instrs = require(doc, "instructions", source);
  if (!instrs.is_array()) throw ParseError(source + ": instructions must be a list");
  for (const auto& j : instrs) {
    std::string where = source + ": instruction";
    if (j.is_object() && j.contains("id") && j["id"].is_string()) where += " '" + j["id"].get<std::string>() + "'";
    reject_unknown(j, {"id", "mnemonic", "isa-class", "operands", "attributes"}, where);
    InstructionDesc instr;
    instr.id = require(j, "id", where).get<std::string>();
    instr.mnemonic = require(j, "mnemonic", where).get<std::string>();
    instr.isa_class = parse_enum(require(j, "isa-class", where),
                                 std::vector<std::pair<IsaClass, std::string_view>>{
                                     {IsaClass::kGP, "GP"}, {IsaClass::kSSE, "SSE"}, {IsaClass::kAVX, "AVX"}},
                                 where + ": isa-class");
    if (j.contains("attributes"))
      for (const auto& a : get_string_list(j["attributes"], where + ": attributes"))
        instr.attributes.insert(parse_enum(nlohmann::json(a), attribute_names(), where + ": attribute"));
    if (j.contains("operands")) {
      for (const auto& o : j["operands"]) {
        reject_unknown(o, {"index", "kind", "width", "access", "implicit", "fixed-register", "flag-set"},
                       where + ": operand");
        OperandSpec op;
        op.index = get_int(require(o, "index", where), where + ": index");
        op.kind = parse_enum(require(o, "kind", where), operand_kind_names(), where + ": kind");
        op.width = o.contains("width") ? get_int(o["width"], where + ": width") : 0;
        op.access = parse_enum(require(o, "access", where),
                               std::vector<std::pair<Access, std::string_view>>{
                                   {Access::kRead, "read"}, {Access::kWrite, "write"}, {Access::kReadWrite, "read-write"}},
                               where + ": access");
        op.implicit = o.contains("implicit") ? get_bool(o["implicit"], where + ": implicit") : false;
        if (o.contains("fixed-register")) op.fixed_register = o["fixed-register"].get<std::string>();
        if (o.contains("flag-set")) op.flag_set = get_string_list(o["flag-set"], where + ": flag-set");
        instr.operands.push_back(op);
      }
    }
    catalog.instructions.push_back(std::move(instr));
  }
  validate_catalog(catalog);
  return catalog;
}

inline Catalog parse_catalog(const std::string& text, const std::string& source = "catalog") {
  auto doc = detail::parse_document(
      text, "catalog",
      {{"register-class", "register-classes"}, {"register", "register"}, {"instruction", "instructions"},
       {"operand", "operands"}},
      source);
  return catalog_from_json(doc, source);
}

// Loads a JSON or XML catalog (format sniffed from the first character).
inline Catalog load_catalog(const std::string& path) {
  return parse_catalog(detail::read_file(path), path);
}

enum class BlockingIsa { kSSE, kAVX };

inline std::vector<InstructionDesc> blocking_candidates(const Catalog& catalog, BlockingIsa isa) {
  static const Attribute excluded[] = {Attribute::kSystem, Attribute::kSerializing, Attribute::kZeroLatencyCapable,
                                       Attribute::kPauseLike, Attribute::kControlFlowOnRegister};
  std::vector<InstructionDesc> out;
  for (const auto& instr : catalog.instructions) {
    if (std::any_of(std::begin(excluded), std::end(excluded), [&](Attribute a) { return instr.has(a); })) continue;
    if (isa == BlockingIsa::kSSE && instr.isa_class == IsaClass::kAVX) continue;
    if (isa == BlockingIsa::kAVX && instr.isa_class == IsaClass::kSSE) continue;
    out.push_back(instr);
  }
  return out;
}

inline BlockingIsa blocking_isa_for(const InstructionDesc& instr) {
  return instr.isa_class == IsaClass::kAVX ? BlockingIsa::kAVX : BlockingIsa::kSSE;
}

}  // namespace uopchar
