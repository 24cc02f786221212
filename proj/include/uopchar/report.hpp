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
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "uopchar/catalog.hpp"
#include "uopchar/errors.hpp"
#include "uopchar/inference.hpp"

namespace uopchar {

enum class ReportFormat { kXml, kJson };

inline ReportFormat parse_report_format(std::string_view s) {
  if (s == "xml") return ReportFormat::kXml;
  if (s == "json") return ReportFormat::kJson;
  throw ParseError("unknown report format '" + std::string(s) + "'");
}

namespace report_detail {

using json = nlohmann::json;
using ptree = boost::property_tree::ptree;

inline constexpr const char* kFormatName = "uopchar-results";
inline constexpr const char* kFormatVersion = "1";

// JSON array key <-> XML element name, for arrays and nested objects alike.
inline const std::vector<std::pair<std::string, std::string>>& element_names() {
  static const std::vector<std::pair<std::string, std::string>> names = {
      {"results", "instruction"},     {"latencies", "latency"},       {"unchainable", "unchainable"},
      {"value-classes", "value-class"}, {"provenance", "provenance"}, {"throughput", "throughput"},
      {"zero-idiom", "zero-idiom"}};
  return names;
}

inline std::string element_for(const std::string& key) {
  for (const auto& [k, e] : element_names())
    if (k == key) return e;
  throw ValidationError("no XML element for key '" + key + "'");
}

inline std::string opt_rational(const std::optional<Rational>& r) { return r ? to_string(*r) : ""; }

inline json to_json(const CharacterizationResult& r) {
  json j;
  j["id"] = r.id;
  j["provenance"] = {{"backend", r.provenance.backend},
                     {"machine-hash", r.provenance.machine_hash},
                     {"config", r.provenance.config}};
  if (r.port_usage) j["port-usage"] = format_port_usage(*r.port_usage);
  j["block-rep"] = r.block_rep;
  if (!r.error.empty()) j["error"] = r.error;
  j["latencies"] = json::array();
  for (const auto& e : r.latency.entries) {
    json l = {{"src", e.src},         {"dst", e.dst},     {"kind", std::string(to_string(e.kind))},
              {"cycles", to_string(e.cycles)}, {"variant", e.variant}, {"chain", e.chain}};
    if (!e.value_class.empty()) l["value-class"] = e.value_class;
    if (e.chain_minimum) l["chain-minimum"] = to_string(*e.chain_minimum);
    j["latencies"].push_back(l);
  }
  j["unchainable"] = json::array();
  for (const auto& u : r.latency.unchainable)
    j["unchainable"].push_back({{"src", u.src}, {"dst", u.dst}, {"reason", u.reason}});
  json t = {{"measured", to_string(r.throughput.measured)},
            {"measured-variant", r.throughput.measured_variant},
            {"computed", r.throughput.computed ? to_string(*r.throughput.computed) : "not-computable"}};
  t["value-classes"] = json::array();
  for (const auto& [cls, ct] : r.throughput.by_class)
    t["value-classes"].push_back({{"name", cls}, {"cycles", to_string(ct.cycles)}, {"variant", ct.variant}});
  j["throughput"] = t;
  json z = {{"value", r.zero_idiom.zero_idiom},
            {"chain-cycles", to_string(r.zero_idiom.chain_cycles)},
            {"independent-cycles", to_string(r.zero_idiom.independent_cycles)}};
  if (r.zero_idiom.different_register_latency)
    z["different-register-latency"] = to_string(*r.zero_idiom.different_register_latency);
  j["zero-idiom"] = z;
  return j;
}

// Field access tolerant of the XML reader, which yields strings for every
// scalar and one-element arrays for nested objects.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& why) const { throw ParseError(path_ + ": " + why); }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string str(const std::string& key) const {
    if (!has(key)) fail("missing field '" + key + "'");
    const auto& v = j_.at(key);
    if (!v.is_string()) fail("field '" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
  }
  int integer(const std::string& key) const {
    if (!has(key)) fail("missing field '" + key + "'");
    const auto& v = j_.at(key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      std::size_t used = 0;
      try {
        int n = std::stoi(s, &used);
        if (used == s.size()) return n;
      } catch (const std::exception&) {
      }
    }
    fail("field '" + key + "' must be an integer");
  }
  bool boolean(const std::string& key) const {
    if (!has(key)) fail("missing field '" + key + "'");
    const auto& v = j_.at(key);
    if (v.is_boolean()) return v.get<bool>();
    if (v == "true") return true;
    if (v == "false") return false;
    fail("field '" + key + "' must be true or false");
  }
  Rational rational(const std::string& key) const {
    try {
      return parse_rational(str(key));
    } catch (const ParseError& e) {
      fail(e.what());
    }
  }
  std::optional<Rational> opt_rational(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return rational(key);
  }
  Reader object(const std::string& key) const {
    if (!has(key)) fail("missing element '" + key + "'");
    const auto& v = j_.at(key);
    if (v.is_array()) {
      if (v.size() != 1) fail("expected exactly one '" + key + "'");
      return Reader(v[0], path_ + "/" + key);
    }
    return Reader(v, path_ + "/" + key);
  }
  std::vector<Reader> array(const std::string& key) const {
    std::vector<Reader> out;
    if (!has(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) fail("field '" + key + "' must be an array");
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(v[i], path_ + "/" + key + "[" + std::to_string(i) + "]");
    return out;
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
};

inline CharacterizationResult from_json(const Reader& in) {
  CharacterizationResult r;
  r.id = in.str("id");
  auto prov = in.object("provenance");
  r.provenance = {prov.str("backend"), prov.str("machine-hash"), prov.str("config")};
  if (r.provenance.backend.empty() || r.provenance.machine_hash.empty() || r.provenance.config.empty())
    prov.fail("provenance fields must be non-empty");
  if (in.has("port-usage")) {
    try {
      r.port_usage = parse_port_usage(in.str("port-usage"));
    } catch (const ParseError& e) {
      in.fail(e.what());
    }
  }
  r.block_rep = in.integer("block-rep");
  r.error = in.str_or("error", "");
  for (const auto& l : in.array("latencies")) {
    LatencyEntry e;
    e.src = l.integer("src");
    e.dst = l.integer("dst");
    try {
      e.kind = parse_latency_kind(l.str("kind"));
    } catch (const ParseError& err) {
      l.fail(err.what());
    }
    e.cycles = l.rational("cycles");
    e.variant = l.str("variant");
    e.value_class = l.str_or("value-class", "");
    e.chain = l.str("chain");
    e.chain_minimum = l.opt_rational("chain-minimum");
    r.latency.entries.push_back(e);
  }
  for (const auto& u : in.array("unchainable"))
    r.latency.unchainable.push_back({u.integer("src"), u.integer("dst"), u.str("reason")});
  auto t = in.object("throughput");
  r.throughput.measured = t.rational("measured");
  r.throughput.measured_variant = t.str("measured-variant");
  if (t.str("computed") != "not-computable") r.throughput.computed = t.rational("computed");
  for (const auto& v : t.array("value-classes"))
    r.throughput.by_class[v.str("name")] = {v.rational("cycles"), v.str("variant")};
  auto z = in.object("zero-idiom");
  r.zero_idiom.zero_idiom = z.boolean("value");
  r.zero_idiom.chain_cycles = z.rational("chain-cycles");
  r.zero_idiom.independent_cycles = z.rational("independent-cycles");
  r.zero_idiom.different_register_latency = z.opt_rational("different-register-latency");
  return r;
}

inline std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

inline ptree to_ptree(const json& obj) {
  ptree node;
  for (const auto& [key, v] : obj.items()) {
    if (v.is_array()) {
      for (const auto& item : v) node.add_child(element_for(key), to_ptree(item));
    } else if (v.is_object()) {
      node.add_child(element_for(key), to_ptree(v));
    } else {
      node.put("<xmlattr>." + key, scalar_text(v));
    }
  }
  return node;
}

inline std::vector<CharacterizationResult> sorted(std::vector<CharacterizationResult> results) {
  std::stable_sort(results.begin(), results.end(),
                   [](const CharacterizationResult& a, const CharacterizationResult& b) { return a.id < b.id; });
  return results;
}

}  // namespace report_detail

// Results are written sorted by instruction id.
inline std::string render_results(const std::vector<CharacterizationResult>& results, ReportFormat format) {
  using report_detail::json;
  json doc = {{"format", report_detail::kFormatName}, {"version", report_detail::kFormatVersion}};
  doc["results"] = json::array();
  for (const auto& r : report_detail::sorted(results)) doc["results"].push_back(report_detail::to_json(r));
  if (format == ReportFormat::kJson) return doc.dump(2) + "\n";
  boost::property_tree::ptree root;
  root.add_child("results", report_detail::to_ptree(doc));
  std::ostringstream out;
  boost::property_tree::write_xml(out, root, boost::property_tree::xml_writer_make_settings<std::string>(' ', 1));
  return out.str();
}

inline std::vector<CharacterizationResult> parse_results(const std::string& text, const std::string& path) {
  std::map<std::string, std::string> child_keys;
  for (const auto& [key, element] : report_detail::element_names()) child_keys[element] = key;
  const auto doc = detail::parse_document(text, "results", child_keys, path);
  report_detail::Reader top(doc, path);
  if (top.str("format") != report_detail::kFormatName) top.fail("not a results document");
  if (top.str("version") != report_detail::kFormatVersion) top.fail("unsupported version " + top.str("version"));
  std::vector<CharacterizationResult> out;
  for (const auto& r : top.array("results")) out.push_back(report_detail::from_json(r));
  return out;
}

inline void write_results(const std::vector<CharacterizationResult>& results, ReportFormat format,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << render_results(results, format);
  if (!out.flush()) throw Error("failed writing '" + path + "'");
}

inline std::vector<CharacterizationResult> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_results(buf.str(), path);
}

}  // namespace uopchar
