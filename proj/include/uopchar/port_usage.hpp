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
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "uopchar/errors.hpp"

namespace uopchar {

inline constexpr int kMaxPorts = 16;

// Set of execution ports, stored as a bit mask.
class PortSet {
 public:
  constexpr PortSet() = default;
  constexpr explicit PortSet(std::uint32_t mask) : mask_(mask) {}
  PortSet(std::initializer_list<int> ports) {
    for (int p : ports) insert(p);
  }
  template <typename Range>
  static PortSet of(const Range& ports) {
    PortSet s;
    for (int p : ports) s.insert(p);
    return s;
  }

  void insert(int port) { mask_ |= (1u << port); }
  bool contains(int port) const { return (mask_ >> port) & 1u; }
  bool empty() const { return mask_ == 0; }
  int size() const { return std::popcount(mask_); }
  std::uint32_t mask() const { return mask_; }

  bool subset_of(PortSet other) const { return (mask_ & ~other.mask_) == 0; }
  bool strict_subset_of(PortSet other) const { return subset_of(other) && mask_ != other.mask_; }
  bool intersects(PortSet other) const { return (mask_ & other.mask_) != 0; }
  PortSet operator|(PortSet o) const { return PortSet(mask_ | o.mask_); }
  PortSet operator&(PortSet o) const { return PortSet(mask_ & o.mask_); }

  std::vector<int> ports() const {
    std::vector<int> out;
    for (int p = 0; p < kMaxPorts; ++p)
      if (contains(p)) out.push_back(p);
    return out;
  }

  friend bool operator==(PortSet a, PortSet b) { return a.mask_ == b.mask_; }
  // Lexicographic on the ascending port list, so {0,1,5,6} < {0,6} < {2,3}.
  friend bool operator<(PortSet a, PortSet b) {
    auto pa = a.ports(), pb = b.ports();
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
  }

 private:
  std::uint32_t mask_ = 0;
};

inline char port_char(int port) {
  return port < 10 ? static_cast<char>('0' + port) : static_cast<char>('A' + port - 10);
}

inline int port_from_char(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c < 'A' + (kMaxPorts - 10)) return c - 'A' + 10;
  return -1;
}

inline std::string port_digits(PortSet s) {
  std::string out;
  for (int p : s.ports()) out.push_back(port_char(p));
  return out;
}

// pu: port combination -> number of uops whose port set is exactly that combination.
struct PortUsage {
  struct Entry {
    PortSet ports;
    int count = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };
  std::vector<Entry> entries;

  void add(PortSet pc, int count) {
    for (auto& e : entries) {
      if (e.ports == pc) {
        e.count += count;
        return;
      }
    }
    entries.push_back({pc, count});
  }
  int total() const {
    int t = 0;
    for (const auto& e : entries) t += e.count;
    return t;
  }
  void canonicalize() {
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.ports < b.ports; });
  }
  PortUsage canonical() const {
    PortUsage copy = *this;
    copy.canonicalize();
    return copy;
  }
  friend bool operator==(const PortUsage& a, const PortUsage& b) {
    return a.canonical().entries == b.canonical().entries;
  }
};

// "3*p015+1*p23"; the empty usage renders as "".
inline std::string format_port_usage(const PortUsage& pu) {
  std::string out;
  for (const auto& e : pu.canonical().entries) {
    if (!out.empty()) out += "+";
    out += std::to_string(e.count) + "*p" + port_digits(e.ports);
  }
  return out;
}

inline PortUsage parse_port_usage(std::string_view text) {
  PortUsage pu;
  if (text.empty()) return pu;
  auto fail = [&](const std::string& why) {
    throw ParseError("malformed port usage '" + std::string(text) + "': " + why);
  };
  std::size_t pos = 0;
  while (true) {
    std::size_t start = pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == start) fail("expected count");
    if (text[start] == '0') fail("count must be positive without leading zeros");
    int count = std::stoi(std::string(text.substr(start, pos - start)));
    if (text.substr(pos, 2) != "*p") fail("expected '*p'");
    pos += 2;
    PortSet pc;
    int last = -1;
    while (pos < text.size() && text[pos] != '+') {
      int p = port_from_char(text[pos]);
      if (p < 0) fail(std::string("invalid port '") + text[pos] + "'");
      if (p <= last) fail("ports must be strictly increasing");
      pc.insert(p);
      last = p;
      ++pos;
    }
    if (pc.empty()) fail("empty port combination");
    for (const auto& e : pu.entries)
      if (e.ports == pc) fail("duplicate combination");
    pu.entries.push_back({pc, count});
    if (pos == text.size()) break;
    ++pos;  // '+'
    if (pos == text.size()) fail("trailing '+'");
  }
  return pu;
}

}  // namespace uopchar
