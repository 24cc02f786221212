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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uopchar/bench_gen.hpp"

namespace uopchar {

enum class LatencyKind { kExact, kUpperBound, kRoundTrip, kZeroIdiomFastPath };

inline std::string_view to_string(LatencyKind k) {
  switch (k) {
    case LatencyKind::kExact: return "exact";
    case LatencyKind::kUpperBound: return "upper-bound";
    case LatencyKind::kRoundTrip: return "round-trip";
    case LatencyKind::kZeroIdiomFastPath: return "zero-idiom-fast-path";
  }
  return "exact";
}

inline LatencyKind parse_latency_kind(std::string_view s) {
  for (auto k : {LatencyKind::kExact, LatencyKind::kUpperBound, LatencyKind::kRoundTrip,
                 LatencyKind::kZeroIdiomFastPath})
    if (to_string(k) == s) return k;
  throw ParseError("unknown latency kind '" + std::string(s) + "'");
}

struct LatencyKernel {
  Kernel kernel;  // chain meta says what to subtract per occurrence
  LatencyKind kind = LatencyKind::kExact;
  std::string variant;      // e.g. "int-shuffle", "same-register", "via MOVQ_R64_X"
  std::string value_class;  // divider instructions only
};

struct LatencyPlan {
  int src = 0;
  int dst = 0;
  std::vector<LatencyKernel> kernels;
  std::string unchainable;  // reason, when no kernel could be built
};

// Calibrated latency of each helper chain instruction; helpers not listed count as 1.
using ChainLatencies = std::map<std::string, Rational>;

struct LatencyContext {
  const Catalog& catalog;
  std::function<bool(const std::string&)> available;  // empty: whole catalog
  ChainLatencies chain_latency;

  bool has(const std::string& id) const { return catalog.find(id) && (!available || available(id)); }
  Rational latency_of(const std::string& id) const {
    auto it = chain_latency.find(id);
    return it == chain_latency.end() ? Rational(1) : it->second;
  }
};

// Helper instructions whose latency is subtracted from chains; each is
// calibrated with make_self_chain.
inline std::vector<std::string> chain_helpers() {
  using namespace helper_ids;
  return {kMovsx8, kMovsx16, kMovsx32, kIntShuffle, kFpShuffle, kAvxIntShuffle, kAvxFpShuffle, kMmxMove, kXor, kAnd, kOr};
}

// All (source, destination) operand pairs of an instruction.
inline std::vector<std::pair<int, int>> latency_pairs(const InstructionDesc& desc) {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : desc.operands)
    if (is_latency_source(s))
      for (const auto& d : desc.operands)
        if (is_latency_destination(d)) out.emplace_back(s.index, d.index);
  return out;
}

// A chain of one helper instruction feeding itself, for calibration.
inline Kernel make_self_chain(const Catalog& catalog, const std::string& id) {
  const auto& desc = catalog.at(id);
  RegisterPool pool(catalog);
  const OperandSpec* w = nullptr;
  for (const auto& op : desc.operands)
    if (!op.implicit && op.is_register() && op.writes()) {
      w = &op;
      break;
    }
  if (!w) throw ValidationError(id + ": no register destination to chain");
  const auto cls = register_class_of(w->kind);
  const auto family = pool.take(cls, w->width);
  std::map<int, Binding> fixed{{w->index, RegisterBinding{pool.name(cls, family, w->width)}}};
  if (!w->reads()) {
    for (const auto& op : desc.operands) {
      if (op.implicit || !op.is_register() || op.writes() || register_class_of(op.kind) != cls) continue;
      fixed[op.index] = RegisterBinding{pool.name(cls, family, op.width)};
      break;
    }
  }
  Kernel k;
  k.instances.push_back(bind_operands(catalog, desc, pool, fixed));
  k.chain = ChainMeta{id, 1, Rational(0), "self chain"};
  k.label = id + " self chain";
  return k;
}

namespace detail {

struct Unchainable {
  std::string reason;
};

// Builds the kernels for one (src, dst) pair. Every kernel has the shape
//   [breakers for read-write operands other than src] I [breaker for src] chain...
// so that the only loop-carried path runs from src through dst and the chain.
class ChainBuilder {
 public:
  ChainBuilder(const LatencyContext& ctx, const InstructionDesc& desc, int src, int dst)
      : ctx_(ctx), cat_(ctx.catalog), desc_(desc), s_(desc.operands.at(src)), d_(desc.operands.at(dst)),
        isa_(blocking_isa_for(desc)) {}

  LatencyPlan build() {
    LatencyPlan plan{s_.index, d_.index, {}, {}};
    try {
      dispatch(plan);
    } catch (const Unchainable& u) {
      plan.kernels.clear();
      plan.unchainable = "unchainable pair: " + u.reason;
    }
    if (plan.kernels.empty() && plan.unchainable.empty()) plan.unchainable = "unchainable pair: no chain instruction";
    return plan;
  }

 private:
  struct Draft {
    RegisterPool pool;
    InstructionInstance inst;
    Kernel kernel;
    explicit Draft(const Catalog& c) : pool(c) {}
  };

  const LatencyContext& ctx_;
  const Catalog& cat_;
  const InstructionDesc& desc_;
  const OperandSpec& s_;
  const OperandSpec& d_;
  BlockingIsa isa_;

  static bool is_reg(const OperandSpec& op) { return op.is_register(); }
  static std::string cls(const OperandSpec& op) { return register_class_of(op.kind); }

  void need(const std::string& id) const {
    if (!ctx_.has(id)) throw Unchainable{"helper instruction " + id + " unavailable"};
  }
  bool isa_compatible(const InstructionDesc& c) const {
    if (desc_.isa_class == IsaClass::kSSE && c.isa_class == IsaClass::kAVX) return false;
    if (desc_.isa_class == IsaClass::kAVX && c.isa_class == IsaClass::kSSE) return false;
    return true;
  }
  std::string family(const Binding& b) const { return cat_.family_of(register_name(b)); }
  std::string fam_s(const Draft& dr) const { return family(dr.inst.bindings[s_.index]); }
  std::string fam_d(const Draft& dr) const { return family(dr.inst.bindings[d_.index]); }

  // Binds I (with `fixed` overrides) and emits the leading breakers.
  // Operands listed in `keep` are part of the measured path and get no breaker.
  Draft start(const std::map<int, Binding>& fixed = {}, const std::set<int>& keep = {}) const {
    Draft dr(cat_);
    for (const auto& [idx, b] : fixed) {
      if (auto* r = std::get_if<RegisterBinding>(&b)) dr.pool.exclude(cat_.family_of(r->name));
      if (auto* m = std::get_if<MemoryBinding>(&b)) dr.pool.exclude(cat_.family_of(m->base));
    }
    dr.inst = bind_operands(cat_, desc_, dr.pool, fixed);
    for (const auto& op : desc_.operands) {
      if (!(op.reads() && op.writes()) || op.index == s_.index || keep.count(op.index)) continue;
      need(breaker_id(op));
      dr.kernel.instances.push_back(make_dep_breaker(cat_, op, dr.inst.bindings[op.index], dr.pool, isa_));
    }
    dr.kernel.instances.push_back(dr.inst);
    if (s_.reads() && s_.writes() && s_.index != d_.index && !keep.count(s_.index)) {
      need(breaker_id(s_));
      dr.kernel.instances.push_back(make_dep_breaker(cat_, s_, dr.inst.bindings[s_.index], dr.pool, isa_));
    }
    return dr;
  }

  std::string breaker_id(const OperandSpec& op) const {
    using namespace helper_ids;
    switch (op.kind) {
      case OperandKind::kSimdRegister: return isa_ == BlockingIsa::kAVX ? kAvxBreaker : kSseBreaker;
      case OperandKind::kMmxRegister: return kMmxBreaker;
      case OperandKind::kMemory: return kMemoryBreaker;
      case OperandKind::kFlags: return kFlagsWriter;
      default: return kGpBreaker;
    }
  }

  void add(Draft& dr, const std::string& id, std::vector<Binding> bindings) const {
    need(id);
    dr.kernel.instances.push_back({id, std::move(bindings)});
  }

  RegisterBinding reg(Draft& dr, const std::string& c, const std::string& fam, int width) const {
    return RegisterBinding{dr.pool.name(c, fam, width)};
  }

  // Appends MOVSX fam64 <- fam(width) for 8/16-bit values; returns its latency.
  Rational widen(Draft& dr, const std::string& fam, int width, std::string& desc) const {
    if (width > 16) return Rational(0);
    const std::string id = width == 8 ? helper_ids::kMovsx8 : helper_ids::kMovsx16;
    add(dr, id, {reg(dr, "gp", fam, 64), reg(dr, "gp", fam, width)});
    desc += id + " ";
    return ctx_.latency_of(id);
  }

  void finish(LatencyPlan& plan, Draft& dr, LatencyKind kind, Rational subtract, const std::string& variant,
              const std::string& description, const std::string& value_class = "") const {
    dr.kernel.chain = ChainMeta{desc_.id, 1, subtract, description};
    dr.kernel.register_pressure = dr.pool.pressure();
    dr.kernel.label = desc_.id + " " + std::to_string(s_.index) + "->" + std::to_string(d_.index) +
                      (variant.empty() ? "" : " " + variant) + (value_class.empty() ? "" : " " + value_class);
    if (!value_class.empty()) tag_values(cat_, dr.kernel, value_class);
    plan.kernels.push_back({std::move(dr.kernel), kind, variant, value_class});
  }

  void dispatch(LatencyPlan& plan);
  void self_chain(LatencyPlan& plan);
  void same_register(LatencyPlan& plan);
  void reg_to_reg(LatencyPlan& plan);
  void cross_class(LatencyPlan& plan);
  void mem_to_reg(LatencyPlan& plan);
  void flags_to_gp(LatencyPlan& plan);
  void reg_to_flags(LatencyPlan& plan);
  void reg_to_mem(LatencyPlan& plan);
  void divider(LatencyPlan& plan);

  std::vector<const InstructionDesc*> candidates(const std::string& read_cls, bool read_flags,
                                                 const std::string& write_cls) const;
};

}  // namespace detail

namespace detail {

inline void ChainBuilder::dispatch(LatencyPlan& plan) {
  if (desc_.has(Attribute::kUsesDivider)) return divider(plan);
  const auto sk = s_.kind, dk = d_.kind;
  if (s_.index == d_.index) {
    if (sk == OperandKind::kMemory) throw Unchainable{"read-modify-write memory operand"};
    self_chain(plan);
    same_register(plan);
    return;
  }
  if (is_reg(s_) && is_reg(d_)) return cls(s_) == cls(d_) ? reg_to_reg(plan) : cross_class(plan);
  if (sk == OperandKind::kMemory && is_reg(d_)) return mem_to_reg(plan);
  if (sk == OperandKind::kFlags && dk == OperandKind::kGpRegister) return flags_to_gp(plan);
  if (is_reg(s_) && dk == OperandKind::kFlags) return reg_to_flags(plan);
  if (is_reg(s_) && dk == OperandKind::kMemory) return reg_to_mem(plan);
  throw Unchainable{"no chain from " + std::string(to_string(sk)) + " to " + std::string(to_string(dk))};
}

inline void ChainBuilder::self_chain(LatencyPlan& plan) {
  Draft dr = start();
  finish(plan, dr, LatencyKind::kExact, Rational(0), "", "self chain");
}

// All explicit registers of the source's class bound to one register.
inline void ChainBuilder::same_register(LatencyPlan& plan) {
  if (!is_reg(s_) || !is_reg(d_) || s_.implicit || d_.implicit || cls(s_) != cls(d_)) return;
  const auto c = cls(s_);
  std::vector<const OperandSpec*> ops;
  for (const auto& op : desc_.operands)
    if (!op.implicit && op.is_register() && register_class_of(op.kind) == c) ops.push_back(&op);
  if (ops.size() < 2) return;
  RegisterPool probe(cat_);
  const auto fam = probe.take(c, s_.width);
  std::map<int, Binding> fixed;
  std::set<int> keep;
  for (const auto* op : ops) {
    fixed[op->index] = RegisterBinding{probe.name(c, fam, op->width)};
    keep.insert(op->index);
  }
  Draft dr = start(fixed, keep);
  const bool idiom = desc_.has(Attribute::kZeroIdiom);
  finish(plan, dr, idiom ? LatencyKind::kZeroIdiomFastPath : LatencyKind::kExact, Rational(0), "same-register",
         "self chain, one register for all operands");
}

inline void ChainBuilder::reg_to_reg(LatencyPlan& plan) {
  using namespace helper_ids;
  const auto c = cls(s_);
  if (c == "gp") {
    const int width = std::min(d_.width, 32);
    const std::string id = width == 8 ? kMovsx8 : width == 16 ? kMovsx16 : kMovsx32;
    Draft dr = start();
    add(dr, id, {reg(dr, "gp", fam_s(dr), 64), reg(dr, "gp", fam_d(dr), width)});
    finish(plan, dr, LatencyKind::kExact, ctx_.latency_of(id), "", id);
  } else if (c == "simd") {
    const bool avx = isa_ == BlockingIsa::kAVX;
    const std::pair<std::string, std::string> variants[] = {{"int-shuffle", avx ? kAvxIntShuffle : kIntShuffle},
                                                            {"fp-shuffle", avx ? kAvxFpShuffle : kFpShuffle}};
    std::string missing;
    for (const auto& [variant, id] : variants) {
      if (!ctx_.has(id)) {
        missing = id;
        continue;
      }
      Draft dr = start();
      const int w = avx ? 256 : 128;
      auto xs = reg(dr, "simd", fam_s(dr), w), xd = reg(dr, "simd", fam_d(dr), w);
      if (cat_.at(id).operands.size() == 4) add(dr, id, {xs, xd, xd, ImmediateBinding{0}});
      else add(dr, id, {xs, xd, ImmediateBinding{0}});
      finish(plan, dr, LatencyKind::kExact, ctx_.latency_of(id), variant, id);
    }
    if (plan.kernels.empty()) need(missing);
  } else {
    Draft dr = start();
    add(dr, kMmxMove, {reg(dr, "mmx", fam_s(dr), 64), reg(dr, "mmx", fam_d(dr), 64)});
    finish(plan, dr, LatencyKind::kExact, ctx_.latency_of(kMmxMove), "", kMmxMove);
  }
  same_register(plan);
}

inline std::vector<const InstructionDesc*> ChainBuilder::candidates(const std::string& read_cls, bool read_flags,
                                                                    const std::string& write_cls) const {
  std::vector<const InstructionDesc*> out;
  for (const auto& c : cat_.instructions) {
    if (c.id == desc_.id || !ctx_.has(c.id) || !isa_compatible(c) || c.memory_operand()) continue;
    if (c.has(Attribute::kUsesDivider) || c.has(Attribute::kZeroLatencyCapable) || c.has(Attribute::kSystem) ||
        c.has(Attribute::kSerializing) || c.has(Attribute::kPauseLike) || c.has(Attribute::kControlFlowOnRegister))
      continue;
    bool writes = false, reads = false, flags_read = false;
    for (const auto& op : c.operands) {
      if (op.kind == OperandKind::kFlags && op.reads()) flags_read = true;
      if (op.implicit || !op.is_register()) continue;
      if (op.writes() && register_class_of(op.kind) == write_cls && !writes) writes = true;
      else if (!op.writes() && register_class_of(op.kind) == read_cls) reads = true;
    }
    if (!writes || flags_read != read_flags || (!read_flags && !reads)) continue;
    out.push_back(&c);
  }
  return out;
}

namespace chain_detail {

// Binds a candidate chain instruction: its first explicit register destination
// to `dst`, its first explicit read-only register of `src_cls` to `src`.
inline InstructionInstance bind_candidate(const Catalog& cat, const InstructionDesc& c, RegisterPool& pool,
                                          const std::string& dst_cls, const std::string& dst_fam,
                                          const std::string& src_cls, const std::string& src_fam) {
  std::map<int, Binding> fixed;
  bool have_dst = false, have_src = src_fam.empty();
  for (const auto& op : c.operands) {
    if (op.implicit || !op.is_register()) continue;
    if (!have_dst && op.writes() && register_class_of(op.kind) == dst_cls) {
      fixed[op.index] = RegisterBinding{pool.name(dst_cls, dst_fam, op.width)};
      have_dst = true;
    } else if (!have_src && !op.writes() && register_class_of(op.kind) == src_cls) {
      fixed[op.index] = RegisterBinding{pool.name(src_cls, src_fam, op.width)};
      have_src = true;
    }
  }
  return bind_operands(cat, c, pool, fixed);
}

}  // namespace chain_detail

inline void ChainBuilder::cross_class(LatencyPlan& plan) {
  auto cands = candidates(cls(d_), false, cls(s_));
  if (cands.empty()) throw Unchainable{"no chain instruction from " + cls(d_) + " to " + cls(s_)};
  for (const auto* c : cands) {
    Draft dr = start();
    dr.kernel.instances.push_back(
        chain_detail::bind_candidate(cat_, *c, dr.pool, cls(s_), fam_s(dr), cls(d_), fam_d(dr)));
    finish(plan, dr, LatencyKind::kUpperBound, Rational(1), "via " + c->id, c->id);
  }
}

inline void ChainBuilder::mem_to_reg(LatencyPlan& plan) {
  using namespace helper_ids;
  const bool plain_load = desc_.operands.size() == 2 && d_.kind == OperandKind::kGpRegister && d_.width == 64 &&
                          !d_.reads() && !d_.implicit;
  RegisterPool probe(cat_);
  const auto ra = probe.take("gp", 64);
  const auto ra64 = probe.name("gp", ra, 64);
  if (plain_load) {
    Draft dr = start({{d_.index, RegisterBinding{ra64}}, {s_.index, MemoryBinding{ra64, 0}}});
    finish(plan, dr, LatencyKind::kExact, Rational(0), "self-addressing", "address taken from the loaded value");
    return;
  }
  // I reads [Ra]; Ra ^= v; Ra ^= v leaves Ra unchanged but dependent on v.
  const bool reads_flags = desc_.flags_operand() && desc_.flags_operand()->reads();
  auto close = [&](Draft& dr, const std::string& value_fam, std::string& description) {
    for (int i = 0; i < 2; ++i) add(dr, kXor, {RegisterBinding{ra64}, reg(dr, "gp", value_fam, 64), FlagsBinding{}});
    description += "XOR x2";
    if (reads_flags) {
      need(kFlagsWriter);
      const auto& flags = *desc_.flags_operand();
      dr.kernel.instances.push_back(make_dep_breaker(cat_, flags, FlagsBinding{}, dr.pool, isa_));
    }
    return ctx_.latency_of(kXor) * 2;
  };
  const std::map<int, Binding> fixed{{s_.index, MemoryBinding{ra64, 0}}};
  if (d_.kind == OperandKind::kGpRegister) {
    Draft dr = start(fixed);
    std::string description;
    Rational sub = widen(dr, fam_d(dr), d_.width, description);
    sub += close(dr, fam_d(dr), description);
    finish(plan, dr, LatencyKind::kExact, sub, "double-xor", description);
    return;
  }
  auto cands = candidates(cls(d_), false, "gp");
  if (cands.empty()) throw Unchainable{"no chain instruction from " + cls(d_) + " to gp"};
  for (const auto* c : cands) {
    Draft dr = start(fixed);
    const auto tmp = dr.pool.take("gp", 64);
    dr.kernel.instances.push_back(chain_detail::bind_candidate(cat_, *c, dr.pool, "gp", tmp, cls(d_), fam_d(dr)));
    std::string description = c->id + " ";
    Rational sub = close(dr, tmp, description) + Rational(1);
    finish(plan, dr, LatencyKind::kUpperBound, sub, "double-xor via " + c->id, description);
  }
}

inline void ChainBuilder::flags_to_gp(LatencyPlan& plan) {
  using namespace helper_ids;
  Draft dr = start();
  std::string description;
  Rational sub = widen(dr, fam_d(dr), d_.width, description);
  auto r = reg(dr, "gp", fam_d(dr), 64);
  add(dr, kFlagsWriter, {r, r, FlagsBinding{}});
  sub += ctx_.latency_of(kFlagsWriter);
  finish(plan, dr, LatencyKind::kExact, sub, "test", description + kFlagsWriter);
}

inline void ChainBuilder::reg_to_flags(LatencyPlan& plan) {
  auto cands = candidates("", true, cls(s_));
  if (cands.empty()) throw Unchainable{"no flags-reading chain instruction writing " + cls(s_)};
  for (const auto* c : cands) {
    Draft dr = start();
    dr.kernel.instances.push_back(chain_detail::bind_candidate(cat_, *c, dr.pool, cls(s_), fam_s(dr), "", ""));
    finish(plan, dr, LatencyKind::kUpperBound, Rational(1), "via " + c->id, c->id);
  }
}

inline void ChainBuilder::reg_to_mem(LatencyPlan& plan) {
  using namespace helper_ids;
  const auto c = cls(s_);
  std::string id;
  int width = 64;
  if (c == "gp") {
    id = kGpLoad;
  } else if (c == "simd") {
    const bool avx = isa_ == BlockingIsa::kAVX || s_.width == 256;
    id = avx ? kAvxLoad : kSseLoad;
    width = avx ? 256 : 128;
  } else {
    throw Unchainable{"no load for " + c + " registers"};
  }
  Draft dr = start();
  add(dr, id, {reg(dr, c, fam_s(dr), width), dr.inst.bindings[d_.index]});
  finish(plan, dr, LatencyKind::kRoundTrip, Rational(0), "store-load", id);
}

// Fixed-value chains: "AND R, Rc; OR R, Rc" for src == dst, otherwise
// "AND Rd, Rz; OR Rs, Rd"; one kernel per value class.
inline void ChainBuilder::divider(LatencyPlan& plan) {
  using namespace helper_ids;
  if (s_.kind != OperandKind::kGpRegister || d_.kind != OperandKind::kGpRegister)
    throw Unchainable{"divider pair without a register chain"};
  for (const auto& vc : divider_value_classes()) {
    Draft dr = start();
    auto rs = reg(dr, "gp", fam_s(dr), 64);
    std::string description;
    if (s_.index == d_.index) {
      auto rc = reg(dr, "gp", dr.pool.shared_source("gp", 64, 500), 64);
      add(dr, kAnd, {rs, rc, FlagsBinding{}});
      add(dr, kOr, {rs, rc, FlagsBinding{}});
      description = "AND R, Rc; OR R, Rc";
    } else {
      auto rz = reg(dr, "gp", dr.pool.shared_source("gp", 64, 501), 64);
      auto rd = reg(dr, "gp", fam_d(dr), 64);
      add(dr, kAnd, {rd, rz, FlagsBinding{}});
      add(dr, kOr, {rs, rd, FlagsBinding{}});
      description = "AND Rd, Rz; OR Rs, Rd";
    }
    finish(plan, dr, LatencyKind::kExact, ctx_.latency_of(kAnd) + ctx_.latency_of(kOr), "and-or", description, vc);
  }
}

}  // namespace detail

// Kernels measuring lat(src, dst) of `desc`; an empty plan carries the reason.
inline LatencyPlan make_latency_kernels(const LatencyContext& ctx, const InstructionDesc& desc, int src, int dst) {
  return detail::ChainBuilder(ctx, desc, src, dst).build();
}

}  // namespace uopchar
