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

#include <optional>
#include <vector>

#include "uopchar/errors.hpp"
#include "uopchar/port_usage.hpp"
#include "uopchar/rational.hpp"

namespace uopchar {

// min c.x subject to A x = b, x >= 0, with b >= 0.
struct LinearProgram {
  std::vector<std::vector<Rational>> a;
  std::vector<Rational> b;
  std::vector<Rational> c;
};

struct LpSolution {
  Rational objective{0};
  std::vector<Rational> x;
};

namespace detail {

// Dense tableau; the last column holds the right-hand side. Bland's rule
// (lowest eligible index enters and leaves) guarantees termination.
class Tableau {
 public:
  Tableau(std::vector<std::vector<Rational>> rows, std::vector<int> basis)
      : t_(std::move(rows)), basis_(std::move(basis)) {}

  // Minimizes `cost` (one entry per non-RHS column) over the current basis.
  // Columns with allowed[j] == false never enter. Returns false if unbounded.
  bool minimize(const std::vector<Rational>& cost, const std::vector<bool>& allowed) {
    const std::size_t n = cost.size();
    while (true) {
      int enter = -1;
      for (std::size_t j = 0; j < n && enter < 0; ++j) {
        if (!allowed[j] || is_basic(static_cast<int>(j))) continue;
        if (reduced_cost(cost, j) < Rational(0)) enter = static_cast<int>(j);
      }
      if (enter < 0) return true;
      int leave = -1;
      Rational best{0};
      for (std::size_t i = 0; i < t_.size(); ++i) {
        const Rational& coef = t_[i][enter];
        if (coef <= Rational(0)) continue;
        Rational ratio = t_[i].back() / coef;
        if (leave < 0 || ratio < best || (ratio == best && basis_[i] < basis_[leave])) {
          leave = static_cast<int>(i);
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void pivot(int row, int col) {
    const Rational p = t_[row][col];
    for (auto& v : t_[row]) v /= p;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (static_cast<int>(i) == row || t_[i][col] == Rational(0)) continue;
      const Rational f = t_[i][col];
      for (std::size_t j = 0; j < t_[i].size(); ++j) t_[i][j] -= f * t_[row][j];
    }
    basis_[row] = col;
  }

  Rational value(const std::vector<Rational>& cost) const {
    Rational v{0};
    for (std::size_t i = 0; i < t_.size(); ++i) v += cost[basis_[i]] * t_[i].back();
    return v;
  }
  bool is_basic(int col) const {
    for (int b : basis_)
      if (b == col) return true;
    return false;
  }
  std::vector<std::vector<Rational>>& rows() { return t_; }
  std::vector<int>& basis() { return basis_; }

 private:
  Rational reduced_cost(const std::vector<Rational>& cost, std::size_t j) const {
    Rational r = cost[j];
    for (std::size_t i = 0; i < t_.size(); ++i) r -= cost[basis_[i]] * t_[i][j];
    return r;
  }

  std::vector<std::vector<Rational>> t_;
  std::vector<int> basis_;
};

}  // namespace detail

// Two-phase simplex in exact arithmetic. nullopt: infeasible. Throws
// InconsistencyError when the objective is unbounded below.
inline std::optional<LpSolution> solve_lp(const LinearProgram& lp) {
  const std::size_t m = lp.b.size(), n = lp.c.size();
  std::vector<std::vector<Rational>> rows(m, std::vector<Rational>(n + m + 1, Rational(0)));
  std::vector<int> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (lp.b[i] < Rational(0)) throw InconsistencyError("linear program needs a non-negative right-hand side");
    for (std::size_t j = 0; j < n; ++j) rows[i][j] = lp.a[i][j];
    rows[i][n + i] = 1;
    rows[i].back() = lp.b[i];
    basis[i] = static_cast<int>(n + i);
  }
  detail::Tableau tab(std::move(rows), std::move(basis));

  std::vector<Rational> phase1(n + m, Rational(0));
  for (std::size_t i = 0; i < m; ++i) phase1[n + i] = 1;
  tab.minimize(phase1, std::vector<bool>(n + m, true));
  if (tab.value(phase1) != Rational(0)) return std::nullopt;

  // Pivot zero-valued artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (tab.basis()[i] < static_cast<int>(n)) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (tab.rows()[i][j] != Rational(0)) {
        tab.pivot(static_cast<int>(i), static_cast<int>(j));
        break;
      }
    }
  }

  std::vector<Rational> phase2(n + m, Rational(0));
  for (std::size_t j = 0; j < n; ++j) phase2[j] = lp.c[j];
  std::vector<bool> allowed(n + m, false);
  for (std::size_t j = 0; j < n; ++j) allowed[j] = true;
  if (!tab.minimize(phase2, allowed)) throw InconsistencyError("linear program is unbounded");

  LpSolution sol;
  sol.objective = tab.value(phase2);
  sol.x.assign(n, Rational(0));
  for (std::size_t i = 0; i < m; ++i)
    if (tab.basis()[i] < static_cast<int>(n)) sol.x[tab.basis()[i]] = tab.rows()[i].back();
  return sol;
}

// Cycles per instruction implied by a port usage when every uop may go to any
// port of its combination: min z s.t. each combination's uops are split over
// its ports and no port receives more than z. nullopt for divider
// instructions, whose divider is not fully pipelined, and for usages without
// uops, which the ports do not bound.
inline std::optional<Rational> compute_throughput(const PortUsage& pu, bool uses_divider) {
  if (uses_divider || pu.entries.empty()) return std::nullopt;

  PortSet all;
  for (const auto& e : pu.entries) {
    if (e.ports.empty() || e.count <= 0) throw ValidationError("port usage entries need ports and a positive count");
    all = all | e.ports;
  }
  const std::vector<int> ports = all.ports();

  // Columns: one f(p, pc) per entry and port of the entry, then z, then one slack per port.
  std::vector<std::pair<std::size_t, int>> flow;
  for (std::size_t k = 0; k < pu.entries.size(); ++k)
    for (int p : pu.entries[k].ports.ports()) flow.emplace_back(k, p);
  const std::size_t z = flow.size();
  const std::size_t n = z + 1 + ports.size();

  LinearProgram lp;
  lp.c.assign(n, Rational(0));
  lp.c[z] = 1;
  for (std::size_t k = 0; k < pu.entries.size(); ++k) {
    std::vector<Rational> row(n, Rational(0));
    for (std::size_t j = 0; j < z; ++j)
      if (flow[j].first == k) row[j] = 1;
    lp.a.push_back(std::move(row));
    lp.b.emplace_back(pu.entries[k].count);
  }
  for (std::size_t q = 0; q < ports.size(); ++q) {
    std::vector<Rational> row(n, Rational(0));
    for (std::size_t j = 0; j < z; ++j)
      if (flow[j].second == ports[q]) row[j] = 1;
    row[z] = -1;
    row[z + 1 + q] = 1;
    lp.a.push_back(std::move(row));
    lp.b.emplace_back(0);
  }
  auto sol = solve_lp(lp);
  if (!sol) throw InconsistencyError("throughput linear program infeasible");
  return sol->objective;
}

}  // namespace uopchar
