#pragma once

// Weighted set cover as a concrete combinatorial class: random instances,
// the greedy relax-based oracle, the LP relaxation and Euclidean projection
// onto the covering polytope P(C) = { x in [0,1]^n : A x >= 1 }.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meta/errors.hpp"
#include "meta/geometry.hpp"
#include "meta/random.hpp"
#include "meta/simplex_lp.hpp"

namespace meta::setcover {

/// m items, n sets; coverage(i, j) = 1 iff set j contains item i.
struct Instance {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<std::uint8_t> coverage;  // row-major m x n
  std::vector<double> cost;
  std::uint64_t seed = 0;

  bool covers(std::size_t item, std::size_t set) const { return coverage[item * n + set] != 0; }

  void validate() const {
    if (coverage.size() != m * n || cost.size() != n) throw DimensionMismatch("set cover instance shape");
    for (std::uint8_t v : coverage) {
      if (v > 1) throw InvalidArgument("coverage entries must be 0 or 1");
    }
    for (std::size_t i = 0; i < m; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < n && !any; ++j) any = covers(i, j);
      if (!any) throw InvalidArgument("item " + std::to_string(i) + " is not covered by any set");
    }
    for (std::size_t j = 0; j < n; ++j) {
      bool any = false;
      for (std::size_t i = 0; i < m && !any; ++i) any = covers(i, j);
      if (!any) throw InvalidArgument("set " + std::to_string(j) + " is empty");
    }
  }

  std::vector<std::vector<std::size_t>> items_by_set() const {
    std::vector<std::vector<std::size_t>> out(n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (covers(i, j)) out[j].push_back(i);
      }
    }
    return out;
  }

  /// A x
  std::vector<double> coverage_of(std::span<const double> x) const {
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (covers(i, j)) out[i] += x[j];
      }
    }
    return out;
  }

  bool is_cover(const CombinatorialVector& c) const {
    if (c.size() != n) return false;
    for (std::size_t i = 0; i < m; ++i) {
      std::int64_t hit = 0;
      for (std::size_t j : c.nonzeros()) {
        if (covers(i, j)) hit += c[j];
      }
      if (hit < 1) return false;
    }
    return true;
  }

  /// x in [0,1]^n and A x >= 1, both within tol.
  bool in_relaxation(std::span<const double> x, double tol = 1e-7) const {
    if (x.size() != n) return false;
    for (double v : x) {
      if (v < -tol || v > 1.0 + tol) return false;
    }
    for (double r : coverage_of(x)) {
      if (r < 1.0 - tol) return false;
    }
    return true;
  }

  friend bool operator==(const Instance&, const Instance&) = default;
};

inline double harmonic(std::size_t m) {
  double h = 0.0;
  for (std::size_t i = 1; i <= m; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

inline constexpr double kDefaultDensity = 0.3;
inline constexpr int kMaxGenerationAttempts = 1000;

/// Each A_ij ~ Bernoulli(density); empty columns are redrawn, and the whole
/// matrix is redrawn when some item is left uncovered. Costs ~ U[0,1).
inline Instance generate(std::size_t m, std::size_t n, double density, Rng& rng) {
  if (m == 0 || n == 0) throw InvalidArgument("set cover needs m >= 1 and n >= 1");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidArgument("density must lie in (0, 1]");

  Instance inst;
  inst.m = m;
  inst.n = n;
  inst.coverage.assign(m * n, 0);
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    bool columns_ok = true;
    for (std::size_t j = 0; j < n && columns_ok; ++j) {
      int redraws = 0;
      bool nonempty = false;
      while (!nonempty) {
        if (redraws++ == kMaxGenerationAttempts) {
          columns_ok = false;
          break;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const bool in = uniform01(rng) < density;
          inst.coverage[i * n + j] = in ? 1 : 0;
          nonempty = nonempty || in;
        }
      }
    }
    if (!columns_ok) break;
    bool all_covered = true;
    for (std::size_t i = 0; i < m && all_covered; ++i) {
      bool hit = false;
      for (std::size_t j = 0; j < n && !hit; ++j) hit = inst.covers(i, j);
      all_covered = hit;
    }
    if (all_covered) {
      inst.cost.resize(n);
      for (double& w : inst.cost) w = uniform01(rng);
      return inst;
    }
  }
  throw GenerationFailed("no coverable instance after " + std::to_string(kMaxGenerationAttempts) +
                         " attempts (m=" + std::to_string(m) + ", n=" + std::to_string(n) +
                         ", density=" + std::to_string(density) + ")");
}

/// Seeded variant; the seed is recorded on the instance.
inline Instance generate(std::size_t m, std::size_t n, double density, std::uint64_t seed) {
  Rng rng = derive_stream(seed, "instance");
  Instance inst = generate(m, n, density, rng);
  inst.seed = seed;
  return inst;
}

/// Classic greedy: repeatedly take the set with the smallest
/// loss / (newly covered items), ties to the lower index. Relative to the LP
/// relaxation its cost is within H_m.
class GreedyOracle {
 public:
  explicit GreedyOracle(const Instance& inst) : inst_(&inst), items_(inst.items_by_set()) {}

  std::size_t dimension() const { return inst_->n; }
  std::optional<double> declared_alpha() const { return harmonic(inst_->m); }

  CombinatorialVector operator()(std::span<const double> loss) const {
    const std::size_t n = inst_->n;
    if (loss.size() != n) throw DimensionMismatch("greedy oracle: loss dimension");
    for (double v : loss) {
      if (!(v >= 0.0)) throw InvalidArgument("greedy oracle: losses must be nonnegative");
    }
    std::vector<std::int64_t> chosen(n, 0);
    std::vector<char> covered(inst_->m, 0);
    std::size_t remaining = inst_->m;
    while (remaining > 0) {
      std::size_t best = n;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (chosen[j]) continue;
        std::size_t fresh = 0;
        for (std::size_t i : items_[j]) fresh += covered[i] ? 0 : 1;
        if (fresh == 0) continue;
        const double ratio = loss[j] / static_cast<double>(fresh);
        if (best == n || ratio < best_ratio) {
          best = j;
          best_ratio = ratio;
        }
      }
      if (best == n) throw InvalidArgument("greedy oracle: instance is not coverable");
      chosen[best] = 1;
      for (std::size_t i : items_[best]) {
        if (!covered[i]) {
          covered[i] = 1;
          --remaining;
        }
      }
    }
    return CombinatorialVector(std::move(chosen));
  }

 private:
  const Instance* inst_;
  std::vector<std::vector<std::size_t>> items_;
};

inline CombinatorialVector greedy_oracle(const Instance& inst, std::span<const double> loss) {
  return GreedyOracle(inst)(loss);
}

struct RelaxedLp {
  RelaxedPoint x;
  double value = 0.0;
};

/// min cost . x  s.t.  A x >= 1, x in [0,1]^n.
inline RelaxedLp relaxed_lp(const Instance& inst, std::span<const double> cost) {
  if (cost.size() != inst.n) throw DimensionMismatch("relaxed_lp: cost dimension");
  lp::LinearProgram prog;
  prog.objective.assign(cost.begin(), cost.end());
  prog.lower.assign(inst.n, 0.0);
  prog.upper.assign(inst.n, 1.0);
  for (std::size_t i = 0; i < inst.m; ++i) {
    std::vector<double> row(inst.n, 0.0);
    for (std::size_t j = 0; j < inst.n; ++j) row[j] = inst.covers(i, j) ? 1.0 : 0.0;
    prog.add_row(std::move(row), lp::Sense::GreaterEqual, 1.0);
  }
  const auto sol = lp::solve(prog);
  if (sol.status != lp::Status::Optimal) {
    throw LpError(std::string("relaxed set cover LP is ") + lp::to_string(sol.status));
  }
  std::vector<double> x = sol.x;
  for (double& v : x) {
    if (v < 1e-9) v = 0.0;
    if (v > 1.0 - 1e-9) v = 1.0;
  }
  return {RelaxedPoint(std::move(x)), sol.objective};
}

namespace detail {

// Raises coordinates of any row still short of coverage, largest entries first.
inline void repair_coverage(const Instance& inst, std::vector<double>& x) {
  for (std::size_t i = 0; i < inst.m; ++i) {
    double have = 0.0;
    std::vector<std::size_t> members;
    for (std::size_t j = 0; j < inst.n; ++j) {
      if (inst.covers(i, j)) {
        have += x[j];
        members.push_back(j);
      }
    }
    if (have >= 1.0) continue;
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
    double deficit = 1.0 - have;
    for (std::size_t j : members) {
      if (deficit <= 0.0) break;
      const double room = 1.0 - x[j];
      const double add = std::min(room, deficit);
      x[j] += add;
      deficit -= add;
    }
  }
}

}  // namespace detail

struct ProjectionOptions {
  double tolerance = 1e-8;
  std::size_t max_sweeps = 10'000;
};

/// Euclidean projection onto P(C) by Dykstra's alternating projections over
/// the box and the m covering halfspaces, followed by a repair pass so the
/// result is feasible.
inline RelaxedPoint project(const Instance& inst, std::span<const double> y, const ProjectionOptions& opt = {}) {
  if (y.size() != inst.n) throw DimensionMismatch("project: dimension");
  const std::size_t n = inst.n;
  const auto members = [&] {
    std::vector<std::vector<std::size_t>> rows(inst.m);
    for (std::size_t i = 0; i < inst.m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (inst.covers(i, j)) rows[i].push_back(j);
      }
    }
    return rows;
  }();

  std::vector<double> x(y.begin(), y.end());
  std::vector<double> box_inc(n, 0.0);
  std::vector<std::vector<double>> row_inc(inst.m);
  for (std::size_t i = 0; i < inst.m; ++i) row_inc[i].assign(members[i].size(), 0.0);
  std::vector<double> prev(n);

  for (std::size_t sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    prev = x;
    for (std::size_t j = 0; j < n; ++j) {
      const double z = x[j] + box_inc[j];
      x[j] = std::clamp(z, 0.0, 1.0);
      box_inc[j] = z - x[j];
    }
    for (std::size_t i = 0; i < inst.m; ++i) {
      const auto& idx = members[i];
      auto& inc = row_inc[i];
      double dot = 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) dot += x[idx[k]] + inc[k];
      const double shift = dot < 1.0 ? (1.0 - dot) / static_cast<double>(idx.size()) : 0.0;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const double z = x[idx[k]] + inc[k];
        x[idx[k]] = z + shift;
        inc[k] = -shift;
      }
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(x[j] - prev[j]));
    if (diff < opt.tolerance) break;
  }

  // Dykstra leaves residues of the order of the stopping tolerance where the
  // exact projection is 0 or 1; left in place they would blow up M = 1/min x.
  const double snap = 10.0 * opt.tolerance;
  for (double& v : x) {
    v = std::clamp(v, 0.0, 1.0);
    if (v < snap) v = 0.0;
    if (v > 1.0 - snap) v = 1.0;
  }
  detail::repair_coverage(inst, x);
  return RelaxedPoint(std::move(x));
}

}  // namespace meta::setcover
