#pragma once

// Dense two-phase primal simplex (Dantzig pricing, Bland fallback), plus an exhaustive
// vertex enumerator used to check it on small problems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "meta/errors.hpp"

namespace meta::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };
enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "?";
}

/// minimize objective . x  s.t.  rows[i] . x (sense_i) rhs_i,  lower <= x <= upper.
/// Empty bound vectors mean [0, +inf) for every variable.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<Sense> senses;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rows.size(); }

  double lower_bound(std::size_t j) const { return lower.empty() ? 0.0 : lower[j]; }
  double upper_bound(std::size_t j) const { return upper.empty() ? kInf : upper[j]; }

  void add_row(std::vector<double> coeffs, Sense sense, double b) {
    rows.push_back(std::move(coeffs));
    senses.push_back(sense);
    rhs.push_back(b);
  }

  void validate() const {
    const std::size_t n = num_vars();
    if (senses.size() != rows.size() || rhs.size() != rows.size()) {
      throw DimensionMismatch("row, sense and rhs counts differ");
    }
    for (const auto& r : rows) {
      if (r.size() != n) throw DimensionMismatch("constraint row length differs from objective length");
    }
    if ((!lower.empty() && lower.size() != n) || (!upper.empty() && upper.size() != n)) {
      throw DimensionMismatch("bound vector length differs from objective length");
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower_bound(j)) || std::isnan(upper_bound(j)) || lower_bound(j) > upper_bound(j) ||
          lower_bound(j) == kInf || upper_bound(j) == -kInf) {
        throw InvalidArgument("invalid bounds for variable " + std::to_string(j));
      }
    }
  }
};

struct LpSolution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double pivot_tol = 1e-10;
  double optimality_tol = 1e-9;
  std::size_t max_pivots = 1'000'000;
  std::size_t bland_after = 50;  // consecutive degenerate pivots before switching to Bland
};

namespace detail {

// Original variable j maps to offset + sign * z[pos] (- z[neg] when free).
struct VarMap {
  std::size_t pos = 0;
  std::ptrdiff_t neg = -1;
  double offset = 0.0;
  double sign = 1.0;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0), active_(rows, 1) {}

  double& at(std::size_t i, std::size_t j) { return data_[i * (cols_ + 1) + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * (cols_ + 1) + j]; }
  double& rhs(std::size_t i) { return at(i, cols_); }
  double& cost(std::size_t j) { return at(rows_, j); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::vector<char>& active() { return active_; }

  void pivot(std::size_t r, std::size_t e) {
    const double p = at(r, e);
    nz_.clear();
    for (std::size_t j = 0; j <= cols_; ++j) {
      double& v = at(r, j);
      if (v != 0.0) {
        v /= p;
        nz_.push_back(j);
      }
    }
    at(r, e) = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r || (i < rows_ && !active_[i])) continue;
      const double f = at(i, e);
      if (f == 0.0) continue;
      for (std::size_t j : nz_) at(i, j) -= f * at(r, j);
      at(i, e) = 0.0;
    }
    basis_[r] = e;
  }

  /// Installs cost vector c in the objective row and prices out the basis.
  void set_costs(const std::vector<double>& c) {
    for (std::size_t j = 0; j < cols_; ++j) cost(j) = c[j];
    at(rows_, cols_) = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (!active_[i]) continue;
      const double cb = c[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(rows_, j) -= cb * at(i, j);
    }
  }

  double objective_value() const { return -at(rows_, cols_); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
  std::vector<char> active_;
  std::vector<std::size_t> nz_;
};

enum class PhaseResult { Optimal, Unbounded };

// Dantzig pricing (most negative reduced cost) with ties in the ratio test
// broken toward the largest pivot element. After a run of degenerate pivots
// the phase falls back to Bland's rule (lowest index enters, lowest basic
// index leaves among ties) until the objective moves again.
inline PhaseResult run_phase(Tableau& t, const std::vector<char>& allowed, const SolverOptions& opt,
                             std::size_t& pivots) {
  std::size_t degenerate_run = 0;
  for (;;) {
    const bool bland = degenerate_run >= opt.bland_after;
    std::ptrdiff_t enter = -1;
    double most_negative = -opt.optimality_tol;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (!allowed[j] || t.cost(j) >= most_negative) continue;
      enter = static_cast<std::ptrdiff_t>(j);
      if (bland) break;
      most_negative = t.cost(j);
    }
    if (enter < 0) return PhaseResult::Optimal;
    const auto e = static_cast<std::size_t>(enter);

    double col_max = 0.0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (t.active()[i]) col_max = std::max(col_max, std::abs(t.at(i, e)));
    }
    const double pivot_floor = std::max(opt.pivot_tol, 1e-9 * col_max);

    std::ptrdiff_t leave = -1;
    double best = kInf;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (!t.active()[i]) continue;
      const double a = t.at(i, e);
      if (a <= pivot_floor) continue;
      const double ratio = std::max(0.0, t.rhs(i)) / a;
      if (leave < 0) {
        leave = static_cast<std::ptrdiff_t>(i);
        best = ratio;
        continue;
      }
      const auto l = static_cast<std::size_t>(leave);
      const double slack = 1e-12 * std::max(1.0, best);
      if (ratio < best - slack) {
        leave = static_cast<std::ptrdiff_t>(i);
        best = ratio;
      } else if (ratio <= best + slack) {
        const bool better = bland ? t.basis()[i] < t.basis()[l] : a > t.at(l, e);
        if (better) {
          leave = static_cast<std::ptrdiff_t>(i);
          best = std::min(best, ratio);
        }
      }
    }
    if (leave < 0) return PhaseResult::Unbounded;

    if (++pivots > opt.max_pivots) {
      throw LpIterationLimit("simplex exceeded " + std::to_string(opt.max_pivots) + " pivots");
    }
    degenerate_run = best * std::abs(t.cost(e)) <= opt.optimality_tol ? degenerate_run + 1 : 0;
    t.pivot(static_cast<std::size_t>(leave), e);
  }
}

}  // namespace detail

inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  lp.validate();
  const std::size_t n = lp.num_vars();

  // Substitute bounds away so every working variable is z >= 0.
  std::vector<detail::VarMap> vars(n);
  std::size_t nz = 0;
  struct BoundRow {
    std::size_t col;
    double width;
  };
  std::vector<BoundRow> bound_rows;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lp.lower_bound(j);
    const double hi = lp.upper_bound(j);
    auto& v = vars[j];
    v.pos = nz++;
    if (std::isfinite(lo)) {
      v.offset = lo;
      if (std::isfinite(hi)) bound_rows.push_back({v.pos, hi - lo});
    } else if (std::isfinite(hi)) {
      v.offset = hi;
      v.sign = -1.0;
    } else {
      v.neg = static_cast<std::ptrdiff_t>(nz++);
    }
  }

  struct StdRow {
    std::vector<double> a;
    Sense sense;
    double b;
  };
  std::vector<StdRow> std_rows;
  std_rows.reserve(lp.num_rows() + bound_rows.size());
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    StdRow r{std::vector<double>(nz, 0.0), lp.senses[i], lp.rhs[i]};
    for (std::size_t j = 0; j < n; ++j) {
      const double a = lp.rows[i][j];
      if (a == 0.0) continue;
      r.b -= a * vars[j].offset;
      r.a[vars[j].pos] += a * vars[j].sign;
      if (vars[j].neg >= 0) r.a[static_cast<std::size_t>(vars[j].neg)] -= a;
    }
    std_rows.push_back(std::move(r));
  }
  for (const auto& br : bound_rows) {
    StdRow r{std::vector<double>(nz, 0.0), Sense::LessEqual, br.width};
    r.a[br.col] = 1.0;
    std_rows.push_back(std::move(r));
  }
  for (auto& r : std_rows) {
    double big = 0.0;
    for (double a : r.a) big = std::max(big, std::abs(a));
    if (big > 0.0) {
      for (double& a : r.a) a /= big;
      r.b /= big;
    }
    // Negate to make rhs >= 0; homogeneous >= rows are negated too so their
    // slack can start in the basis instead of an artificial.
    if (r.b < 0.0 || (r.b == 0.0 && r.sense == Sense::GreaterEqual)) {
      for (double& a : r.a) a = -a;
      r.b = -r.b;
      if (r.sense == Sense::LessEqual) {
        r.sense = Sense::GreaterEqual;
      } else if (r.sense == Sense::GreaterEqual) {
        r.sense = Sense::LessEqual;
      }
    }
  }

  // Column layout: [z | slack/surplus | artificial].
  const std::size_t m = std_rows.size();
  std::size_t n_slack = 0;
  std::size_t n_art = 0;
  for (const auto& r : std_rows) {
    if (r.sense != Sense::Equal) ++n_slack;
    if (r.sense != Sense::LessEqual) ++n_art;
  }
  const std::size_t cols = nz + n_slack + n_art;
  detail::Tableau t(m, cols);
  std::vector<char> is_art(cols, 0);
  {
    std::size_t s = nz;
    std::size_t a = nz + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& r = std_rows[i];
      for (std::size_t j = 0; j < nz; ++j) t.at(i, j) = r.a[j];
      t.rhs(i) = r.b;
      if (r.sense == Sense::LessEqual) {
        t.at(i, s) = 1.0;
        t.basis()[i] = s++;
      } else {
        if (r.sense == Sense::GreaterEqual) t.at(i, s++) = -1.0;
        t.at(i, a) = 1.0;
        is_art[a] = 1;
        t.basis()[i] = a++;
      }
    }
  }

  LpSolution sol;
  std::size_t pivots = 0;
  const std::vector<char> all_allowed(cols, 1);

  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) phase1[j] = is_art[j] ? 1.0 : 0.0;
    t.set_costs(phase1);
    detail::run_phase(t, all_allowed, opt, pivots);
    double scale = 1.0;
    for (const auto& r : std_rows) scale = std::max(scale, r.b);
    if (t.objective_value() > opt.feasibility_tol * scale) {
      sol.status = Status::Infeasible;
      sol.iterations = pivots;
      return sol;
    }
    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linearly dependent and are dropped.
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[t.basis()[i]]) continue;
      std::ptrdiff_t enter = -1;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!is_art[j] && std::abs(t.at(i, j)) > opt.pivot_tol) {
          enter = static_cast<std::ptrdiff_t>(j);
          break;
        }
      }
      if (enter >= 0) {
        t.pivot(i, static_cast<std::size_t>(enter));
      } else {
        t.active()[i] = 0;
      }
    }
  }

  std::vector<double> phase2(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = lp.objective[j];
    phase2[vars[j].pos] += c * vars[j].sign;
    if (vars[j].neg >= 0) phase2[static_cast<std::size_t>(vars[j].neg)] -= c;
  }
  t.set_costs(phase2);
  std::vector<char> allowed(cols, 1);
  for (std::size_t j = 0; j < cols; ++j) allowed[j] = !is_art[j];
  const auto result = detail::run_phase(t, allowed, opt, pivots);
  sol.iterations = pivots;
  if (result == detail::PhaseResult::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  std::vector<double> z(cols, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (t.active()[i]) z[t.basis()[i]] = std::max(0.0, t.rhs(i));
  }
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = vars[j];
    double x = v.offset + v.sign * z[v.pos];
    if (v.neg >= 0) x -= z[static_cast<std::size_t>(v.neg)];
    sol.x[j] = std::clamp(x, lp.lower_bound(j), lp.upper_bound(j));
  }

  // Certify the basic solution against the original constraints.
  for (std::size_t i = 0; i < lp.num_rows(); ++i) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) lhs += lp.rows[i][j] * sol.x[j];
    const double tol = opt.feasibility_tol * std::max(1.0, std::abs(lp.rhs[i]));
    const double b = lp.rhs[i];
    const bool ok = lp.senses[i] == Sense::LessEqual      ? lhs <= b + tol
                    : lp.senses[i] == Sense::GreaterEqual ? lhs >= b - tol
                                                          : std::abs(lhs - b) <= tol;
    if (!ok) {
      throw LpNumericalTrouble("optimal basis violates row " + std::to_string(i) + " by " +
                               std::to_string(std::abs(lhs - b)));
    }
  }
  sol.status = Status::Optimal;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective[j] * sol.x[j];
  return sol;
}

namespace detail {

// Solves the square system a y = b in place; false when singular.
inline bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& y) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-11) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  y.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c][k] * y[k];
    y[c] = s / a[c][c];
  }
  return true;
}

}  // namespace detail

inline constexpr std::size_t kMaxEnumerationVars = 8;

/// All basic feasible solutions, found by trying every choice of n active
/// constraints among the rows and the finite bounds. Test oracle only.
inline std::vector<std::vector<double>> enumerate_vertices(const LinearProgram& lp, double tol = 1e-9) {
  lp.validate();
  const std::size_t n = lp.num_vars();
  if (n > kMaxEnumerationVars) {
    throw TooLarge("vertex enumeration is limited to " + std::to_string(kMaxEnumerationVars) + " variables");
  }

  struct Halfspace {
    std::vector<double> a;
    Sense sense;
    double b;
  };
  std::vector<Halfspace> cons;
  for (std::size_t i = 0; i < lp.num_rows(); ++i) cons.push_back({lp.rows[i], lp.senses[i], lp.rhs[i]});
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    if (std::isfinite(lp.lower_bound(j))) cons.push_back({e, Sense::GreaterEqual, lp.lower_bound(j)});
    if (std::isfinite(lp.upper_bound(j))) cons.push_back({e, Sense::LessEqual, lp.upper_bound(j)});
  }

  auto feasible = [&](const std::vector<double>& y) {
    for (const auto& h : cons) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += h.a[j] * y[j];
      const double t = tol * std::max(1.0, std::abs(h.b));
      if (h.sense == Sense::LessEqual && lhs > h.b + t) return false;
      if (h.sense == Sense::GreaterEqual && lhs < h.b - t) return false;
      if (h.sense == Sense::Equal && std::abs(lhs - h.b) > t) return false;
    }
    return true;
  };

  std::vector<std::vector<double>> out;
  if (n == 0) {
    if (feasible({})) out.emplace_back();
    return out;
  }
  if (cons.size() < n) return out;

  std::vector<std::size_t> pick(n);
  for (std::size_t k = 0; k < n; ++k) pick[k] = k;
  std::vector<double> y;
  for (;;) {
    std::vector<std::vector<double>> a(n);
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = cons[pick[k]].a;
      b[k] = cons[pick[k]].b;
    }
    if (detail::solve_square(std::move(a), std::move(b), y) && feasible(y)) {
      const bool seen = std::any_of(out.begin(), out.end(), [&](const std::vector<double>& v) {
        for (std::size_t j = 0; j < n; ++j) {
          if (std::abs(v[j] - y[j]) > 1e-9 * std::max(1.0, std::abs(y[j]))) return false;
        }
        return true;
      });
      if (!seen) out.push_back(y);
    }
    // next combination in lexicographic order
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == cons.size() - n + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t r = k; r < n; ++r) pick[r] = pick[r - 1] + 1;
  }
  return out;
}

/// Best objective over the enumerated vertices, if any exist.
inline std::optional<double> vertex_minimum(const LinearProgram& lp) {
  std::optional<double> best;
  for (const auto& v : enumerate_vertices(lp)) {
    double obj = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) obj += lp.objective[j] * v[j];
    if (!best || obj < *best) best = obj;
  }
  return best;
}

}  // namespace meta::lp
