#pragma once

// Metarounding by entropy-regularized column generation.
//
// Given x in relax(C) and a relax-based approximation oracle, builds a
// distribution lambda over oracle outputs such that for every l in L
//   E_{c ~ lambda}[c] . l <= (alpha_emp + eps) x . l,
// where alpha_emp = max_k l_k . c_{k+1} is the best oracle response seen.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meta/errors.hpp"
#include "meta/geometry.hpp"
#include "meta/random.hpp"
#include "meta/simplex_lp.hpp"

namespace meta {

/// c = oracle(l) must satisfy c . l <= alpha * min_{p in relax(C)} p . l.
template <class O>
concept ApproxOracle = requires(O& oracle, std::span<const double> loss) {
  { oracle.dimension() } -> std::convertible_to<std::size_t>;
  { oracle(loss) } -> std::convertible_to<CombinatorialVector>;
};

template <class O>
std::optional<double> declared_alpha(const O& oracle) {
  if constexpr (requires { { oracle.declared_alpha() } -> std::convertible_to<std::optional<double>>; }) {
    return oracle.declared_alpha();
  } else {
    return std::nullopt;
  }
}

/// The matrix C^(k) of collected oracle outputs with simplex weights.
class ColumnSet {
 public:
  ColumnSet() = default;
  explicit ColumnSet(std::size_t dimension) : dimension_(dimension) {}

  /// Appends c with weight 0, or returns the index of an equal column.
  std::size_t add(CombinatorialVector c) {
    if (c.size() != dimension_) throw DimensionMismatch("column dimension differs from column set");
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j] == c) return j;
    }
    d_inf_ = std::max(d_inf_, c.d_inf());
    columns_.push_back(std::move(c));
    weights_.push_back(columns_.size() == 1 ? 1.0 : 0.0);
    return columns_.size() - 1;
  }

  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  std::size_t dimension() const { return dimension_; }
  std::int64_t d_inf() const { return d_inf_; }
  const CombinatorialVector& operator[](std::size_t j) const { return columns_[j]; }
  const std::vector<CombinatorialVector>& columns() const { return columns_; }
  const std::vector<double>& weights() const { return weights_; }

  void set_weights(std::vector<double> w) {
    if (w.size() != columns_.size()) throw DimensionMismatch("weight count differs from column count");
    weights_ = std::move(w);
  }

  /// C w
  std::vector<double> combine(std::span<const double> w) const {
    std::vector<double> theta(dimension_, 0.0);
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (w[j] == 0.0) continue;
      const auto& c = columns_[j];
      for (std::size_t i : c.nonzeros()) theta[i] += w[j] * static_cast<double>(c[i]);
    }
    return theta;
  }

  std::vector<double> mixture() const { return combine(weights_); }

  /// C^T l
  std::vector<double> transpose_times(std::span<const double> loss) const {
    std::vector<double> g(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) g[j] = columns_[j].dot(loss);
    return g;
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<CombinatorialVector> columns_;
  std::vector<double> weights_;
  std::int64_t d_inf_ = 0;
};

/// One row of the per-iteration trace.
struct TraceRecord {
  std::size_t k = 0;
  double gap = 0.0;    // eps_k, +inf at k = 0
  double hstar = 0.0;  // H*(C^(k) lambda_k), +inf at k = 0
  double best_oracle = 0.0;
  double alpha_emp = 0.0;
  double ms = 0.0;
};

struct MetaroundingConfig {
  double epsilon = 0.1;
  std::optional<double> eta;  // default 2 ln(n) / eps
  std::optional<std::size_t> max_iterations;  // default ceil(16 eta D^2 / eps)
  double d_inf_bound = 1.0;
  std::optional<double> inner_tol;  // default eps / 20
  std::size_t inner_max_iterations = 200;
  bool refine = true;
  // Re-checks l_k in L on every iteration.
  bool audit = false;
  // Re-checks eps_k <= 8 eta D^2/(k+2) on every iteration. The bound rests on
  // H* being eta-smooth in theta, which holds when M <= 2; for larger M
  // (tiny positive x_i) it can legitimately fail.
  bool audit_gap_bound = false;
  std::function<void(const TraceRecord&)> trace_sink;
};

/// eta = 2 ln(n) / eps. For n = 1 the entropy term vanishes identically, so
/// any positive eta is exact; 1/eps is used.
inline double default_eta(std::size_t n, double epsilon) {
  return n > 1 ? 2.0 * std::log(static_cast<double>(n)) / epsilon : 1.0 / epsilon;
}

inline std::size_t iteration_bound(double eta, double d_inf, double epsilon) {
  return static_cast<std::size_t>(std::ceil(16.0 * eta * d_inf * d_inf / epsilon));
}

struct MetaroundingResult {
  LossPolytope polytope;
  ColumnSet columns;  // weights hold the final lambda*
  std::vector<double> unrefined_weights;
  std::vector<double> gaps;  // eps_0 .. eps_K
  std::vector<TraceRecord> trace;
  double alpha_emp = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  std::size_t iterations = 0;  // K
  std::size_t max_iterations = 0;
  double unrefined_value = 0.0;  // linear_max(C lambda_K)
  double certified_value = 0.0;  // linear_max(C lambda*)
  bool refined = false;          // lambda* came from the refinement LP
  double wall_ms = 0.0;

  const std::vector<double>& weights() const { return columns.weights(); }
  std::vector<double> expectation() const { return columns.mixture(); }
};

/// eps_k = H*(C lambda) - best oracle value so far.
inline double gap(const ColumnSet& columns, const LossPolytope& poly, double eta, double best_oracle_value) {
  if (columns.empty()) throw InvalidArgument("gap needs at least one column");
  return hstar_value(columns.mixture(), poly, eta) - best_oracle_value;
}

/// Euclidean projection onto the probability simplex (Michelot's method:
/// drop coordinates below the running threshold until none remain).
inline std::vector<double> project_simplex(std::span<const double> v) {
  std::vector<double> active(v.begin(), v.end());
  double tau = 0.0;
  for (;;) {
    double sum = 0.0;
    for (double a : active) sum += a;
    tau = (sum - 1.0) / static_cast<double>(active.size());
    const auto keep = std::remove_if(active.begin(), active.end(), [tau](double a) { return a <= tau; });
    if (keep == active.end()) break;
    active.erase(keep, active.end());
  }
  std::vector<double> w(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) w[j] = std::max(0.0, v[j] - tau);
  return w;
}

struct CorrectiveStep {
  std::vector<double> weights;
  double objective = 0.0;  // H*(C weights)
  std::vector<double> loss;  // grad H*(C weights), the next query point
  double safeguard_objective = 0.0;
  double inner_objective = 0.0;
  std::size_t inner_iterations = 0;
  bool used_safeguard = false;
};

/// Fully-corrective weight update, safeguarded by the Frank-Wolfe point
/// lambda_bar = lambda + mu (e_new - lambda) with mu = 2/(k+2). The inner
/// solver is accelerated projected gradient with backtracking, warm-started
/// at lambda_bar; whichever of the two has the lower H* is returned.
/// `columns.weights()` must hold lambda_k padded with zeros.
inline CorrectiveStep corrective_step(const ColumnSet& columns, std::size_t new_index, std::size_t k,
                                      const LossPolytope& poly, double eta, double inner_tol,
                                      std::size_t inner_max_iterations = 200) {
  const std::size_t K = columns.size();
  if (new_index >= K) throw InvalidArgument("new column index out of range");

  CorrectiveStep out;
  if (K == 1) {
    out.weights = {1.0};
    const auto conj = conjugate(columns.combine(out.weights), poly, eta);
    out.objective = out.safeguard_objective = out.inner_objective = conj.value;
    out.loss = conj.loss;
    out.used_safeguard = true;
    return out;
  }

  const double mu = 2.0 / (static_cast<double>(k) + 2.0);
  std::vector<double> safeguard(columns.weights());
  for (double& w : safeguard) w *= (1.0 - mu);
  safeguard[new_index] += mu;

  const auto eval = [&](const std::vector<double>& w) { return conjugate(columns.combine(w), poly, eta); };

  const Conjugate at_safeguard = eval(safeguard);
  out.safeguard_objective = at_safeguard.value;

  // Accelerated projected gradient: backtracking on the quadratic upper
  // model, momentum restarted whenever the objective goes up.
  std::vector<double> w = safeguard;
  Conjugate cur = at_safeguard;
  std::vector<double> g = columns.transpose_times(cur.loss);
  std::vector<double> y = w;
  Conjugate at_y = cur;
  std::vector<double> gy = g;
  std::vector<double> trial(K);
  double momentum = 1.0;
  double step = 1.0;
  std::size_t it = 0;
  for (; it < inner_max_iterations; ++it) {
    double gw = 0.0;
    for (std::size_t j = 0; j < K; ++j) gw += g[j] * w[j];
    const double fw_gap = gw - *std::min_element(g.begin(), g.end());
    if (fw_gap <= inner_tol) break;

    bool accepted = false;
    Conjugate next;
    while (step > 1e-14) {
      for (std::size_t j = 0; j < K; ++j) trial[j] = y[j] - step * gy[j];
      trial = project_simplex(trial);
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        const double d = trial[j] - y[j];
        lin += gy[j] * d;
        sq += d * d;
      }
      if (sq == 0.0) break;  // y is stationary for this step
      next = eval(trial);
      if (next.value <= at_y.value + lin + sq / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (y == w) break;
      // Stalled at an extrapolated point: restart from the iterate.
      y = w;
      at_y = cur;
      gy = g;
      momentum = 1.0;
      continue;
    }

    if (next.value > cur.value) {
      y = w;
      at_y = cur;
      gy = g;
      momentum = 1.0;
      continue;
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next_momentum;
    momentum = next_momentum;
    for (std::size_t j = 0; j < K; ++j) y[j] = trial[j] + beta * (trial[j] - w[j]);
    w = trial;
    cur = std::move(next);
    g = columns.transpose_times(cur.loss);
    if (beta == 0.0) {
      at_y = cur;
      gy = g;
    } else {
      for (double& v : y) v = std::max(0.0, v);
      double total = 0.0;
      for (double v : y) total += v;
      for (double& v : y) v /= total;
      at_y = eval(y);
      gy = columns.transpose_times(at_y.loss);
    }
    step *= 2.0;
  }
  out.inner_iterations = it;
  out.inner_objective = cur.value;

  if (cur.value <= at_safeguard.value) {
    out.weights = std::move(w);
    out.objective = cur.value;
    out.loss = std::move(cur.loss);
  } else {
    out.weights = std::move(safeguard);
    out.objective = at_safeguard.value;
    out.loss = at_safeguard.loss;
    out.used_safeguard = true;
  }
  return out;
}

struct Refinement {
  std::vector<double> weights;
  double value = 0.0;  // linear_max(C weights)
  bool improved = false;
  std::string failure;  // set when the LP could not be used
};

/// Minimizes max_{l in L} l . C lambda over the simplex exactly, as the LP
///   min mu + M sum_i s_i  s.t.  mu x_i + s_i >= (C lambda)_i,  lambda in simplex,
///   mu >= 0, s >= 0,
/// over the coordinates touched by some column (the others are slack).
/// Returns whichever of the LP solution and the current weights certifies the
/// smaller value.
inline Refinement refine(const ColumnSet& columns, const LossPolytope& poly) {
  if (columns.empty()) throw InvalidArgument("refine needs at least one column");
  const std::size_t K = columns.size();

  Refinement out;
  out.weights = columns.weights();
  out.value = linear_max(columns.mixture(), poly).value;
  if (K == 1) return out;

  std::vector<char> touched(columns.dimension(), 0);
  for (const auto& c : columns.columns()) {
    for (std::size_t i : c.nonzeros()) touched[i] = 1;
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (touched[i]) rows.push_back(i);
  }

  // variables: [lambda_1..lambda_K | mu | s_r for r in rows]
  const std::size_t nv = K + 1 + rows.size();
  lp::LinearProgram prog;
  prog.objective.assign(nv, 0.0);
  prog.objective[K] = 1.0;
  for (std::size_t r = 0; r < rows.size(); ++r) prog.objective[K + 1 + r] = poly.cap;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t i = rows[r];
    std::vector<double> a(nv, 0.0);
    for (std::size_t j = 0; j < K; ++j) a[j] = -static_cast<double>(columns[j][i]);
    a[K] = poly.x[i];
    a[K + 1 + r] = 1.0;
    prog.add_row(std::move(a), lp::Sense::GreaterEqual, 0.0);
  }
  {
    std::vector<double> a(nv, 0.0);
    std::fill(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(K), 1.0);
    prog.add_row(std::move(a), lp::Sense::Equal, 1.0);
  }

  try {
    const auto sol = lp::solve(prog);
    if (sol.status != lp::Status::Optimal) {
      out.failure = std::string("refinement LP ") + lp::to_string(sol.status);
      return out;
    }
    std::vector<double> w(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(K));
    double total = 0.0;
    for (double& v : w) {
      v = std::max(0.0, v);
      total += v;
    }
    if (!(total > 0.0)) {
      out.failure = "refinement LP returned zero weights";
      return out;
    }
    for (double& v : w) v /= total;
    const double value = linear_max(columns.combine(w), poly).value;
    if (value < out.value) {
      out.weights = std::move(w);
      out.value = value;
      out.improved = true;
    }
  } catch (const LpError& e) {
    out.failure = e.what();
  }
  return out;
}

namespace detail {

// l_0 = 1/(sum_i x_i) on every coordinate. This never exceeds M because
// sum_i x_i >= min_{x_i > 0} x_i, and it meets the budget exactly.
inline std::vector<double> initial_loss(const LossPolytope& poly) {
  double total = 0.0;
  for (double v : poly.x.values()) total += v;
  return std::vector<double>(poly.dimension(), std::min(poly.cap, 1.0 / total));
}

}  // namespace detail

template <ApproxOracle Oracle>
MetaroundingResult metaround(const RelaxedPoint& x, Oracle& oracle, const MetaroundingConfig& cfg = {}) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  const std::size_t n = x.size();
  if (static_cast<std::size_t>(oracle.dimension()) != n) {
    throw DimensionMismatch("oracle dimension " + std::to_string(oracle.dimension()) +
                            " differs from x dimension " + std::to_string(n));
  }
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");

  MetaroundingResult res;
  res.polytope = build_polytope(x);
  res.epsilon = cfg.epsilon;
  res.eta = cfg.eta.value_or(default_eta(n, cfg.epsilon));
  if (!(res.eta > 0.0)) throw InvalidArgument("eta must be positive");
  const double inner_tol = cfg.inner_tol.value_or(cfg.epsilon / 20.0);
  const bool guarantee_claimed = res.eta >= default_eta(n, cfg.epsilon) * (1.0 - 1e-12);
  const LossPolytope& poly = res.polytope;

  ColumnSet& cols = res.columns;
  cols = ColumnSet(n);
  std::vector<double> loss = detail::initial_loss(poly);
  double best = -std::numeric_limits<double>::infinity();
  double current_hstar = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0;; ++k) {
    if (cfg.audit && !poly.contains(loss)) {
      throw CertificateViolation("query loss l_" + std::to_string(k) + " left the polytope");
    }
    CombinatorialVector c = oracle(std::span<const double>(loss));
    if (c.size() != n) throw DimensionMismatch("oracle returned a column of the wrong dimension");
    best = std::max(best, c.dot(loss));

    const double gap_k = k == 0 ? std::numeric_limits<double>::infinity() : current_hstar - best;
    const double d_inf = std::max(cfg.d_inf_bound, static_cast<double>(std::max(cols.d_inf(), c.d_inf())));
    res.max_iterations = cfg.max_iterations.value_or(iteration_bound(res.eta, d_inf, cfg.epsilon));

    TraceRecord rec{k, gap_k, current_hstar, best, best, elapsed_ms()};
    res.gaps.push_back(gap_k);
    res.trace.push_back(rec);
    if (cfg.trace_sink) cfg.trace_sink(rec);

    if (cfg.audit_gap_bound && k >= 1) {
      const double bound = 8.0 * res.eta * d_inf * d_inf / (static_cast<double>(k) + 2.0);
      if (gap_k > bound + 1e-9) {
        throw CertificateViolation("gap " + std::to_string(gap_k) + " exceeds bound " + std::to_string(bound) +
                                   " at k = " + std::to_string(k));
      }
    }

    if (gap_k <= cfg.epsilon / 2.0) {
      res.iterations = k;
      cols.add(std::move(c));
      break;
    }
    if (k >= res.max_iterations) {
      throw IterationLimitExceeded("metarounding hit " + std::to_string(res.max_iterations) +
                                   " iterations with gap " + std::to_string(gap_k));
    }

    const std::size_t idx = cols.add(std::move(c));
    auto step = corrective_step(cols, idx, k, poly, res.eta, inner_tol, cfg.inner_max_iterations);
    cols.set_weights(std::move(step.weights));
    current_hstar = step.objective;
    loss = std::move(step.loss);
  }

  res.alpha_emp = best;
  res.unrefined_weights = cols.weights();
  res.unrefined_value = linear_max(cols.mixture(), poly).value;
  res.certified_value = res.unrefined_value;

  if (guarantee_claimed && res.unrefined_value > res.alpha_emp + cfg.epsilon + 1e-9 * std::max(1.0, res.alpha_emp)) {
    throw CertificateViolation("linear_max(C lambda) = " + std::to_string(res.unrefined_value) +
                               " exceeds alpha_emp + eps = " + std::to_string(res.alpha_emp + cfg.epsilon));
  }

  if (cfg.refine) {
    Refinement ref = refine(cols, poly);
    if (!ref.failure.empty()) {
      std::clog << "warning: refinement skipped: " << ref.failure << '\n';
    }
    if (ref.improved) {
      cols.set_weights(std::move(ref.weights));
      res.certified_value = ref.value;
      res.refined = true;
    }
  }

  res.wall_ms = elapsed_ms();
  return res;
}

/// Draws one column with probability lambda*_j.
inline const CombinatorialVector& sample(const MetaroundingResult& result, Rng& rng) {
  const auto& w = result.weights();
  const double u = uniform01(rng);
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (w[j] <= 0.0) continue;
    last = j;
    cum += w[j];
    if (u < cum) return result.columns[j];
  }
  return result.columns[last];
}

}  // namespace meta
