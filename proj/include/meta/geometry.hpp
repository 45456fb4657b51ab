#pragma once

// Capped dual polytope L = { l in [0, M]^n : l . x = 1 }, the weighted
// relative entropy over it, and the smoothed conjugate used as the link
// function of the metarounding engine.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meta/errors.hpp"

namespace meta {

inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kCapBindTol = 1e-12;

/// A fractional point x in [0,1]^n, typically an element of relax(C).
class RelaxedPoint {
 public:
  RelaxedPoint() = default;

  /// Entries within 1e-9 of [0,1] are clamped; anything further out throws.
  explicit RelaxedPoint(std::vector<double> x) : x_(std::move(x)) {
    for (double& v : x_) {
      if (!std::isfinite(v) || v < -kMembershipTol || v > 1.0 + kMembershipTol) {
        throw InvalidArgument("relaxed point entry outside [0,1]: " + std::to_string(v));
      }
      v = std::clamp(v, 0.0, 1.0);
    }
  }

  std::size_t size() const { return x_.size(); }
  double operator[](std::size_t i) const { return x_[i]; }
  std::span<const double> values() const { return x_; }

  bool has_positive() const {
    return std::any_of(x_.begin(), x_.end(), [](double v) { return v > 0.0; });
  }

  friend bool operator==(const RelaxedPoint&, const RelaxedPoint&) = default;

 private:
  std::vector<double> x_;
};

/// A column c in N^n. Keeps its nonzero pattern and max entry cached.
class CombinatorialVector {
 public:
  CombinatorialVector() = default;

  explicit CombinatorialVector(std::vector<std::int64_t> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i] < 0) throw InvalidArgument("combinatorial vector entries must be >= 0");
      if (entries_[i] != 0) nonzeros_.push_back(i);
      d_inf_ = std::max(d_inf_, entries_[i]);
    }
  }

  std::size_t size() const { return entries_.size(); }
  std::int64_t operator[](std::size_t i) const { return entries_[i]; }
  std::span<const std::int64_t> entries() const { return entries_; }
  std::span<const std::size_t> nonzeros() const { return nonzeros_; }
  std::int64_t d_inf() const { return d_inf_; }

  double dot(std::span<const double> v) const {
    double s = 0.0;
    for (std::size_t i : nonzeros_) s += static_cast<double>(entries_[i]) * v[i];
    return s;
  }

  std::vector<double> as_doubles() const { return {entries_.begin(), entries_.end()}; }

  friend bool operator==(const CombinatorialVector& a, const CombinatorialVector& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::int64_t> entries_;
  std::vector<std::size_t> nonzeros_;
  std::int64_t d_inf_ = 0;
};

/// The capped dual feasible set for a fixed x.
struct LossPolytope {
  RelaxedPoint x;
  double cap = 0.0;  // M = max{1/x_i : x_i > 0}
  std::vector<std::size_t> support;
  std::vector<std::size_t> zeros;

  std::size_t dimension() const { return x.size(); }

  /// Box [0, M] and budget |l.x - 1| within tol.
  bool contains(std::span<const double> loss, double tol = kMembershipTol) const {
    if (loss.size() != dimension()) return false;
    double budget = 0.0;
    for (std::size_t i = 0; i < loss.size(); ++i) {
      if (!(loss[i] >= -tol && loss[i] <= cap + tol)) return false;
      budget += loss[i] * x[i];
    }
    return std::abs(budget - 1.0) <= tol;
  }
};

inline LossPolytope build_polytope(const RelaxedPoint& x) {
  LossPolytope poly;
  poly.x = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0) {
      poly.support.push_back(i);
      poly.cap = std::max(poly.cap, 1.0 / x[i]);
    } else {
      poly.zeros.push_back(i);
    }
  }
  if (poly.support.empty()) throw EmptyPolytope("relaxed point has no positive coordinate");
  return poly;
}

namespace detail {

inline void require_dimension(std::span<const double> v, const LossPolytope& poly, const char* what) {
  if (v.size() != poly.dimension()) {
    throw DimensionMismatch(std::string(what) + ": expected dimension " +
                            std::to_string(poly.dimension()) + ", got " + std::to_string(v.size()));
  }
}

// sum_i q_i ln(n q_i) for a mass vector q; zero entries contribute nothing.
inline double relative_entropy_to_uniform(std::span<const double> mass, std::size_t n) {
  const double log_n = std::log(static_cast<double>(n));
  double d = 0.0;
  for (double q : mass) {
    if (q > 0.0) d += q * (std::log(q) + log_n);
  }
  return d;
}

}  // namespace detail

/// Weighted relative entropy Delta(l) = sum_i l_i x_i ln(n l_i x_i).
inline double entropy(std::span<const double> loss, const LossPolytope& poly) {
  detail::require_dimension(loss, poly, "entropy");
  if (!poly.contains(loss)) throw NotInPolytope("loss vector is not a member of L");
  std::vector<double> mass(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) mass[i] = std::max(0.0, loss[i]) * poly.x[i];
  return detail::relative_entropy_to_uniform(mass, loss.size());
}

struct LinearMax {
  double value = 0.0;
  std::vector<double> argmax;
};

/// Exact max of l . theta over L. Zero coordinates take M when theta_i > 0;
/// the support is a fractional knapsack by theta_i / x_i, ties to lower index.
inline LinearMax linear_max(std::span<const double> theta, const LossPolytope& poly) {
  detail::require_dimension(theta, poly, "linear_max");
  const double cap = poly.cap;
  LinearMax out;
  out.argmax.assign(theta.size(), 0.0);

  for (std::size_t i : poly.zeros) {
    if (theta[i] > 0.0) out.argmax[i] = cap;
  }

  std::vector<std::size_t> order(poly.support);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return theta[a] / poly.x[a] > theta[b] / poly.x[b];
  });

  double budget = 1.0;
  for (std::size_t i : order) {
    if (budget <= 0.0) break;
    const double full = cap * poly.x[i];
    if (full <= budget) {
      out.argmax[i] = cap;
      budget -= full;
    } else {
      out.argmax[i] = budget / poly.x[i];
      budget = 0.0;
    }
  }

  for (std::size_t i = 0; i < theta.size(); ++i) out.value += out.argmax[i] * theta[i];
  return out;
}

/// Maximizer of l . theta - Delta(l) / eta over L.
///
/// On the support the substitution q_i = l_i x_i turns this into a Gibbs
/// distribution q_i ~ exp(eta theta_i / x_i) on the simplex with caps
/// q_i <= M x_i. Caps are found by water-filling: clamp every coordinate
/// whose uncapped mass reaches its cap, renormalize the rest over the
/// residual budget, repeat until no new cap binds. Clamping only ever
/// raises the mass of the remaining coordinates, so a clamped coordinate
/// stays clamped and the loop runs at most |support| passes.
/// Coordinates outside the support get l_i = M.
inline std::vector<double> grad_hstar(std::span<const double> theta, const LossPolytope& poly,
                                      double eta) {
  detail::require_dimension(theta, poly, "grad_hstar");
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");

  const double cap = poly.cap;
  std::vector<double> loss(theta.size(), 0.0);
  for (std::size_t i : poly.zeros) loss[i] = cap;

  const std::size_t s = poly.support.size();
  std::vector<double> logit(s);
  std::vector<char> clamped(s, 0);
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t i = poly.support[k];
    logit[k] = eta * theta[i] / poly.x[i];
  }

  std::vector<double> mass(s, 0.0);
  double residual = 1.0;
  for (std::size_t pass = 0; pass <= s; ++pass) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s; ++k) {
      if (!clamped[k]) top = std::max(top, logit[k]);
    }
    if (residual <= 0.0 || top == -std::numeric_limits<double>::infinity()) {
      // Every remaining coordinate is priced out: all caps bind.
      for (std::size_t k = 0; k < s; ++k) {
        if (!clamped[k]) mass[k] = 0.0;
      }
      break;
    }
    double z = 0.0;
    for (std::size_t k = 0; k < s; ++k) {
      if (!clamped[k]) z += std::exp(logit[k] - top);
    }
    bool newly_clamped = false;
    for (std::size_t k = 0; k < s; ++k) {
      if (clamped[k]) continue;
      mass[k] = residual * std::exp(logit[k] - top) / z;
      const double limit = cap * poly.x[poly.support[k]];
      if (mass[k] >= limit - kCapBindTol) {
        clamped[k] = 1;
        newly_clamped = true;
      }
    }
    if (!newly_clamped) break;
    residual = 1.0;
    for (std::size_t k = 0; k < s; ++k) {
      if (clamped[k]) {
        mass[k] = cap * poly.x[poly.support[k]];
        residual -= mass[k];
      }
    }
  }

  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t i = poly.support[k];
    loss[i] = clamped[k] ? cap : mass[k] / poly.x[i];
  }
  return loss;
}

/// Value and maximizer of the smoothed conjugate at theta.
struct Conjugate {
  double value = 0.0;
  std::vector<double> loss;
};

inline Conjugate conjugate(std::span<const double> theta, const LossPolytope& poly, double eta) {
  Conjugate out;
  out.loss = grad_hstar(theta, poly, eta);
  std::vector<double> mass(out.loss.size());
  double linear = 0.0;
  for (std::size_t i = 0; i < out.loss.size(); ++i) {
    linear += out.loss[i] * theta[i];
    mass[i] = out.loss[i] * poly.x[i];
  }
  out.value = linear - detail::relative_entropy_to_uniform(mass, out.loss.size()) / eta;
  return out;
}

/// H*(theta) = l* . theta - Delta(l*) / eta with l* = grad_hstar(theta).
inline double hstar_value(std::span<const double> theta, const LossPolytope& poly, double eta) {
  return conjugate(theta, poly, eta).value;
}

}  // namespace meta
