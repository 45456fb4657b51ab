#pragma once

// Slow reference implementations used only to check the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "meta/geometry.hpp"
#include "meta/set_cover.hpp"

namespace meta::testing {

/// Euclidean projection onto L = {0 <= l <= M, l . x = 1} by bisection on
/// the multiplier of the budget row.
inline std::vector<double> project_onto_L(std::span<const double> v, std::span<const double> x, double cap) {
  const std::size_t n = v.size();
  auto at = [&](double tau) {
    std::vector<double> l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = std::clamp(v[i] - tau * x[i], 0.0, cap);
    return l;
  };
  auto budget = [&](double tau) {
    const auto l = at(tau);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += l[i] * x[i];
    return s;
  };
  double lo = -1.0;
  double hi = 1.0;
  // When M x rounds just below 1 the budget is never reached; stop doubling.
  for (int k = 0; k < 100 && budget(lo) < 1.0; ++k) lo *= 2.0;
  for (int k = 0; k < 100 && budget(hi) > 1.0; ++k) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (budget(mid) > 1.0 ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

inline double smoothed_objective(std::span<const double> l, std::span<const double> theta, std::span<const double> x,
                                 double eta) {
  const double n = static_cast<double>(l.size());
  double v = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    v += l[i] * theta[i];
    const double q = l[i] * x[i];
    if (q > 0.0) v -= q * std::log(n * q) / eta;
  }
  return v;
}

struct SmoothedMax {
  std::vector<double> loss;
  double value = 0.0;
};

/// argmax_{l in L} l . theta - Delta(l)/eta by exact pairwise exchanges.
/// Works on the masses q_i = x_i l_i, which live on {0 <= q <= x M, sum q = 1};
/// each step moves mass between two coordinates to the best split, found by
/// bisection on the derivative. Coordinates with x_i = 0 take M when
/// theta_i > 0.
inline SmoothedMax smoothed_max_reference(std::span<const double> theta, std::span<const double> x, double eta,
                                          int max_sweeps = 100000) {
  const std::size_t n = theta.size();
  double cap = 0.0;
  for (double xi : x) {
    if (xi > 0.0) cap = std::max(cap, 1.0 / xi);
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) idx.push_back(i);
  }
  const std::size_t k = idx.size();
  std::vector<double> ratio(k), u(k), q(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    ratio[j] = theta[idx[j]] / x[idx[j]];
    u[j] = x[idx[j]] * cap;
  }
  // Feasible start: fill coordinates in order up to their caps.
  double left = 1.0;
  for (std::size_t j = 0; j < k; ++j) {
    q[j] = std::min(u[j], left);
    left -= q[j];
  }
  const double dn = static_cast<double>(n);
  auto slope = [&](std::size_t j, double v) { return ratio[j] - (std::log(dn * v) + 1.0) / eta; };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        // t moves mass from b to a; the derivative in t is decreasing.
        double lo = std::max(-q[a], q[b] - u[b]);
        double hi = std::min(u[a] - q[a], q[b]);
        if (hi - lo <= 0.0) continue;
        for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
          const double t = 0.5 * (lo + hi);
          if (t == lo || t == hi) break;
          (slope(a, q[a] + t) > slope(b, q[b] - t) ? lo : hi) = t;
        }
        const double t = 0.5 * (lo + hi);
        moved = std::max(moved, std::abs(t));
        q[a] += t;
        q[b] -= t;
      }
    }
    if (moved < 1e-16) break;
  }
  SmoothedMax out;
  out.loss.assign(n, 0.0);
  for (std::size_t j = 0; j < k; ++j) out.loss[idx[j]] = q[j] / x[idx[j]];
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] == 0.0 && theta[i] > 0.0) out.loss[i] = cap;
  }
  out.value = smoothed_objective(out.loss, theta, x, eta);
  return out;
}

/// Best point of {lambda in simplex^2} for a function of lambda_1 on a grid.
template <class F>
double grid_min_1simplex(F f, double resolution) {
  double best = std::numeric_limits<double>::infinity();
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  for (std::size_t k = 0; k <= steps; ++k) best = std::min(best, f(static_cast<double>(k) * resolution));
  return best;
}

/// min ||z - y||^2 over {z in [0,1]^3 : A z >= 1} by a coarse grid followed
/// by a fine grid around the coarse winner.
inline std::vector<double> grid_project3(const setcover::Instance& inst, std::span<const double> y, double fine) {
  auto dist = [&](const std::vector<double>& z) {
    double d = 0.0;
    for (std::size_t i = 0; i < 3; ++i) d += (z[i] - y[i]) * (z[i] - y[i]);
    return d;
  };
  auto search = [&](std::vector<double> centre, double half, double h) {
    std::vector<double> best;
    double best_d = std::numeric_limits<double>::infinity();
    const auto steps = static_cast<int>(std::llround(2.0 * half / h));
    std::vector<double> z(3);
    for (int a = 0; a <= steps; ++a) {
      z[0] = centre[0] - half + a * h;
      for (int b = 0; b <= steps; ++b) {
        z[1] = centre[1] - half + b * h;
        for (int c = 0; c <= steps; ++c) {
          z[2] = centre[2] - half + c * h;
          if (!inst.in_relaxation(z, 1e-12)) continue;
          const double d = dist(z);
          if (d < best_d) {
            best_d = d;
            best = z;
          }
        }
      }
    }
    return best;
  };
  const auto coarse = search({0.5, 0.5, 0.5}, 0.5, 0.01);
  return search(coarse, 0.02, fine);
}

/// Sets S1 = {1,2}, S2 = {2,3}, S3 = {1,3} over three items, unit costs.
inline setcover::Instance triangle_instance() {
  setcover::Instance inst;
  inst.m = 3;
  inst.n = 3;
  inst.coverage = {1, 0, 1,   // item 1 in S1, S3
                   1, 1, 0,   // item 2 in S1, S2
                   0, 1, 1};  // item 3 in S2, S3
  inst.cost = {1.0, 1.0, 1.0};
  return inst;
}

}  // namespace meta::testing
