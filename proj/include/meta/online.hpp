#pragma once

// Online combinatorial linear optimization over set covers: online gradient
// descent on the relaxation feeds metarounding each round, and a
// follow-the-perturbed-leader baseline plays through the same loss stream.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meta/errors.hpp"
#include "meta/geometry.hpp"
#include "meta/metaround.hpp"
#include "meta/random.hpp"
#include "meta/set_cover.hpp"

namespace meta::online {

enum class Projection { RelaxedPolytope, Box };

struct OnlineConfig {
  std::size_t rounds = 1000;
  double epsilon = 0.1;
  std::optional<double> step0;  // default 1/sqrt(n)
  // Row t-1 is the loss of round t; when absent losses are i.i.d. U[0,1]^n.
  std::optional<std::vector<std::vector<double>>> losses;
  std::uint64_t seed = 0;
  Projection projection = Projection::RelaxedPolytope;
  bool audit = false;
};

struct RoundRecord {
  std::size_t round = 0;
  CombinatorialVector choice;
  std::vector<double> loss;
  double incurred = 0.0;
  double cumulative = 0.0;
  double benchmark_lp = 0.0;
  double benchmark_column = 0.0;
  double alpha_emp = std::numeric_limits<double>::quiet_NaN();
  std::size_t meta_iters = 0;
  double meta_ms = 0.0;
  // Input handed to metarounding (empty for the baseline).
  std::vector<double> x;
  // linear_max(C lambda*) of that round's distribution.
  double certified_value = std::numeric_limits<double>::quiet_NaN();
};

struct RegretLedger {
  std::vector<RoundRecord> rounds;
  double cumulative = 0.0;
  std::vector<double> cumulative_loss;
  double benchmark_lp = 0.0;      // min_{p in P(C)} p . sum_t l_t
  double benchmark_column = 0.0;  // min over produced columns of c . sum_t l_t
  std::size_t cache_hits = 0;
};

/// Raised when metarounding fails mid-run; carries the rounds completed so far.
class OnlineAborted : public Error {
 public:
  OnlineAborted(const std::string& what, RegretLedger partial) : Error(what), ledger(std::move(partial)) {}
  RegretLedger ledger;
};

using Projector = std::function<std::vector<double>(std::span<const double>)>;

inline Projector box_projector() {
  return [](std::span<const double> y) {
    std::vector<double> x(y.begin(), y.end());
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
  };
}

inline Projector polytope_projector(const setcover::Instance& inst) {
  return [&inst](std::span<const double> y) {
    const RelaxedPoint p = setcover::project(inst, y);
    return std::vector<double>(p.values().begin(), p.values().end());
  };
}

/// projector(x - step * loss)
inline std::vector<double> ogd_step(std::span<const double> x, std::span<const double> loss, double step,
                                    const Projector& projector) {
  if (x.size() != loss.size()) throw DimensionMismatch("ogd_step: dimension");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - step * loss[i];
  return projector(y);
}

struct Regret {
  double lp = 0.0;
  double column = 0.0;
};

/// Cumulative loss minus alpha times each benchmark. The LP benchmark is a
/// lower bound on the best fixed cover, so its regret upper-bounds the true one.
inline Regret alpha_regret(const RegretLedger& ledger, double alpha) {
  return {ledger.cumulative - alpha * ledger.benchmark_lp, ledger.cumulative - alpha * ledger.benchmark_column};
}

/// Regret over the first `t` rounds of a ledger.
inline Regret alpha_regret_at(const RegretLedger& ledger, std::size_t t, double alpha) {
  const RoundRecord& r = ledger.rounds.at(t - 1);
  return {r.cumulative - alpha * r.benchmark_lp, r.cumulative - alpha * r.benchmark_column};
}

namespace detail {

inline void check_config(const setcover::Instance& inst, const OnlineConfig& cfg) {
  inst.validate();
  if (cfg.rounds < 1) throw InvalidArgument("online: need at least one round");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("online: epsilon must be positive");
  if (cfg.step0 && !(*cfg.step0 > 0.0)) throw InvalidArgument("online: step0 must be positive");
  if (cfg.losses) {
    if (cfg.losses->size() < cfg.rounds) throw InvalidArgument("online: loss file has fewer rows than rounds");
    for (const auto& row : *cfg.losses) {
      if (row.size() != inst.n) throw DimensionMismatch("online: loss row dimension");
      for (double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("online: losses must lie in [0,1]");
      }
    }
  }
}

class LossSource {
 public:
  LossSource(const OnlineConfig& cfg, std::size_t n) : cfg_(cfg), n_(n), rng_(derive_stream(cfg.seed, "loss")) {}

  std::vector<double> next(std::size_t round) {
    if (cfg_.losses) return (*cfg_.losses)[round - 1];
    std::vector<double> l(n_);
    for (double& v : l) v = uniform01(rng_);
    return l;
  }

 private:
  const OnlineConfig& cfg_;
  std::size_t n_;
  Rng rng_;
};

// Accumulates rounds and both benchmarks.
class LedgerBuilder {
 public:
  explicit LedgerBuilder(const setcover::Instance& inst) : inst_(inst) {
    ledger_.cumulative_loss.assign(inst.n, 0.0);
  }

  void offer_column(const CombinatorialVector& c) {
    const std::vector<std::int64_t> key(c.entries().begin(), c.entries().end());
    if (!seen_.emplace(key, columns_.size()).second) return;
    columns_.emplace_back(c, c.dot(ledger_.cumulative_loss));
  }

  void record(RoundRecord rec) {
    offer_column(rec.choice);
    rec.incurred = rec.choice.dot(rec.loss);
    ledger_.cumulative += rec.incurred;
    rec.cumulative = ledger_.cumulative;
    for (std::size_t i = 0; i < rec.loss.size(); ++i) ledger_.cumulative_loss[i] += rec.loss[i];
    double best_col = std::numeric_limits<double>::infinity();
    for (auto& [col, total] : columns_) {
      total += col.dot(rec.loss);
      best_col = std::min(best_col, total);
    }
    rec.benchmark_column = best_col;
    rec.benchmark_lp = setcover::relaxed_lp(inst_, ledger_.cumulative_loss).value;
    ledger_.benchmark_column = rec.benchmark_column;
    ledger_.benchmark_lp = rec.benchmark_lp;
    ledger_.rounds.push_back(std::move(rec));
  }

  RegretLedger& ledger() { return ledger_; }

 private:
  const setcover::Instance& inst_;
  RegretLedger ledger_;
  std::vector<std::pair<CombinatorialVector, double>> columns_;
  std::map<std::vector<std::int64_t>, std::size_t> seen_;
};

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Metarounding cache key: x rounded to a 1e-6 grid.
inline std::vector<std::int64_t> cache_key(std::span<const double> x) {
  std::vector<std::int64_t> key(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) key[i] = std::llround(x[i] * 1e6);
  return key;
}

/// OGD on the relaxation with metarounding as the decoder. Round t rounds
/// x_t to the 1e-6 grid (re-repairing coverage in polytope mode), metarounds
/// it (cached by the rounded point), samples c_t, observes l_t and steps
/// x_{t+1} = proj(x_t - step0/sqrt(t) l_t). The learner starts at the
/// all-ones vector, which is feasible in both projection modes.
inline RegretLedger run_online(const setcover::Instance& inst, const OnlineConfig& cfg) {
  detail::check_config(inst, cfg);
  const std::size_t n = inst.n;
  const double step0 = cfg.step0.value_or(1.0 / std::sqrt(static_cast<double>(n)));
  const bool polytope = cfg.projection == Projection::RelaxedPolytope;
  const Projector projector = polytope ? polytope_projector(inst) : box_projector();

  setcover::GreedyOracle oracle(inst);
  detail::LossSource losses(cfg, n);
  Rng sample_rng = derive_stream(cfg.seed, "sample");
  detail::LedgerBuilder book(inst);
  std::map<std::vector<std::int64_t>, MetaroundingResult> cache;

  MetaroundingConfig mcfg;
  mcfg.epsilon = cfg.epsilon;
  mcfg.audit = cfg.audit;

  const std::vector<double> uniform(n, 1.0);
  std::vector<double> x(n, 1.0);
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    RoundRecord rec;
    rec.round = t;

    const auto key = cache_key(x);
    std::vector<double> input(n);
    for (std::size_t i = 0; i < n; ++i) input[i] = static_cast<double>(key[i]) * 1e-6;
    if (polytope) setcover::detail::repair_coverage(inst, input);
    for (double& v : input) v = std::clamp(v, 0.0, 1.0);
    rec.x = input;

    const bool empty = std::none_of(input.begin(), input.end(), [](double v) { return v > 0.0; });
    if (empty) {
      // Box mode can drive x to 0, where L is empty; fall back to the
      // cardinality-greedy cover.
      rec.choice = oracle(uniform);
    } else {
      auto it = cache.find(key);
      if (it == cache.end()) {
        try {
          it = cache.emplace(key, metaround(RelaxedPoint(input), oracle, mcfg)).first;
        } catch (const IterationLimitExceeded& e) {
          throw OnlineAborted(std::string("round ") + std::to_string(t) + ": " + e.what(),
                              std::move(book.ledger()));
        }
      } else {
        ++book.ledger().cache_hits;
      }
      const MetaroundingResult& res = it->second;
      for (const auto& c : res.columns.columns()) book.offer_column(c);
      rec.choice = sample(res, sample_rng);
      rec.alpha_emp = res.alpha_emp;
      rec.meta_iters = res.iterations;
      rec.certified_value = res.certified_value;
    }
    rec.meta_ms = detail::ms_since(t0);
    rec.loss = losses.next(t);
    const std::vector<double> loss = rec.loss;
    book.record(std::move(rec));

    x = ogd_step(x, loss, step0 / std::sqrt(static_cast<double>(t)), projector);
  }
  return std::move(book.ledger());
}

/// Follow the perturbed leader: c_t = greedy(sum_{s<t} l_s + z_t) with
/// z_t ~ U[0, sqrt(t)]^n.
inline RegretLedger run_fpl_baseline(const setcover::Instance& inst, const OnlineConfig& cfg) {
  detail::check_config(inst, cfg);
  const std::size_t n = inst.n;
  setcover::GreedyOracle oracle(inst);
  detail::LossSource losses(cfg, n);
  Rng noise_rng = derive_stream(cfg.seed, "noise");
  detail::LedgerBuilder book(inst);

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const double scale = std::sqrt(static_cast<double>(t));
    std::vector<double> perturbed = book.ledger().cumulative_loss;
    for (double& v : perturbed) v += scale * uniform01(noise_rng);
    RoundRecord rec;
    rec.round = t;
    rec.choice = oracle(perturbed);
    rec.meta_ms = detail::ms_since(t0);
    rec.loss = losses.next(t);
    book.record(std::move(rec));
  }
  return std::move(book.ledger());
}

}  // namespace meta::online
