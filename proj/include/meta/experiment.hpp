#pragma once

// File formats and batch drivers behind the command-line tool: instance
// JSON, trace / ledger / sweep CSVs, atomic output and the timing sweep.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "meta/errors.hpp"
#include "meta/metaround.hpp"
#include "meta/online.hpp"
#include "meta/random.hpp"
#include "meta/set_cover.hpp"

namespace meta::io {

using json = nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------- instances

inline json to_json(const setcover::Instance& inst) {
  json j;
  j["m"] = inst.m;
  j["n"] = inst.n;
  std::vector<int> flat(inst.coverage.begin(), inst.coverage.end());
  j["coverage"] = flat;
  j["cost"] = inst.cost;
  j["seed"] = inst.seed;
  return j;
}

inline setcover::Instance instance_from_json(const json& j) {
  setcover::Instance inst;
  try {
    inst.m = j.at("m").get<std::size_t>();
    inst.n = j.at("n").get<std::size_t>();
    for (int v : j.at("coverage").get<std::vector<int>>()) {
      if (v != 0 && v != 1) throw InvalidArgument("coverage entries must be 0 or 1");
      inst.coverage.push_back(static_cast<std::uint8_t>(v));
    }
    inst.cost = j.at("cost").get<std::vector<double>>();
    inst.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed instance: ") + e.what());
  }
  inst.validate();
  return inst;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline setcover::Instance load_instance(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return instance_from_json(j);
}

/// One loss row per line, comma separated; blank lines and '#' lines skipped.
inline std::vector<std::vector<double>> load_loss_rows(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument(path.string() + ": bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ------------------------------------------------------------------ output

/// Fails early when `path` cannot be written: missing parent directory, or an
/// existing file without `force`.
inline void check_output_path(const std::filesystem::path& path, bool force) {
  namespace fs = std::filesystem;
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw IoError("output directory does not exist: " + parent.string());
  if (fs::exists(path)) {
    if (fs::is_directory(path)) throw IoError("output path is a directory: " + path.string());
    if (!force) throw IoError(path.string() + " exists (use --force to overwrite)");
  }
}

/// Writes to a sibling temp file, then renames over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Metarounding trace as CSV; `timing` false writes 0 in the ms column.
inline std::string trace_csv(const std::vector<TraceRecord>& trace, bool timing = true) {
  std::string out = "k,eps_k,hstar,best_oracle,alpha_emp,ms\n";
  for (const auto& r : trace) {
    out += std::to_string(r.k) + ',' + fmt(r.gap) + ',' + fmt(r.hstar) + ',' + fmt(r.best_oracle) + ',' +
           fmt(r.alpha_emp) + ',' + fmt(timing ? r.ms : 0.0) + '\n';
  }
  return out;
}

inline std::string ledger_csv(const online::RegretLedger& ledger, bool timing = true) {
  std::string out = "round,incurred,cumulative,benchmark_lp,benchmark_column,alpha_emp,meta_iters,meta_ms\n";
  for (const auto& r : ledger.rounds) {
    out += std::to_string(r.round) + ',' + fmt(r.incurred) + ',' + fmt(r.cumulative) + ',' +
           fmt(r.benchmark_lp) + ',' + fmt(r.benchmark_column) + ',' + fmt(r.alpha_emp) + ',' +
           std::to_string(r.meta_iters) + ',' + fmt(timing ? r.meta_ms : 0.0) + '\n';
  }
  return out;
}

/// Summary of a single solve: distribution, columns and certificate values.
inline json summary_json(const setcover::Instance& inst, const setcover::RelaxedLp& relaxed,
                         const MetaroundingResult& res, std::uint64_t seed, bool timing = true) {
  json j;
  j["m"] = inst.m;
  j["n"] = inst.n;
  j["instance_seed"] = inst.seed;
  j["seed"] = seed;
  j["lp_value"] = relaxed.value;
  j["x"] = std::vector<double>(relaxed.x.values().begin(), relaxed.x.values().end());
  j["M"] = res.polytope.cap;
  j["epsilon"] = res.epsilon;
  j["eta"] = res.eta;
  j["iterations"] = res.iterations;
  j["max_iterations"] = res.max_iterations;
  j["final_gap"] = res.gaps.empty() ? 0.0 : res.gaps.back();
  j["alpha_emp"] = res.alpha_emp;
  j["unrefined_value"] = res.unrefined_value;
  j["certified_value"] = res.certified_value;
  j["certificate_bound"] = res.alpha_emp + res.epsilon;
  j["certificate_holds"] = res.certified_value <= res.alpha_emp + res.epsilon + 1e-6;
  j["refined"] = res.refined;
  j["lambda"] = res.weights();
  json cols = json::array();
  for (const auto& c : res.columns.columns()) {
    std::vector<std::size_t> sets(c.nonzeros().begin(), c.nonzeros().end());
    cols.push_back(sets);
  }
  j["columns"] = cols;
  j["wall_ms"] = timing ? res.wall_ms : 0.0;
  return j;
}

// ------------------------------------------------------------------- sweep

struct SweepCell {
  std::size_t n = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  std::size_t iters = 0;
  double ms = 0.0;
  double alpha_emp = 0.0;
  double certified_value = 0.0;
  std::string status = "ok";
};

struct SweepConfig {
  std::size_t m = 10;
  std::vector<std::size_t> n_list{10, 50, 100, 200, 500, 1000};
  double epsilon = 0.1;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;  // 0: hardware concurrency
};

/// Instance seed of cell (n, repeat); independent of the job count.
inline std::uint64_t cell_seed(std::uint64_t master, std::size_t n, std::size_t repeat) {
  Rng rng = derive_stream(master, "sweep", {n, repeat});
  return rng();
}

/// Generate, solve the relaxation with the instance costs, metaround.
inline SweepCell run_cell(std::size_t m, std::size_t n, std::size_t repeat, double epsilon, std::uint64_t master) {
  SweepCell cell;
  cell.n = n;
  cell.repeat = repeat;
  cell.seed = cell_seed(master, n, repeat);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto inst = setcover::generate(m, n, setcover::kDefaultDensity, cell.seed);
    const auto relaxed = setcover::relaxed_lp(inst, inst.cost);
    setcover::GreedyOracle oracle(inst);
    MetaroundingConfig cfg;
    cfg.epsilon = epsilon;
    const auto res = metaround(relaxed.x, oracle, cfg);
    cell.iters = res.iterations;
    cell.alpha_emp = res.alpha_emp;
    cell.certified_value = res.certified_value;
  } catch (const IterationLimitExceeded&) {
    cell.status = "iteration_limit";
  } catch (const CertificateViolation&) {
    cell.status = "certificate_violation";
  } catch (const GenerationFailed&) {
    cell.status = "generation_failed";
  } catch (const LpError&) {
    cell.status = "lp_error";
  } catch (const Error&) {
    cell.status = "error";
  }
  cell.ms = online::detail::ms_since(t0);
  return cell;
}

/// Cells ordered by (n, repeat), computed on a worker pool. `log` receives one
/// line per finished cell, serialized.
inline std::vector<SweepCell> run_sweep(const SweepConfig& cfg,
                                        const std::function<void(const SweepCell&)>& log = {}) {
  if (cfg.n_list.empty()) throw InvalidArgument("sweep: empty n list");
  if (cfg.repeats < 1) throw InvalidArgument("sweep: repeats must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("sweep: epsilon must be positive");

  std::vector<SweepCell> cells(cfg.n_list.size() * cfg.repeats);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= cells.size()) return;
      const std::size_t n = cfg.n_list[idx / cfg.repeats];
      const std::size_t rep = idx % cfg.repeats;
      cells[idx] = run_cell(cfg.m, n, rep, cfg.epsilon, cfg.seed);
      if (log) {
        std::lock_guard lock(log_mutex);
        log(cells[idx]);
      }
    }
  };

  std::size_t jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells, bool timing = true) {
  std::string out = "n,repeat,iters,ms,alpha_emp,certified_value,status\n";
  for (const auto& c : cells) {
    out += std::to_string(c.n) + ',' + std::to_string(c.repeat) + ',' + std::to_string(c.iters) + ',' +
           fmt(timing ? c.ms : 0.0) + ',' + fmt(c.alpha_emp) + ',' + fmt(c.certified_value) + ',' + c.status +
           '\n';
  }
  return out;
}

}  // namespace meta::io
