// meta: instance generation, single metarounding solves, online runs and the
// running-time sweep.
//
//   meta gen    --m 10 --n 100 --seed 42 --out inst.json
//   meta solve  --instance inst.json --eps 0.1 --trace trace.csv --summary summary.json
//   meta online --instance inst.json --T 5000 --mode metaround --out ledger.csv
//   meta sweep  --n-list 10,50,100,200,500,1000 --repeats 3 --out sweep.csv

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meta/experiment.hpp"

using namespace meta;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool no_timing = false;
};

std::uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("META_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument(std::string("META_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "master seed (overrides META_SEED)");
  cmd->add_flag("--force", c.force, "overwrite existing outputs");
  cmd->add_flag("--no-timing", c.no_timing, "write 0 in timing fields so outputs are byte-reproducible");
}

struct GenArgs {
  std::size_t m = 10;
  std::size_t n = 100;
  double density = setcover::kDefaultDensity;
  std::string out;
};

int cmd_gen(const GenArgs& a, const Common& c) {
  io::check_output_path(a.out, c.force);
  const auto inst = setcover::generate(a.m, a.n, a.density, resolve_seed(c));
  io::write_atomic(a.out, io::to_json(inst).dump() + "\n");
  std::cerr << "wrote " << a.out << " (m=" << inst.m << ", n=" << inst.n << ")\n";
  return 0;
}

struct SolveArgs {
  std::string instance;
  double eps = 0.1;
  std::string trace;
  std::string summary;
};

int cmd_solve(const SolveArgs& a, const Common& c) {
  if (!a.trace.empty()) io::check_output_path(a.trace, c.force);
  if (!a.summary.empty()) io::check_output_path(a.summary, c.force);
  const auto inst = io::load_instance(a.instance);
  const std::uint64_t seed = resolve_seed(c);

  const auto relaxed = setcover::relaxed_lp(inst, inst.cost);
  setcover::GreedyOracle oracle(inst);
  MetaroundingConfig cfg;
  cfg.epsilon = a.eps;
  const auto res = metaround(relaxed.x, oracle, cfg);

  const bool timing = !c.no_timing;
  if (!a.trace.empty()) io::write_atomic(a.trace, io::trace_csv(res.trace, timing));
  const std::string summary = io::summary_json(inst, relaxed, res, seed, timing).dump(2) + "\n";
  if (a.summary.empty()) {
    std::cout << summary;
  } else {
    io::write_atomic(a.summary, summary);
  }
  std::cerr << "K=" << res.iterations << " alpha_emp=" << io::fmt(res.alpha_emp)
            << " certified=" << io::fmt(res.certified_value) << "\n";
  return 0;
}

struct OnlineArgs {
  std::string instance;
  std::size_t rounds = 1000;
  double eps = 0.1;
  std::string mode = "metaround";
  std::string projection = "polytope";
  std::optional<double> step0;
  std::string losses;
  std::string out;
};

int cmd_online(const OnlineArgs& a, const Common& c) {
  io::check_output_path(a.out, c.force);
  const auto inst = io::load_instance(a.instance);
  online::OnlineConfig cfg;
  cfg.rounds = a.rounds;
  cfg.epsilon = a.eps;
  cfg.step0 = a.step0;
  cfg.seed = resolve_seed(c);
  cfg.projection = a.projection == "box" ? online::Projection::Box : online::Projection::RelaxedPolytope;
  if (!a.losses.empty()) cfg.losses = io::load_loss_rows(a.losses);

  const bool timing = !c.no_timing;
  online::RegretLedger ledger;
  try {
    ledger = a.mode == "fpl" ? online::run_fpl_baseline(inst, cfg) : online::run_online(inst, cfg);
  } catch (const online::OnlineAborted& e) {
    io::write_atomic(a.out, io::ledger_csv(e.ledger, timing));
    std::cerr << "aborted: " << e.what() << " (partial ledger written)\n";
    return 1;
  }
  io::write_atomic(a.out, io::ledger_csv(ledger, timing));
  const auto regret = online::alpha_regret(ledger, 1.0);
  std::cerr << "T=" << ledger.rounds.size() << " cumulative=" << io::fmt(ledger.cumulative)
            << " regret_lp=" << io::fmt(regret.lp) << " regret_column=" << io::fmt(regret.column)
            << " cache_hits=" << ledger.cache_hits << "\n";
  return 0;
}

struct SweepArgs {
  std::size_t m = 10;
  std::vector<std::size_t> n_list{10, 50, 100, 200, 500, 1000};
  double eps = 0.1;
  std::size_t repeats = 1;
  std::size_t jobs = 0;
  std::string out;
};

int cmd_sweep(const SweepArgs& a, const Common& c) {
  io::check_output_path(a.out, c.force);
  io::SweepConfig cfg;
  cfg.m = a.m;
  cfg.n_list = a.n_list;
  cfg.epsilon = a.eps;
  cfg.repeats = a.repeats;
  cfg.seed = resolve_seed(c);
  cfg.jobs = a.jobs;
  const auto cells = io::run_sweep(cfg, [](const io::SweepCell& cell) {
    std::cerr << "n=" << cell.n << " repeat=" << cell.repeat << " iters=" << cell.iters
              << " ms=" << io::fmt(cell.ms) << " " << cell.status << "\n";
  });
  io::write_atomic(a.out, io::sweep_csv(cells, !c.no_timing));
  for (const auto& cell : cells) {
    if (cell.status != "ok") return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metarounding experiments"};
  app.require_subcommand(1);

  Common common;
  GenArgs gen;
  SolveArgs solve;
  OnlineArgs onl;
  SweepArgs sweep;

  auto* g = app.add_subcommand("gen", "generate a random set cover instance");
  g->add_option("--m", gen.m, "items")->check(CLI::PositiveNumber);
  g->add_option("--n", gen.n, "sets")->check(CLI::PositiveNumber);
  g->add_option("--density", gen.density, "inclusion probability")->check(CLI::Range(0.0, 1.0));
  g->add_option("--out", gen.out, "instance JSON")->required();
  add_common(g, common);

  auto* s = app.add_subcommand("solve", "relaxed LP + metarounding on one instance");
  s->add_option("--instance", solve.instance)->required()->check(CLI::ExistingFile);
  s->add_option("--eps", solve.eps)->check(CLI::PositiveNumber);
  s->add_option("--trace", solve.trace, "per-iteration CSV");
  s->add_option("--summary", solve.summary, "summary JSON (stdout when omitted)");
  add_common(s, common);

  auto* o = app.add_subcommand("online", "online learning run");
  o->add_option("--instance", onl.instance)->required()->check(CLI::ExistingFile);
  o->add_option("--T", onl.rounds, "rounds")->check(CLI::PositiveNumber);
  o->add_option("--eps", onl.eps)->check(CLI::PositiveNumber);
  o->add_option("--mode", onl.mode)->check(CLI::IsMember({"metaround", "fpl"}));
  o->add_option("--projection", onl.projection)->check(CLI::IsMember({"polytope", "box"}));
  o->add_option("--step0", onl.step0)->check(CLI::PositiveNumber);
  o->add_option("--losses", onl.losses, "loss rows CSV")->check(CLI::ExistingFile);
  o->add_option("--out", onl.out, "ledger CSV")->required();
  add_common(o, common);

  auto* w = app.add_subcommand("sweep", "running-time sweep over n");
  w->add_option("--m", sweep.m)->check(CLI::PositiveNumber);
  w->add_option("--n-list", sweep.n_list)->delimiter(',')->check(CLI::PositiveNumber);
  w->add_option("--eps", sweep.eps)->check(CLI::PositiveNumber);
  w->add_option("--repeats", sweep.repeats)->check(CLI::PositiveNumber);
  w->add_option("--jobs", sweep.jobs, "worker threads (0: all cores)");
  w->add_option("--out", sweep.out, "timing CSV")->required();
  add_common(w, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return cmd_gen(gen, common);
    if (s->parsed()) return cmd_solve(solve, common);
    if (o->parsed()) return cmd_online(onl, common);
    return cmd_sweep(sweep, common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
