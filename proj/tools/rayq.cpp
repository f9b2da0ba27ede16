// rayq: generate problems, run experiments, reproduce figures, benchmark, ingest traces.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rayq/rayq.hpp"

using namespace rayq;

namespace {

int exit_code(const Error& e) {
  if (e.code() == ErrorCode::Io || e.code() == ErrorCode::SchemaMismatch) return 3;
  return e.is_numerical() ? 2 : 1;
}

struct ProblemFlags {
  std::optional<std::string> family;
  std::optional<Index> dim;
  std::optional<int> q;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--family", family, "gaussian | illcond | opnorm | kl");
    app->add_option("--dim", dim, "dimension d");
    app->add_option("--q", q, "condition exponent range for illcond (1..3)");
    app->add_option("--seed", seed, "base seed");
  }

  void apply(ProblemSpec& p) const {
    if (family) p.family = parse_family(*family);
    if (dim) p.dim = *dim;
    if (q) p.q = *q;
  }
};

int cmd_gen(const ProblemFlags& pf, const std::string& out, const std::string& format) {
  ProblemSpec spec;
  spec.dim = 10;
  pf.apply(spec);
  if (pf.seed) spec.seed = *pf.seed;
  spec.validate();
  const DensePair p = generate(spec);
  if (format == "binary") {
    io::save_pair(out, p.A, p.B);
  } else {
    write_file(out + ".A.txt", [&](std::ostream& os) { io::write_text(os, p.A); });
    write_file(out + ".B.txt", [&](std::ostream& os) { io::write_text(os, p.B); });
  }
  const auto ref = reference_solve(p);
  std::cout << "family=" << to_string(spec.family) << " d=" << spec.dim << " seed=" << spec.seed
            << " R=" << io::format_double(ref.maxValue) << " gap=" << io::format_double(ref.eigengap) << '\n';
  return 0;
}

int cmd_run(ExperimentConfig cfg) {
  cfg.validate();
  std::cout << "running " << cfg.trials << " trials x " << cfg.solvers.size() << " solvers on "
            << to_string(cfg.problem.family) << " d=" << cfg.problem.dim << " -> " << cfg.output.string() << '\n';
  const auto rep = run_experiment(cfg);
  for (const auto& s : cfg.solvers) {
    const auto rows = select_rows(rep.rows, s.label(), "rqe");
    if (rows.empty()) continue;
    std::cout << s.label() << ": k=" << rows.back().k << " median RQE " << io::format_double(rows.back().median)
              << " mean " << io::format_double(rows.back().mean) << '\n';
  }
  return 0;
}

int cmd_repro(const std::vector<std::string>& ids, const FigureOptions& opts) {
  bool all = true;
  for (const auto& id : ids) {
    std::cout << id << ": writing " << (opts.output / id).string() << '\n';
    for (const auto& c : reproduce_figure(id, opts)) {
      std::cout << "  " << (c.passed ? "ok   " : "MISS ") << c.name << "  " << c.detail << '\n';
      all = all && c.passed;
    }
  }
  std::cout << (all ? "all figure checks hold\n" : "some figure checks do not hold\n");
  return 0;
}

int cmd_bench(const BenchConfig& b, const std::string& out) {
  const auto rows = bench_to_target(b);
  if (out.empty() || out == "-") write_bench_csv(std::cout, rows);
  else write_file(out, [&](std::ostream& os) { write_bench_csv(os, rows); });
  for (std::size_t m : b.ms) {
    try {
      std::cout << "m=" << m << " time ~ d^" << io::format_double(fit_time_exponent(rows, m)) << '\n';
    } catch (const Error&) {
      std::cout << "m=" << m << " too few positive timings for a fit\n";
    }
  }
  return 0;
}

int cmd_ingest(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<LabeledTraces> groups;
  for (const auto& in : inputs) {
    // label=path or plain path (label = file stem)
    const auto eq = in.find('=');
    const std::string path = eq == std::string::npos ? in : in.substr(eq + 1);
    const std::string label = eq == std::string::npos ? fs::path(path).stem().string() : in.substr(0, eq);
    auto traces = ingest_external_trace(path);
    std::size_t rows = 0;
    for (const auto& t : traces) rows += t.records.size();
    std::cout << label << ": " << traces.size() << " trials, " << rows << " rows\n";
    groups.push_back({label, std::move(traces)});
  }
  if (!out.empty()) {
    write_comparison(groups, out);
    std::cout << "aggregate written to " << out << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rayq: zeroth-order maximization of generalized Rayleigh quotients"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a problem pair and report its maximum");
  ProblemFlags genProblem;
  genProblem.add(gen);
  std::string genOut = "pair.bin", genFormat = "binary";
  gen->add_option("--out", genOut, "output file (binary pair) or prefix (text)");
  gen->add_option("--format", genFormat, "binary | text")->check(CLI::IsMember({"binary", "text"}));

  // run
  auto* run = app.add_subcommand("run", "run seeded trials and write traces, aggregates and plots");
  ProblemFlags runProblem;
  runProblem.add(run);
  std::optional<std::string> config, out;
  std::optional<std::size_t> trials, iters, recordEvery, m;
  std::optional<double> targetRqe, timeBudget;
  std::vector<std::string> solvers;
  run->add_option("--config", config, "JSON experiment config; flags override its fields");
  run->add_option("--trials", trials, "number of trials");
  run->add_option("--iters", iters, "iteration cap per run");
  run->add_option("--solver", solvers, "solver, repeatable: szo:m=10, rga, zorga:variant=armijo,m=100");
  run->add_option("--m", m, "default sample count for solvers without m=");
  run->add_option("--target-rqe", targetRqe, "stop once RQE ≤ this value");
  run->add_option("--time-budget", timeBudget, "wall-clock seconds per run");
  run->add_option("--record-every", recordEvery, "trace every n-th iteration");
  run->add_option("--out", out, "output directory");

  // repro
  auto* repro = app.add_subcommand("repro", "reproduce experiment figures");
  std::vector<std::string> figIds;
  std::string scale = "desk", reproOut = "figures";
  std::optional<std::uint64_t> reproSeed;
  std::optional<std::size_t> reproTrials;
  repro->add_option("ids", figIds, "fig2 .. fig7, or all")->required();
  repro->add_option("--scale", scale, "desk | full");
  repro->add_option("--out", reproOut, "output root");
  repro->add_option("--seed", reproSeed, "base seed");
  repro->add_option("--trials", reproTrials, "override the preset trial count");

  // bench
  auto* bench = app.add_subcommand("bench", "median time to reach a target RQE");
  std::string benchFamily = "illcond", benchOut;
  std::vector<Index> benchDims;
  std::vector<std::size_t> benchMs;
  std::optional<int> benchQ;
  std::optional<std::size_t> benchTrials, benchCap;
  std::optional<double> benchTarget;
  std::optional<std::uint64_t> benchSeed;
  bench->add_option("--family", benchFamily, "problem family");
  bench->add_option("--dim", benchDims, "dimension, repeatable");
  bench->add_option("--m", benchMs, "sample count, repeatable");
  bench->add_option("--q", benchQ, "condition exponent range for illcond");
  bench->add_option("--trials", benchTrials, "trials per (d, m)");
  bench->add_option("--target-rqe", benchTarget, "target RQE (default 0.01)");
  bench->add_option("--cap-factor", benchCap, "iteration cap is this times d (default 100)");
  bench->add_option("--seed", benchSeed, "base seed");
  bench->add_option("--out", benchOut, "CSV file (default stdout)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "validate external trace CSVs and aggregate them");
  std::vector<std::string> ingestInputs;
  std::string ingestOut;
  ingest->add_option("traces", ingestInputs, "trace CSV files, optionally label=path")->required();
  ingest->add_option("--out", ingestOut, "write aggregate.csv and plots here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(genProblem, genOut, genFormat);

    if (*run) {
      ExperimentConfig cfg;
      cfg.problem.dim = 10;
      if (config) cfg = load_config(*config, cfg);
      runProblem.apply(cfg.problem);
      if (runProblem.seed) cfg.baseSeed = *runProblem.seed;
      if (trials) cfg.trials = *trials;
      if (iters) cfg.maxIters = *iters;
      if (recordEvery) cfg.recordEvery = *recordEvery;
      if (targetRqe) cfg.targetRqe = *targetRqe;
      if (timeBudget) cfg.timeBudget = *timeBudget;
      if (out) cfg.output = *out;
      if (!solvers.empty()) {
        cfg.solvers.clear();
        for (const auto& s : solvers) cfg.solvers.push_back(SolverSpec::parse(s, m.value_or(1)));
      } else if (cfg.solvers.empty()) {
        cfg.solvers.push_back(SolverSpec::szo(m.value_or(1)));
      }
      return cmd_run(cfg);
    }

    if (*repro) {
      FigureOptions opts;
      opts.scale = parse_scale(scale);
      opts.output = reproOut;
      if (reproSeed) opts.baseSeed = *reproSeed;
      opts.trials = reproTrials;
      if (figIds.size() == 1 && figIds[0] == "all") figIds = figure_ids();
      return cmd_repro(figIds, opts);
    }

    if (*bench) {
      BenchConfig b;
      b.family = parse_family(benchFamily);
      if (b.family != Family::IllConditioned) b.q.reset();
      if (benchQ) b.q = *benchQ;
      if (!benchDims.empty()) b.dims = benchDims;
      if (!benchMs.empty()) b.ms = benchMs;
      if (benchTrials) b.trials = *benchTrials;
      if (benchTarget) b.targetRqe = *benchTarget;
      if (benchCap) b.capFactor = *benchCap;
      if (benchSeed) b.baseSeed = *benchSeed;
      return cmd_bench(b, benchOut);
    }

    if (*ingest) return cmd_ingest(ingestInputs, ingestOut);
  } catch (const Error& e) {
    std::cerr << "rayq: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "rayq: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
