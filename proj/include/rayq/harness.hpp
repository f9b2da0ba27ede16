#pragma once

// Experiment orchestration: solver specs, JSON configs, parallel seeded
// trials, output directories, time-to-target benchmarks and trace ingestion.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <unistd.h>

#include "rayq/aggregate.hpp"
#include "rayq/algorithms.hpp"
#include "rayq/oracle.hpp"
#include "rayq/problems.hpp"
#include "rayq/svg.hpp"
#include "rayq/trace.hpp"

namespace rayq {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- solvers

struct SolverSpec {
  enum class Kind { Szo, Rga, Zorga };
  Kind kind = Kind::Szo;
  std::size_t m = 1;
  ZorgaVariant variant = ZorgaVariant::ConstantStep;

  static SolverSpec szo(std::size_t m) { return {Kind::Szo, m, ZorgaVariant::ConstantStep}; }
  static SolverSpec rga() { return {Kind::Rga, 1, ZorgaVariant::ConstantStep}; }
  static SolverSpec zorga(ZorgaVariant v, std::size_t m) { return {Kind::Zorga, m, v}; }

  /// File-system friendly name, e.g. szo_m10, rga, zorga_armijo_m100.
  std::string label() const {
    switch (kind) {
      case Kind::Szo: return "szo_m" + std::to_string(m);
      case Kind::Rga: return "rga";
      case Kind::Zorga:
        return std::string("zorga_") + (variant == ZorgaVariant::Armijo ? "armijo" : "const") + "_m" +
               std::to_string(m);
    }
    return "unknown";
  }

  /// Command-line form, e.g. szo:m=10, zorga:variant=armijo,m=100.
  std::string to_string() const {
    switch (kind) {
      case Kind::Szo: return "szo:m=" + std::to_string(m);
      case Kind::Rga: return "rga";
      case Kind::Zorga:
        return std::string("zorga:variant=") + (variant == ZorgaVariant::Armijo ? "armijo" : "const") +
               ",m=" + std::to_string(m);
    }
    return "unknown";
  }

  /// Parses name[:key=val[,key=val...]]. Keys not given fall back to `defaultM`.
  static SolverSpec parse(std::string_view text, std::size_t defaultM = 1) {
    auto bad = [&](const std::string& why) -> SolverSpec {
      raise(ErrorCode::InvalidArgument, "solver '" + std::string(text) + "': " + why);
    };
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    SolverSpec s;
    if (name == "szo") s.kind = Kind::Szo;
    else if (name == "rga") s.kind = Kind::Rga;
    else if (name == "zorga" || name == "zo-rga") s.kind = Kind::Zorga;
    else return bad("unknown solver name");
    s.m = defaultM;

    std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view kv = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos) return bad("expected key=value");
      const std::string_view key = kv.substr(0, eq), val = kv.substr(eq + 1);
      if (key == "m") {
        std::size_t m = 0;
        const auto res = std::from_chars(val.data(), val.data() + val.size(), m);
        if (res.ec != std::errc() || res.ptr != val.data() + val.size() || m < 1) return bad("m must be a positive integer");
        s.m = m;
      } else if (key == "variant" && s.kind == Kind::Zorga) {
        if (val == "armijo") s.variant = ZorgaVariant::Armijo;
        else if (val == "const" || val == "constant") s.variant = ZorgaVariant::ConstantStep;
        else return bad("variant must be const or armijo");
      } else {
        return bad("unknown key '" + std::string(key) + "'");
      }
    }
    if (s.kind == Kind::Rga) s.m = 1;
    return s;
  }

  bool operator==(const SolverSpec&) const = default;
};

// ----------------------------------------------------------------- config

struct ExperimentConfig {
  /// The problem family and size; its seed is replaced per trial by baseSeed + trial.
  ProblemSpec problem;
  std::vector<SolverSpec> solvers;
  std::size_t trials = 50;
  std::size_t maxIters = 1000;
  std::uint64_t baseSeed = 0;
  fs::path output = "rayq-out";
  std::optional<double> timeBudget;
  std::optional<double> targetRqe;
  std::size_t recordEvery = 1;
  double bTolSq = 1e-24;
  std::size_t bWindow = 50;
  /// Fill msqr and grad_norm from the dense matrices (excluded from timing).
  bool diagnostics = true;

  void validate() const {
    problem.validate();
    if (trials < 1) raise(ErrorCode::InvalidArgument, "trials must be ≥ 1");
    if (solvers.empty()) raise(ErrorCode::InvalidArgument, "solver list is empty");
    if (output.empty()) raise(ErrorCode::InvalidArgument, "output directory is empty");
    std::vector<std::string> labels;
    for (const auto& s : solvers) {
      const auto l = s.label();
      if (std::find(labels.begin(), labels.end(), l) != labels.end())
        raise(ErrorCode::InvalidArgument, "solver listed twice: " + s.to_string());
      labels.push_back(l);
    }
    solver_config(solvers.front(), std::nullopt).validate();
  }

  std::uint64_t trial_seed(std::size_t trial) const { return baseSeed + trial; }

  SolverConfig solver_config(const SolverSpec& s, std::optional<double> referenceMax) const {
    SolverConfig c;
    c.m = s.m;
    c.maxIters = maxIters;
    c.bTolSq = bTolSq;
    c.bWindow = bWindow;
    c.recordEvery = recordEvery;
    c.timeBudget = timeBudget;
    c.referenceMax = referenceMax;
    if (referenceMax) c.targetRqe = targetRqe;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  nlohmann::json problem{{"family", std::string(to_string(c.problem.family))}, {"dim", c.problem.dim}};
  problem["q"] = c.problem.q ? nlohmann::json(*c.problem.q) : nlohmann::json(nullptr);
  if (c.problem.family == Family::KarhunenLoeve)
    problem["kl"] = {{"lengthScale", c.problem.kl.lengthScale}, {"lo", c.problem.kl.lo}, {"hi", c.problem.kl.hi}};
  std::vector<std::string> solvers;
  for (const auto& s : c.solvers) solvers.push_back(s.to_string());
  j = nlohmann::json{{"problem", problem},
                     {"solvers", solvers},
                     {"trials", c.trials},
                     {"maxIters", c.maxIters},
                     {"baseSeed", c.baseSeed},
                     {"output", c.output.string()},
                     {"recordEvery", c.recordEvery},
                     {"bTolSq", c.bTolSq},
                     {"bWindow", c.bWindow},
                     {"diagnostics", c.diagnostics}};
  j["timeBudget"] = c.timeBudget ? nlohmann::json(*c.timeBudget) : nlohmann::json(nullptr);
  j["targetRqe"] = c.targetRqe ? nlohmann::json(*c.targetRqe) : nlohmann::json(nullptr);
}

/// Reads the fields present in `j` on top of `c`; absent fields keep their value.
inline void merge_json(const nlohmann::json& j, ExperimentConfig& c) {
  try {
    if (!j.is_object()) raise(ErrorCode::InvalidArgument, "config must be a JSON object");
    auto opt = [&](const nlohmann::json& o, const char* key, auto& out) {
      if (o.contains(key) && !o.at(key).is_null()) o.at(key).get_to(out);
    };
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      if (p.contains("family")) c.problem.family = parse_family(p.at("family").get<std::string>());
      opt(p, "dim", c.problem.dim);
      if (p.contains("q")) c.problem.q = p.at("q").is_null() ? std::nullopt : std::optional<int>(p.at("q").get<int>());
      if (p.contains("kl")) {
        opt(p.at("kl"), "lengthScale", c.problem.kl.lengthScale);
        opt(p.at("kl"), "lo", c.problem.kl.lo);
        opt(p.at("kl"), "hi", c.problem.kl.hi);
      }
    }
    if (j.contains("solvers")) {
      c.solvers.clear();
      for (const auto& s : j.at("solvers")) c.solvers.push_back(SolverSpec::parse(s.get<std::string>()));
    }
    opt(j, "trials", c.trials);
    opt(j, "maxIters", c.maxIters);
    opt(j, "baseSeed", c.baseSeed);
    opt(j, "seeds", c.baseSeed);
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    opt(j, "recordEvery", c.recordEvery);
    opt(j, "bTolSq", c.bTolSq);
    opt(j, "bWindow", c.bWindow);
    opt(j, "diagnostics", c.diagnostics);
    if (j.contains("timeBudget"))
      c.timeBudget = j.at("timeBudget").is_null() ? std::nullopt : std::optional<double>(j.at("timeBudget").get<double>());
    if (j.contains("targetRqe"))
      c.targetRqe = j.at("targetRqe").is_null() ? std::nullopt : std::optional<double>(j.at("targetRqe").get<double>());
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidArgument, std::string("bad config field: ") + e.what());
  }
}

inline ExperimentConfig load_config(const fs::path& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::InvalidArgument, "config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  merge_json(j, base);
  return base;
}

// ---------------------------------------------------------------- threads

/// Work-pool size: RAYQ_THREADS when set to a positive integer, otherwise
/// the hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("RAYQ_THREADS")) {
    unsigned n = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The exception of
/// the lowest failing index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  threads = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ----------------------------------------------------------------- trials

struct SolverRun {
  RunTrace trace;
  StopReason reason = StopReason::MaxIters;
  Vector finalV;
};

struct TrialOutcome {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  ReferenceSolution reference;
  std::vector<SolverRun> runs;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialOutcome> trials;

  std::vector<RunTrace> traces_of(std::size_t solver) const {
    std::vector<RunTrace> out;
    for (const auto& t : trials) out.push_back(t.runs[solver].trace);
    return out;
  }

  std::vector<LabeledTraces> labeled() const {
    std::vector<LabeledTraces> out;
    for (std::size_t s = 0; s < config.solvers.size(); ++s) out.push_back({config.solvers[s].label(), traces_of(s)});
    return out;
  }
};

/// Probe that fills msqr (running minimum) and grad_norm from dense matrices.
inline TraceProbe dense_probe(const DensePair& dense) {
  auto best = std::make_shared<double>(std::numeric_limits<double>::infinity());
  return [&dense, best](const UnitBVector& v, TraceRecord& r) {
    *best = std::min(*best, eigen_residual_sq(dense, v.vec()));
    r.msqr = *best;
    if (!r.gradNorm) r.gradNorm = riemannian_grad(dense, v.vec()).norm();
  };
}

/// Runs one solver from the trial's shared v⁰ (every solver of a trial sees the same start).
inline SolverRun run_solver(const SolverSpec& spec, const DensePair& dense, const SolverConfig& cfg,
                            std::uint64_t seed, const TraceProbe* probe) {
  RngStream rng(seed, 1);
  RunResult r = [&] {
    switch (spec.kind) {
      case SolverSpec::Kind::Szo: return szo_run(dense.operators(), cfg, rng, probe);
      case SolverSpec::Kind::Rga: return rga_run(dense, cfg, rng, probe);
      case SolverSpec::Kind::Zorga: return zorga_run(dense, cfg, spec.variant, rng, probe);
    }
    raise(ErrorCode::InvalidArgument, "unknown solver kind");
  }();
  return {std::move(r.trace), r.reason, r.state.v.vec()};
}

inline TrialOutcome run_trial(const ExperimentConfig& cfg, std::size_t trial) {
  TrialOutcome out;
  out.trial = trial;
  out.seed = cfg.trial_seed(trial);
  ProblemSpec ps = cfg.problem;
  ps.seed = out.seed;
  const DensePair dense = generate(ps);
  out.reference = reference_solve(dense);
  for (const auto& s : cfg.solvers) {
    const SolverConfig sc = cfg.solver_config(s, out.reference.maxValue);
    const TraceProbe probe = cfg.diagnostics ? dense_probe(dense) : TraceProbe{};
    SolverRun run = run_solver(s, dense, sc, out.seed, cfg.diagnostics ? &probe : nullptr);
    run.trace.trial = trial;
    out.runs.push_back(std::move(run));
  }
  return out;
}

/// Runs every trial; results are ordered by trial index whatever the schedule.
inline ExperimentResult run_trials(const ExperimentConfig& cfg, unsigned threads = worker_count()) {
  cfg.validate();
  ExperimentResult res;
  res.config = cfg;
  res.trials.resize(cfg.trials);
  parallel_for(cfg.trials, threads, [&](std::size_t i) { res.trials[i] = run_trial(cfg, i); });
  return res;
}

// ----------------------------------------------------------------- output

/// Writes into a hidden sibling directory and moves the contents into place
/// on commit; anything not committed is removed.
class OutputStage {
 public:
  explicit OutputStage(fs::path target) : target_(std::move(target)) {
    target_ = target_.lexically_normal();
    if (target_.filename().empty()) target_ = target_.parent_path();
    const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
    staging_ = parent / ("." + target_.filename().string() + ".partial-" + std::to_string(::getpid()));
    std::error_code ec;
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_, ec);
    if (ec) raise(ErrorCode::Io, "cannot create '" + staging_.string() + "': " + ec.message());
  }
  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  ~OutputStage() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& root() const noexcept { return staging_; }
  const fs::path& target() const noexcept { return target_; }

  void commit() {
    std::error_code ec;
    fs::create_directories(target_, ec);
    if (ec) raise(ErrorCode::Io, "cannot create '" + target_.string() + "': " + ec.message());
    for (const auto& entry : fs::directory_iterator(staging_)) {
      const fs::path dest = target_ / entry.path().filename();
      fs::remove_all(dest, ec);
      fs::rename(entry.path(), dest, ec);
      if (ec) raise(ErrorCode::Io, "cannot move output into '" + dest.string() + "': " + ec.message());
    }
    fs::remove_all(staging_, ec);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

inline void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary);
  if (!os) raise(ErrorCode::Io, "cannot write '" + path.string() + "'");
  body(os);
  os.flush();
  if (!os) raise(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

inline std::string trial_file_name(std::size_t trial) {
  std::ostringstream name;
  name << "trial_" << std::setw(4) << std::setfill('0') << trial << ".csv";
  return name.str();
}

inline std::string metric_title(const std::string& metric) {
  if (metric == "rqe") return "relative quotient error";
  if (metric == "msqr") return "minimal squared residual";
  if (metric == "abs_b") return "|b_k|";
  if (metric == "grad_norm") return "Riemannian gradient norm";
  if (metric == "tau") return "step size";
  if (metric == "a") return "objective a_k";
  return metric;
}

/// Mean series of `metric` per group as log-y plots, over iterations and over mean wall time.
inline void write_metric_plots(const fs::path& dir, const std::vector<AggregateRow>& rows,
                               const std::vector<std::string>& groups, const std::vector<std::string>& metrics,
                               const std::string& titlePrefix = "") {
  for (const auto& metric : metrics) {
    bool any = false;
    std::vector<svg::Series> byK, byT;
    for (const auto& g : groups) {
      const auto sel = select_rows(rows, g, metric);
      if (sel.empty()) continue;
      any = true;
      svg::Series sk{g, {}, {}}, st{g, {}, {}};
      for (const auto& r : sel) {
        sk.x.push_back(static_cast<double>(r.k));
        sk.y.push_back(r.mean);
        st.x.push_back(r.tMean);
        st.y.push_back(r.mean);
      }
      byK.push_back(std::move(sk));
      byT.push_back(std::move(st));
    }
    if (!any) continue;
    const bool logY = metric != "a";
    const std::string title = titlePrefix + metric_title(metric) + " (mean)";
    write_file(dir / (metric + ".svg"),
               [&](std::ostream& os) { svg::write_plot(os, {title, "iteration k", metric, logY}, byK); });
    write_file(dir / (metric + "_time.svg"),
               [&](std::ostream& os) { svg::write_plot(os, {title, "mean wall time [s]", metric, logY}, byT); });
  }
}

inline AggregateReport write_experiment(const ExperimentResult& res, const fs::path& dir) {
  const auto& cfg = res.config;
  write_file(dir / "config.json", [&](std::ostream& os) {
    nlohmann::json j = cfg;
    os << j.dump(2) << '\n';
  });
  for (std::size_t s = 0; s < cfg.solvers.size(); ++s)
    for (const auto& t : res.trials)
      write_file(dir / "traces" / cfg.solvers[s].label() / trial_file_name(t.trial), [&](std::ostream& os) {
        os << trace_header() << '\n';
        write_trace_rows(os, t.runs[s].trace);
      });

  write_file(dir / "summary.csv", [&](std::ostream& os) {
    os << "solver,trial,seed,iters,stop_reason,reference_max,final_a,final_rqe,rqe_absolute,wall_s\n";
    for (std::size_t s = 0; s < cfg.solvers.size(); ++s)
      for (const auto& t : res.trials) {
        const auto& run = t.runs[s];
        const auto& last = run.trace.records.back();
        const auto err = quotient_error(t.reference.maxValue, last.a);
        os << cfg.solvers[s].label() << ',' << t.trial << ',' << t.seed << ',' << last.k << ',' << to_string(run.reason)
           << ',' << io::format_double(t.reference.maxValue) << ',' << io::format_double(last.a) << ','
           << io::format_double(err.value) << ',' << (err.absolute ? 1 : 0) << ','
           << io::format_double(last.wallSeconds) << '\n';
      }
  });

  const AggregateReport rep = aggregate_traces(res.labeled());
  write_file(dir / "aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, rep.rows); });
  std::vector<std::string> groups;
  for (const auto& s : cfg.solvers) groups.push_back(s.label());
  write_metric_plots(dir / "plots", rep.rows, groups, trace_metrics());
  return rep;
}

/// Runs the experiment and writes config.json, traces/<solver>/trial_NNNN.csv,
/// summary.csv, aggregate.csv and plots/*.svg under cfg.output. On failure
/// nothing is left behind.
inline AggregateReport run_experiment(const ExperimentConfig& cfg, unsigned threads = worker_count()) {
  cfg.validate();
  OutputStage stage(cfg.output);
  const ExperimentResult res = run_trials(cfg, threads);
  AggregateReport rep = write_experiment(res, stage.root());
  stage.commit();
  return rep;
}

// ----------------------------------------------------------------- ingest

/// Reads and validates an externally produced trace CSV (one trace per trial id).
inline std::vector<RunTrace> ingest_external_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::Io, "cannot open trace '" + path.string() + "'");
  auto traces = read_trace_csv(in, path.string());
  if (traces.empty()) raise(ErrorCode::SchemaMismatch, path.string() + ": no data rows");
  return traces;
}

/// Aggregates labeled groups (native or ingested) into aggregate.csv and plots.
inline AggregateReport write_comparison(const std::vector<LabeledTraces>& groups, const fs::path& out) {
  OutputStage stage(out);
  const AggregateReport rep = aggregate_traces(groups);
  write_file(stage.root() / "aggregate.csv", [&](std::ostream& os) { write_aggregate_csv(os, rep.rows); });
  std::vector<std::string> labels;
  for (const auto& g : groups) labels.push_back(g.label);
  write_metric_plots(stage.root() / "plots", rep.rows, labels, trace_metrics());
  stage.commit();
  return rep;
}

// ------------------------------------------------------------------ bench

struct BenchConfig {
  Family family = Family::IllConditioned;
  std::optional<int> q = 1;
  std::vector<Index> dims{50, 100, 200};
  std::vector<std::size_t> ms{100};
  std::size_t trials = 10;
  double targetRqe = 0.01;
  std::uint64_t baseSeed = 0;
  /// Iteration cap per run is capFactor·d.
  std::size_t capFactor = 100;
};

struct BenchRow {
  Index d = 0;
  std::size_t m = 0;
  std::optional<int> q;
  double medianSeconds = 0.0;
  std::size_t itersCappedCount = 0;
  std::vector<double> seconds;
};

/// Median wall time to reach targetRqe per (d, m). Runs are sequential so
/// timings are not disturbed by sibling trials. A target already met at v⁰
/// counts as time 0.
inline std::vector<BenchRow> bench_to_target(const BenchConfig& cfg) {
  if (cfg.trials < 1 || cfg.dims.empty() || cfg.ms.empty())
    raise(ErrorCode::InvalidArgument, "bench needs trials, dims and m values");
  if (!(cfg.targetRqe > 0.0)) raise(ErrorCode::InvalidArgument, "target RQE must be positive");
  std::vector<BenchRow> rows;
  for (Index d : cfg.dims) {
    std::vector<DensePair> problems;
    std::vector<double> refs;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      ProblemSpec ps{.family = cfg.family, .dim = d, .q = cfg.q, .seed = cfg.baseSeed + t};
      problems.push_back(generate(ps));
      refs.push_back(reference_solve(problems.back()).maxValue);
    }
    for (std::size_t m : cfg.ms) {
      BenchRow row{d, m, cfg.family == Family::IllConditioned ? cfg.q : std::nullopt, 0.0, 0, {}};
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        SolverConfig sc;
        sc.m = m;
        sc.maxIters = cfg.capFactor * static_cast<std::size_t>(d);
        sc.referenceMax = refs[t];
        sc.targetRqe = cfg.targetRqe;
        sc.recordEvery = sc.maxIters + 1;
        RngStream rng(cfg.baseSeed + t, 1);
        const RunResult r = szo_run(problems[t].operators(), sc, rng);
        if (r.reason != StopReason::TargetReached) ++row.itersCappedCount;
        const bool atStart = r.reason == StopReason::TargetReached && r.state.k == 0;
        row.seconds.push_back(atStart ? 0.0 : r.trace.records.back().wallSeconds);
      }
      std::vector<double> sorted = row.seconds;
      std::sort(sorted.begin(), sorted.end());
      row.medianSeconds = quantile_sorted(sorted, 0.5);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "d,m,q,median_s,iters_capped_count\n";
  for (const auto& r : rows)
    os << r.d << ',' << r.m << ',' << (r.q ? std::to_string(*r.q) : "") << ',' << io::format_double(r.medianSeconds)
       << ',' << r.itersCappedCount << '\n';
}

/// Least-squares slope of log(median time) against log(d) for one m.
inline double fit_time_exponent(const std::vector<BenchRow>& rows, std::size_t m) {
  std::vector<double> x, y;
  for (const auto& r : rows)
    if (r.m == m && r.medianSeconds > 0.0) {
      x.push_back(std::log(static_cast<double>(r.d)));
      y.push_back(std::log(r.medianSeconds));
    }
  if (x.size() < 2) raise(ErrorCode::InvalidArgument, "need at least two positive timings to fit an exponent");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace rayq
