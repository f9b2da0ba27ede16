#pragma once

// Cross-trial statistics per iteration. A trial that stopped early keeps
// contributing its last recorded value; a metric missing on a row falls back
// to the latest row of that trial that has it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rayq/matrix_io.hpp"
#include "rayq/trace.hpp"

namespace rayq {

/// One iteration of one trial with an arbitrary set of named metrics.
struct Sample {
  std::size_t k = 0;
  double wallSeconds = 0.0;
  std::vector<std::optional<double>> values;
};

struct AggregateRow {
  std::string solver;
  std::size_t k = 0;
  /// Mean cumulative wall time of the contributing trials at k.
  double tMean = 0.0;
  std::string metric;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct AggregateReport {
  std::vector<AggregateRow> rows;
};

inline const std::vector<std::string>& trace_metrics() {
  static const std::vector<std::string> names{"a", "abs_b", "tau", "rqe", "msqr", "grad_norm"};
  return names;
}

inline std::vector<Sample> to_samples(const RunTrace& t) {
  std::vector<Sample> out;
  out.reserve(t.records.size());
  for (const auto& r : t.records) out.push_back({r.k, r.wallSeconds, {r.a, r.absB, r.tau, r.rqe, r.msqr, r.gradNorm}});
  return out;
}

/// Linear-interpolation quantile of sorted data, p ∈ [0, 1].
inline double quantile_sorted(const std::vector<double>& xs, double p) {
  if (xs.empty()) return 0.0;
  const double pos = p * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

inline std::vector<AggregateRow> aggregate_samples(const std::string& label, const std::vector<std::string>& metrics,
                                                   const std::vector<std::vector<Sample>>& trials) {
  std::set<std::size_t> grid;
  for (const auto& t : trials)
    for (const auto& s : t) grid.insert(s.k);

  const std::size_t nm = metrics.size();
  std::vector<std::size_t> cursor(trials.size(), 0);
  std::vector<std::vector<std::optional<double>>> carried(trials.size(), std::vector<std::optional<double>>(nm));
  std::vector<std::optional<double>> wall(trials.size());

  std::vector<AggregateRow> rows;
  std::vector<double> vals;
  for (std::size_t k : grid) {
    double tsum = 0.0;
    std::size_t tcount = 0;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      while (cursor[i] < trials[i].size() && trials[i][cursor[i]].k <= k) {
        const auto& s = trials[i][cursor[i]];
        for (std::size_t j = 0; j < nm && j < s.values.size(); ++j)
          if (s.values[j] && std::isfinite(*s.values[j])) carried[i][j] = s.values[j];
        wall[i] = s.wallSeconds;
        ++cursor[i];
      }
      if (wall[i]) {
        tsum += *wall[i];
        ++tcount;
      }
    }
    const double tmean = tcount ? tsum / static_cast<double>(tcount) : 0.0;
    for (std::size_t j = 0; j < nm; ++j) {
      vals.clear();
      for (std::size_t i = 0; i < trials.size(); ++i)
        if (carried[i][j]) vals.push_back(*carried[i][j]);
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());
      double sum = 0.0;
      for (double v : vals) sum += v;
      rows.push_back({label, k, tmean, metrics[j], vals.size(), sum / static_cast<double>(vals.size()),
                      quantile_sorted(vals, 0.5), quantile_sorted(vals, 0.25), quantile_sorted(vals, 0.75)});
    }
  }
  return rows;
}

struct LabeledTraces {
  std::string label;
  std::vector<RunTrace> traces;
};

inline AggregateReport aggregate_traces(const std::vector<LabeledTraces>& groups) {
  AggregateReport rep;
  for (const auto& g : groups) {
    std::vector<std::vector<Sample>> trials;
    trials.reserve(g.traces.size());
    for (const auto& t : g.traces) trials.push_back(to_samples(t));
    auto rows = aggregate_samples(g.label, trace_metrics(), trials);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  return rep;
}

inline constexpr const char* kAggregateHeader = "solver,k,t_mean_s,metric,count,mean,median,q25,q75";

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  using io::format_double;
  os << kAggregateHeader << '\n';
  for (const auto& r : rows)
    os << r.solver << ',' << r.k << ',' << format_double(r.tMean) << ',' << r.metric << ',' << r.count << ','
       << format_double(r.mean) << ',' << format_double(r.median) << ',' << format_double(r.q25) << ','
       << format_double(r.q75) << '\n';
}

/// Rows of one (solver, metric) pair in iteration order.
inline std::vector<AggregateRow> select_rows(const std::vector<AggregateRow>& rows, const std::string& solver,
                                             const std::string& metric) {
  std::vector<AggregateRow> out;
  for (const auto& r : rows)
    if (r.solver == solver && r.metric == metric) out.push_back(r);
  return out;
}

}  // namespace rayq
