#pragma once

// Per-iteration run records and the trace CSV schema
//   trial,k,t_wall_s,a,abs_b,tau,rqe,msqr,grad_norm
// with empty fields where a metric is unavailable.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rayq/error.hpp"
#include "rayq/matrix_io.hpp"

namespace rayq {

enum class StopReason { ExactTermination, BWindowBelowTol, MaxIters, TargetReached };

constexpr std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::ExactTermination: return "ExactTermination";
    case StopReason::BWindowBelowTol: return "BWindowBelowTol";
    case StopReason::MaxIters: return "MaxIters";
    case StopReason::TargetReached: return "TargetReached";
  }
  return "Unknown";
}

/// Row k describes iterate v^k and the step taken from it (b_k, τ_k); the
/// last row of a run carries no step.
struct TraceRecord {
  std::size_t k = 0;
  double wallSeconds = 0.0;
  double a = 0.0;
  std::optional<double> absB;
  std::optional<double> tau;
  std::optional<double> rqe;
  std::optional<double> msqr;
  std::optional<double> gradNorm;

  bool operator==(const TraceRecord&) const = default;
};

struct RunTrace {
  std::size_t trial = 0;
  std::vector<TraceRecord> records;

  bool operator==(const RunTrace&) const = default;
};

inline constexpr std::array<std::string_view, 9> kTraceColumns{"trial", "k",   "t_wall_s", "a",        "abs_b",
                                                               "tau",   "rqe", "msqr",     "grad_norm"};

inline std::string trace_header() {
  std::string h;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) h += ',';
    h += kTraceColumns[i];
  }
  return h;
}

namespace detail {

inline void put_opt(std::ostream& os, const std::optional<double>& x) {
  os << ',';
  if (x) os << io::format_double(*x);
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

inline void write_trace_rows(std::ostream& os, const RunTrace& t) {
  for (const auto& r : t.records) {
    os << t.trial << ',' << r.k << ',' << io::format_double(r.wallSeconds) << ',' << io::format_double(r.a);
    detail::put_opt(os, r.absB);
    detail::put_opt(os, r.tau);
    detail::put_opt(os, r.rqe);
    detail::put_opt(os, r.msqr);
    detail::put_opt(os, r.gradNorm);
    os << '\n';
  }
}

inline void write_trace_csv(std::ostream& os, const std::vector<RunTrace>& traces) {
  os << trace_header() << '\n';
  for (const auto& t : traces) write_trace_rows(os, t);
}

/// Parses trace CSV text. Columns are located by header name, so order is
/// free and extra columns are ignored; whitespace around fields is tolerated.
/// Returns one trace per trial id, in order of first appearance.
inline std::vector<RunTrace> read_trace_csv(std::istream& is, const std::string& source = "<stream>") {
  auto fail = [&](const std::string& msg) { raise(ErrorCode::SchemaMismatch, source + ": " + msg); };
  std::string line;
  if (!std::getline(is, line)) fail("empty file, expected header");
  const auto header = detail::split_csv(line);
  std::array<std::size_t, kTraceColumns.size()> col{};
  for (std::size_t c = 0; c < kTraceColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kTraceColumns[c]);
    if (it == header.end()) fail("missing column '" + std::string(kTraceColumns[c]) + "'");
    col[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<RunTrace> traces;
  std::map<std::size_t, std::size_t> index_of;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() < header.size())
      fail("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(f.size()));
    auto field = [&](std::size_t c) { return f[col[c]]; };
    auto required = [&](std::size_t c, auto& out) {
      if (field(c).empty() || !detail::parse_number(field(c), out))
        fail("row " + std::to_string(row) + ", column '" + std::string(kTraceColumns[c]) + "': bad value '" +
             std::string(field(c)) + "'");
    };
    auto optional = [&](std::size_t c) -> std::optional<double> {
      if (field(c).empty()) return std::nullopt;
      double x = 0.0;
      if (!detail::parse_number(field(c), x))
        fail("row " + std::to_string(row) + ", column '" + std::string(kTraceColumns[c]) + "': bad value '" +
             std::string(field(c)) + "'");
      return x;
    };

    std::size_t trial = 0;
    TraceRecord r;
    required(0, trial);
    required(1, r.k);
    required(2, r.wallSeconds);
    required(3, r.a);
    r.absB = optional(4);
    r.tau = optional(5);
    r.rqe = optional(6);
    r.msqr = optional(7);
    r.gradNorm = optional(8);

    auto [it, inserted] = index_of.try_emplace(trial, traces.size());
    if (inserted) traces.push_back(RunTrace{trial, {}});
    auto& recs = traces[it->second].records;
    if (!recs.empty() && r.k <= recs.back().k)
      fail("row " + std::to_string(row) + ", column 'k': iteration index not increasing within trial " +
           std::to_string(trial));
    recs.push_back(r);
  }
  return traces;
}

}  // namespace rayq
