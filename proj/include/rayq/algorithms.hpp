#pragma once

// Stochastic zeroth-order ascent on the B-sphere with the closed-form line
// maximizer, plus the Riemannian gradient and zeroth-order gradient baselines.
//
// One SZO step at v (‖v‖_B = 1): draw a unit tangent direction x, form
//   a = ⟨v,Av⟩, b = ⟨x,Av⟩ + ⟨v,Ax⟩, c = ⟨x,Ax⟩, d = ⟨x,Bx⟩,
// maximize τ ↦ (a + τb + τ²c)/(1 + τ²d) exactly, and retract v + τx.
// With m > 1 samples the direction is the b-weighted average of m draws.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rayq/linalg.hpp"
#include "rayq/oracle.hpp"
#include "rayq/rng.hpp"
#include "rayq/sampling.hpp"
#include "rayq/trace.hpp"

namespace rayq {

/// Current iterate and the scalars of the step that produced it.
/// Av and Bv are cached so the next step does not recompute them.
struct IterateState {
  UnitBVector v;
  std::size_t k = 0;
  double a = 0.0;
  std::optional<double> lastB;
  std::optional<double> lastC;
  std::optional<double> lastD;
  std::optional<double> lastTau;
  /// Unit search direction of the step that produced v (empty at the start).
  Vector lastX;
  Vector av;
  Vector bv;

  explicit IterateState(UnitBVector point) : v(std::move(point)) {}

  static IterateState start(const OperatorPair& pair, UnitBVector v) {
    Block vb(pair.dim(), 1);
    vb.col(0) = v.vec();
    IterateState s(std::move(v));
    s.av = pair.applyA(vb).col(0);
    s.bv = pair.applyB(vb).col(0);
    s.a = s.v.vec().dot(s.av);
    return s;
  }
};

struct SolverConfig {
  std::size_t m = 1;
  std::size_t maxIters = 1000;
  double bTolSq = 1e-24;
  std::size_t bWindow = 50;
  std::optional<double> targetRqe;
  std::size_t recordEvery = 1;
  /// R(A,B) when an oracle is attached; enables the rqe column and targetRqe.
  std::optional<double> referenceMax;
  /// Wall-clock cap per run in seconds; a run that hits it stops as MaxIters.
  std::optional<double> timeBudget;

  void validate() const {
    if (m < 1) raise(ErrorCode::InvalidArgument, "sample count m must be ≥ 1");
    if (maxIters < 1) raise(ErrorCode::InvalidArgument, "maxIters must be ≥ 1");
    if (bWindow < 1) raise(ErrorCode::InvalidArgument, "bWindow must be ≥ 1");
    if (recordEvery < 1) raise(ErrorCode::InvalidArgument, "recordEvery must be ≥ 1");
    if (!(bTolSq >= 0.0)) raise(ErrorCode::InvalidArgument, "bTolSq must be ≥ 0");
    if (targetRqe && !referenceMax) raise(ErrorCode::InvalidArgument, "targetRqe needs referenceMax");
    if (timeBudget && !(*timeBudget > 0.0)) raise(ErrorCode::InvalidArgument, "timeBudget must be positive");
  }
};

enum class StepSignal { Continue, ExactTermination };

struct StepOutcome {
  IterateState state;
  StepSignal signal = StepSignal::Continue;
};

struct RunResult {
  IterateState state;
  RunTrace trace;
  StopReason reason = StopReason::MaxIters;
};

/// Fills diagnostic columns (msqr, grad_norm, ...) of a record at iterate v.
/// Time spent inside the probe is excluded from the wall-time column.
using TraceProbe = std::function<void(const UnitBVector& v, TraceRecord& record)>;

/// Maximizer of g(τ) = (a + τb + τ²c)/(1 + τ²d):
///   τ* = sign(b)·(s + sqrt(s² + 1/d)),  s = (c − ad)/(|b|d).
/// For s < 0 the sum is evaluated as (1/d)/(sqrt(s² + 1/d) − s) to avoid cancellation.
inline double optimal_step_size(double a, double b, double c, double d) {
  if (!(d > 0.0)) raise(ErrorCode::NonPositiveD, "d = ⟨x,Bx⟩ must be positive");
  if (b == 0.0) raise(ErrorCode::ZeroB, "b = 0: iterate is stationary along x");
  const double s = (c - a * d) / (std::abs(b) * d);
  const double r = std::hypot(s, 1.0 / std::sqrt(d));
  const double magnitude = s >= 0.0 ? s + r : (1.0 / d) / (r - s);
  return std::copysign(magnitude, b);
}

/// g'(τ)·(1 + τ²d)² = b + 2τ(c − ad) − τ²bd, and the scale it is compared against.
struct StationarityResidual {
  double residual = 0.0;
  double scale = 0.0;
};

inline StationarityResidual step_stationarity(double a, double b, double c, double d, double tau) {
  const double cad = c - a * d;
  return {std::abs(b + 2.0 * tau * cad - tau * tau * b * d), std::abs(b) + std::abs(cad) + std::abs(b) * d * tau * tau};
}

namespace detail {

inline StepOutcome advance_along(const OperatorPair& pair, const IterateState& s, const Vector& x, const Vector& ax) {
  const double b = x.dot(s.av) + s.v.vec().dot(ax);
  if (b == 0.0) {
    IterateState t = s;
    t.lastB = 0.0;
    t.lastC.reset();
    t.lastD.reset();
    t.lastTau.reset();
    return {std::move(t), StepSignal::ExactTermination};
  }
  const double c = x.dot(ax);
  const Vector bx = pair.applyB(x);
  const double d = x.dot(bx);
  const double tau = optimal_step_size(s.a, b, c, d);

  const Vector w = s.v.vec() + tau * x;
  const Vector bw = pair.applyB(w);
  const double n = detail::b_norm_from(w.dot(bw), w.squaredNorm());
  if (!(n >= 1e-300)) raise(ErrorCode::ZeroVector, "v + τx has vanishing B-norm");

  IterateState t(UnitBVector::trusted(w / n));
  t.k = s.k + 1;
  t.bv = bw / n;
  t.av = pair.applyA(t.v.vec());
  t.a = t.v.vec().dot(t.av);
  t.lastB = b;
  t.lastC = c;
  t.lastD = d;
  t.lastTau = tau;
  t.lastX = x;
  return {std::move(t), StepSignal::Continue};
}

}  // namespace detail

/// One step along a given unit tangent direction x (no sampling).
inline StepOutcome szo_step_along(const OperatorPair& pair, const IterateState& state, const Vector& x) {
  detail::check_dim(pair, x.size());
  return detail::advance_along(pair, state, x, pair.applyA(x));
}

/// One step of the m-sample method (m = 1 is the one-sample method).
inline StepOutcome szo_step(const OperatorPair& pair, const IterateState& state, RngStream& rng, std::size_t m) {
  if (m < 1) raise(ErrorCode::InvalidArgument, "sample count m must be ≥ 1");
  const auto cols = static_cast<Index>(m);

  Block x = sample_tangent_block(state.bv, cols, rng);
  Block ax = pair.applyA(x);
  if (m == 1) return detail::advance_along(pair, state, x.col(0), ax.col(0));

  // Aggregate; on a numerically null average the whole batch is redrawn once.
  for (int attempt = 0; attempt < 2; ++attempt) {
    if (attempt > 0) {
      x = sample_tangent_block(state.bv, cols, rng);
      ax = pair.applyA(x);
    }
    const Vector bi = x.transpose() * state.av + ax.transpose() * state.v.vec();
    const Vector xbar = x * bi / static_cast<double>(m);
    const double n = xbar.norm();
    if (n >= kNullSampleThreshold) {
      const Vector dir = xbar / n;
      return detail::advance_along(pair, state, dir, pair.applyA(dir));
    }
  }
  IterateState t = state;
  t.lastB = 0.0;
  t.lastC.reset();
  t.lastD.reset();
  t.lastTau.reset();
  return {std::move(t), StepSignal::ExactTermination};
}

namespace detail {

/// Shared recording and timing for the run loops.
class RunRecorder {
 public:
  RunRecorder(const SolverConfig& cfg, const TraceProbe* probe) : cfg_(cfg), probe_(probe) {
    start_ = std::chrono::steady_clock::now();
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() - excluded_;
  }

  std::optional<double> rqe(double a) const {
    if (!cfg_.referenceMax) return std::nullopt;
    return quotient_error(*cfg_.referenceMax, a).value;
  }

  bool out_of_time() const { return cfg_.timeBudget && elapsed() >= *cfg_.timeBudget; }

  bool target_met(double a) const {
    const auto e = rqe(a);
    return cfg_.targetRqe && e && *e <= *cfg_.targetRqe;
  }

  void record(std::size_t k, const UnitBVector& v, double a, std::optional<double> absB, std::optional<double> tau,
              bool force = false) {
    if (!force && k % cfg_.recordEvery != 0) return;
    TraceRecord r;
    r.k = k;
    r.wallSeconds = elapsed();
    r.a = a;
    r.absB = absB;
    r.tau = tau;
    r.rqe = rqe(a);
    if (probe_ && *probe_) {
      const auto t0 = std::chrono::steady_clock::now();
      (*probe_)(v, r);
      excluded_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    trace.records.push_back(r);
  }

  RunTrace trace;

 private:
  const SolverConfig& cfg_;
  const TraceProbe* probe_;
  std::chrono::steady_clock::time_point start_;
  double excluded_ = 0.0;
};

/// Running mean of the last `window` values.
class WindowMean {
 public:
  explicit WindowMean(std::size_t window) : buf_(window, 0.0) {}
  void push(double x) {
    sum_ += x - buf_[pos_];
    buf_[pos_] = x;
    pos_ = (pos_ + 1) % buf_.size();
    if (count_ < buf_.size()) ++count_;
    // Periodic exact resum keeps the rolling sum from drifting.
    if (pos_ == 0) {
      sum_ = 0.0;
      for (double v : buf_) sum_ += v;
    }
  }
  bool full() const { return count_ == buf_.size(); }
  double mean() const { return sum_ / static_cast<double>(buf_.size()); }

 private:
  std::vector<double> buf_;
  std::size_t pos_ = 0;
  std::size_t count_ = 0;
  double sum_ = 0.0;
};

}  // namespace detail

/// Runs SZO steps from v⁰ until exact termination, the b² window criterion,
/// the iteration cap or the target RQE.
inline RunResult szo_run_from(const OperatorPair& pair, UnitBVector v0, const SolverConfig& cfg, RngStream& rng,
                              const TraceProbe* probe = nullptr) {
  cfg.validate();
  detail::RunRecorder rec(cfg, probe);
  detail::WindowMean window(cfg.bWindow);
  IterateState state = IterateState::start(pair, std::move(v0));

  for (std::size_t k = 0; k < cfg.maxIters && !rec.out_of_time(); ++k) {
    if (rec.target_met(state.a)) {
      rec.record(k, state.v, state.a, std::nullopt, std::nullopt, true);
      return {std::move(state), std::move(rec.trace), StopReason::TargetReached};
    }
    StepOutcome out = szo_step(pair, state, rng, cfg.m);
    if (out.signal == StepSignal::ExactTermination) {
      rec.record(k, state.v, state.a, 0.0, std::nullopt, true);
      return {std::move(out.state), std::move(rec.trace), StopReason::ExactTermination};
    }
    const double b = *out.state.lastB;
    rec.record(k, state.v, state.a, std::abs(b), out.state.lastTau);
    state = std::move(out.state);
    window.push(b * b);
    if (window.full() && window.mean() < cfg.bTolSq) {
      rec.record(state.k, state.v, state.a, std::nullopt, std::nullopt, true);
      return {std::move(state), std::move(rec.trace), StopReason::BWindowBelowTol};
    }
  }
  const StopReason reason = rec.target_met(state.a) ? StopReason::TargetReached : StopReason::MaxIters;
  rec.record(state.k, state.v, state.a, std::nullopt, std::nullopt, true);
  return {std::move(state), std::move(rec.trace), reason};
}

inline RunResult szo_run(const OperatorPair& pair, const SolverConfig& cfg, RngStream& rng,
                         const TraceProbe* probe = nullptr) {
  cfg.validate();
  UnitBVector v0 = sample_initial(pair, rng);
  return szo_run_from(pair, std::move(v0), cfg, rng, probe);
}

/// (1/m) Σ_i [f(R_v(μ P_v x_i)) − f(v)]/μ · x_i for the given columns x_i,
/// with f = ⟨·,A·⟩ on the B-sphere evaluated through forward products only.
inline Vector zo_gradient_estimate(const OperatorPair& pair, const UnitBVector& v, double mu, const Block& directions) {
  if (!(mu > 0.0)) raise(ErrorCode::InvalidArgument, "smoothing parameter μ must be positive");
  if (directions.rows() != pair.dim() || directions.cols() < 1)
    raise(ErrorCode::DimensionMismatch, "directions must be a d×m block with m ≥ 1");
  const Vector bv = pair.applyB(v.vec());
  const double fv = rayleigh(pair, v.vec());
  const double nb = bv.norm();
  if (!(nb >= 1e-300)) raise(ErrorCode::DegenerateNormal, "‖Bv‖ vanishes");
  const Vector w = bv / nb;

  Block y = directions;
  y -= w * (w.transpose() * y);
  y *= mu;
  y.colwise() += v.vec();
  const Block ay = pair.applyA(y), by = pair.applyB(y);

  Vector g = Vector::Zero(pair.dim());
  for (Index i = 0; i < directions.cols(); ++i) {
    const double fi = y.col(i).dot(ay.col(i)) / y.col(i).dot(by.col(i));
    g += ((fi - fv) / mu) * directions.col(i);
  }
  return g / static_cast<double>(directions.cols());
}

inline Vector zo_gradient_estimate(const OperatorPair& pair, const UnitBVector& v, double mu, std::size_t m,
                                   RngStream& rng) {
  if (m < 1) raise(ErrorCode::InvalidArgument, "sample count m must be ≥ 1");
  Block x(pair.dim(), static_cast<Index>(m));
  fill_normal(rng, x);
  return zo_gradient_estimate(pair, v, mu, x);
}

/// Riemannian gradient ascent with τ = 1/L, L = 2‖A^H‖(1 + κ(B)).
inline RunResult rga_run_from(const DensePair& dense, UnitBVector v0, const SolverConfig& cfg,
                              const TraceProbe* probe = nullptr) {
  cfg.validate();
  const OperatorPair pair = dense.operators();
  const SpectralConstants sc = spectral_constants(dense);
  const double lipschitz = 2.0 * sc.normAH * (1.0 + sc.kappaB);
  const double tau = lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;

  detail::RunRecorder rec(cfg, probe);
  IterateState state = IterateState::start(pair, std::move(v0));
  auto make_record = [&](std::size_t k, const IterateState& s, std::optional<double> t, double gnorm, bool force) {
    const std::size_t before = rec.trace.records.size();
    rec.record(k, s.v, s.a, std::nullopt, t, force);
    if (rec.trace.records.size() > before) rec.trace.records.back().gradNorm = gnorm;
  };

  for (std::size_t k = 0; k < cfg.maxIters && !rec.out_of_time(); ++k) {
    const Vector g = riemannian_grad(dense, state.v.vec());
    if (rec.target_met(state.a)) {
      make_record(k, state, std::nullopt, g.norm(), true);
      return {std::move(state), std::move(rec.trace), StopReason::TargetReached};
    }
    if (g.squaredNorm() == 0.0 || tau == 0.0) {
      make_record(k, state, std::nullopt, g.norm(), true);
      return {std::move(state), std::move(rec.trace), StopReason::ExactTermination};
    }
    make_record(k, state, tau, g.norm(), false);
    IterateState next = IterateState::start(pair, retract(pair, state.v, tau * g));
    next.k = state.k + 1;
    next.lastTau = tau;
    state = std::move(next);
  }
  const StopReason reason = rec.target_met(state.a) ? StopReason::TargetReached : StopReason::MaxIters;
  make_record(state.k, state, std::nullopt, riemannian_grad(dense, state.v.vec()).norm(), true);
  return {std::move(state), std::move(rec.trace), reason};
}

inline RunResult rga_run(const DensePair& dense, const SolverConfig& cfg, RngStream& rng,
                         const TraceProbe* probe = nullptr) {
  const OperatorPair pair = dense.operators();
  return rga_run_from(dense, sample_initial(pair, rng), cfg, probe);
}

enum class ZorgaVariant { ConstantStep, Armijo };

struct ZorgaParams {
  double mu0 = 1e-4;
  double armijoSlope = 1e-4;
  double armijoContraction = 0.5;
  int armijoMaxBacktracks = 30;
};

/// Zeroth-order Riemannian gradient ascent with the m-sample estimator,
/// μ_k = μ₀/(k+1) and initial step 1/L, L = ‖A‖(1 + κ(B)).
inline RunResult zorga_run_from(const DensePair& dense, UnitBVector v0, const SolverConfig& cfg, ZorgaVariant variant,
                                RngStream& rng, const TraceProbe* probe = nullptr, const ZorgaParams& params = {}) {
  cfg.validate();
  const OperatorPair pair = dense.operators();
  const SpectralConstants sc = spectral_constants(dense);
  const double lipschitz = sc.normA * (1.0 + sc.kappaB);
  const double tau0 = lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;

  detail::RunRecorder rec(cfg, probe);
  IterateState state = IterateState::start(pair, std::move(v0));

  for (std::size_t k = 0; k < cfg.maxIters && !rec.out_of_time(); ++k) {
    if (rec.target_met(state.a)) {
      rec.record(k, state.v, state.a, std::nullopt, std::nullopt, true);
      return {std::move(state), std::move(rec.trace), StopReason::TargetReached};
    }
    const double mu = params.mu0 / static_cast<double>(k + 1);
    const Vector g = zo_gradient_estimate(pair, state.v, mu, cfg.m, rng);

    double tau = tau0;
    std::optional<IterateState> next;
    if (variant == ZorgaVariant::ConstantStep) {
      if (tau > 0.0) next = IterateState::start(pair, retract(pair, state.v, tau * g));
    } else {
      const double slope = g.squaredNorm();
      for (int t = 0; t <= params.armijoMaxBacktracks && tau > 0.0; ++t) {
        IterateState cand = IterateState::start(pair, retract(pair, state.v, tau * g));
        if (cand.a >= state.a + params.armijoSlope * tau * slope) {
          next = std::move(cand);
          break;
        }
        tau *= params.armijoContraction;
      }
    }
    if (!next) {
      tau = 0.0;
      next = state;
    }
    rec.record(k, state.v, state.a, std::nullopt, tau);
    IterateState s = std::move(*next);
    s.k = state.k + 1;
    s.lastTau = tau;
    state = std::move(s);
  }
  const StopReason reason = rec.target_met(state.a) ? StopReason::TargetReached : StopReason::MaxIters;
  rec.record(state.k, state.v, state.a, std::nullopt, std::nullopt, true);
  return {std::move(state), std::move(rec.trace), reason};
}

inline RunResult zorga_run(const DensePair& dense, const SolverConfig& cfg, ZorgaVariant variant, RngStream& rng,
                           const TraceProbe* probe = nullptr, const ZorgaParams& params = {}) {
  const OperatorPair pair = dense.operators();
  UnitBVector v0 = sample_initial(pair, rng);
  return zorga_run_from(dense, std::move(v0), cfg, variant, rng, probe, params);
}

}  // namespace rayq
