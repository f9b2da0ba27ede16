// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rayq/rayq.hpp"

using namespace rayq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return quantile_sorted(xs, 0.5);
}

double final_rqe(const TrialOutcome& t, std::size_t solver) {
  return quotient_error(t.reference.maxValue, t.runs[solver].trace.records.back().a).value;
}

// Steps of m = 1 runs with the scalars needed for criteria 1 and 2.
struct StepLog {
  double a0, a1, b, c, d, tau;
};

std::vector<StepLog> logged_steps(std::uint64_t seed, Index dim, std::size_t iters) {
  const DensePair dense = gaussian_pair(dim, seed);
  const OperatorPair pair = dense.operators();
  RngStream rng(seed, 1);
  IterateState state = IterateState::start(pair, sample_initial(pair, rng));
  std::vector<StepLog> out;
  for (std::size_t k = 0; k < iters; ++k) {
    StepOutcome step = szo_step(pair, state, rng, 1);
    if (step.signal == StepSignal::ExactTermination) break;
    const auto& s = step.state;
    out.push_back({state.a, s.a, *s.lastB, *s.lastC, *s.lastD, *s.lastTau});
    state = std::move(step.state);
  }
  return out;
}

Outcome c1_step_identity() {
  double worst = 0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& s : logged_steps(seed, 50, 500)) {
      ++steps;
      worst = std::max(worst, std::abs((s.a1 - s.a0) - s.tau * s.b / 2) / std::max(1.0, std::abs(s.a0)));
    }
  return {worst <= 1e-10 && steps == 5000, std::to_string(steps) + " steps, worst scaled deviation " + num(worst)};
}

Outcome c2_stationarity() {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& s : logged_steps(seed, 50, 500)) {
      const auto r = step_stationarity(s.a0, s.b, s.c, s.d, s.tau);
      worst = std::max(worst, r.residual / r.scale);
    }
  return {worst <= 1e-8, "worst scaled residual of g'(tau) " + num(worst)};
}

Outcome c3_min_bsq_bound() {
  std::size_t runs = 0, violations = 0, prefixes = 0;
  double worstRatio = 0;
  for (Family f : {Family::GaussianPair, Family::IllConditioned, Family::OperatorNorm, Family::KarhunenLoeve})
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ProblemSpec ps{.family = f, .dim = 50, .q = f == Family::IllConditioned ? std::optional<int>(3) : std::nullopt,
                     .seed = seed};
      const DensePair dense = generate(ps);
      const auto sc = spectral_constants(dense);
      SolverConfig cfg;
      cfg.maxIters = 1000;
      cfg.bTolSq = 0;
      RngStream rng(seed, 1);
      const auto run = szo_run(dense.operators(), cfg, rng);
      const auto rep = check_min_bsq_bound(run.trace, sc);
      ++runs;
      violations += !rep.pass;
      prefixes += rep.prefixesChecked;
      double best = INFINITY;
      for (const auto& r : run.trace.records)
        if (r.absB) {
          best = std::min(best, *r.absB * *r.absB);
          worstRatio = std::max(worstRatio, best / min_bsq_bound(sc, r.k));
        }
    }
  return {violations == 0, std::to_string(runs) + " runs, " + std::to_string(prefixes) + " prefixes, " +
                               std::to_string(violations) + " violating runs, max min(b^2)/bound " + num(worstRatio)};
}

Outcome c4_second_moment() {
  const Index d = 10;
  const std::size_t n = 100000;
  RngStream g(4, 0);
  const DensePair dense = gaussian_pair(d, 4);
  const OperatorPair pair = dense.operators();
  const UnitBVector v = sample_initial(pair, g);
  Matrix acc = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = sample_tangent_direction(pair, v, g).x;
    acc.noalias() += x * x.transpose();
  }
  acc /= static_cast<double>(n);
  const Vector bv = pair.applyB(v.vec());
  const Vector w = bv.normalized();
  const Matrix proj = Matrix::Identity(d, d) - w * w.transpose();
  const double err = (acc - proj / static_cast<double>(d - 1)).norm();
  const double tol = 5 * std::sqrt(static_cast<double>(d) / static_cast<double>(n));
  return {err <= tol, "Frobenius deviation " + num(err) + " vs " + num(tol)};
}

// f on the B-sphere is the quotient ⟨w,Aw⟩/⟨w,Bw⟩, evaluated here in extended precision so
// the difference f(R_v(τx)) − f(v) is not swamped by cancellation.
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

Outcome c5_zeroth_order_identity() {
  double worst = 0, worstDouble = 0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 0; seed < 10 && steps < 1000; ++seed) {
    const DensePair dense = gaussian_pair(50, 100 + seed);
    const OperatorPair pair = dense.operators();
    const LMatrix A = dense.A.cast<long double>(), B = dense.B.cast<long double>();
    auto f = [&](const LVector& w) { return w.dot(A * w) / w.dot(B * w); };
    RngStream rng(100 + seed, 1);
    IterateState state = IterateState::start(pair, sample_initial(pair, rng));
    for (std::size_t k = 0; k < 100 && steps < 1000; ++k) {
      StepOutcome step = szo_step(pair, state, rng, 1);
      if (step.signal == StepSignal::ExactTermination) break;
      const double b = *step.state.lastB, tau = *step.state.lastTau;
      const Vector& x = step.state.lastX;
      const LVector v = state.v.vec().cast<long double>(), xl = x.cast<long double>();
      const LVector w = v + static_cast<long double>(tau) * xl;
      const LVector retracted = w / std::sqrt(w.dot(B * w));
      const long double coef = 2 * (f(retracted) - f(v)) / static_cast<long double>(tau);
      const Vector lhs = b * x, rhs = static_cast<double>(coef) * x;
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / lhs.cwiseAbs().maxCoeff());

      const double fv = rayleigh(pair, state.v.vec());
      const double fr = rayleigh(pair, retract(pair, state.v, tau * x).vec());
      const Vector rhsDouble = (2 * (fr - fv) / tau) * x;
      worstDouble = std::max(worstDouble, (lhs - rhsDouble).cwiseAbs().maxCoeff() / lhs.cwiseAbs().maxCoeff());
      ++steps;
      state = std::move(step.state);
    }
  }
  return {steps == 1000 && worst <= 1e-10, std::to_string(steps) + " steps, worst componentwise relative deviation " +
                                               num(worst) + " (all-double evaluation: " + num(worstDouble) + ")"};
}

Outcome c6_conditional_mean() {
  const Index d = 20;
  const int n = 100000;
  double worstZ = 0;
  int within = 0;
  for (std::uint64_t p = 0; p < 20; ++p) {
    const DensePair dense = gaussian_pair(d, 600 + p);
    const OperatorPair pair = dense.operators();
    RngStream g(600 + p, 2);
    const auto state = IterateState::start(pair, sample_initial(pair, g));
    const Block x = sample_tangent_block(state.bv, n, g);
    const Block ax = pair.applyA(x);
    const Eigen::ArrayXd b2 = (x.transpose() * state.av + ax.transpose() * state.v.vec()).array().square();
    const double mean = b2.mean();
    const double se = std::sqrt((b2 - mean).square().sum() / (n - 1) / n);
    const double target = riemannian_grad(dense, state.v.vec()).squaredNorm() / (d - 1);
    const double z = std::abs(mean - target) / se;
    worstZ = std::max(worstZ, z);
    within += z <= 5;
  }
  return {within == 20, std::to_string(within) + "/20 within 5 SE, worst " + num(worstZ) + " SE"};
}

ExperimentConfig exp_config(Family f, Index d, std::size_t trials, std::size_t iters, std::vector<SolverSpec> s) {
  ExperimentConfig c;
  c.problem.family = f;
  c.problem.dim = d;
  c.trials = trials;
  c.maxIters = iters;
  c.solvers = std::move(s);
  c.diagnostics = false;
  c.recordEvery = iters;
  return c;
}

Outcome c7_oracle_convergence() {
  const auto res = run_trials(exp_config(Family::GaussianPair, 10, 10, 2000, {SolverSpec::szo(10)}));
  int good = 0;
  double worst = 0;
  for (const auto& t : res.trials) {
    const double e = final_rqe(t, 0);
    good += e < 1e-6;
    worst = std::max(worst, e);
  }
  return {good >= 9, std::to_string(good) + "/10 seeds below 1e-6, worst final RQE " + num(worst)};
}

Outcome c8_m_ordering() {
  const auto res = run_trials(exp_config(Family::GaussianPair, 100, 10, 1000,
                                         {SolverSpec::szo(1), SolverSpec::szo(10), SolverSpec::szo(100)}));
  std::vector<double> med;
  for (std::size_t s = 0; s < 3; ++s) {
    std::vector<double> xs;
    for (const auto& t : res.trials) xs.push_back(final_rqe(t, s));
    med.push_back(median(xs));
  }
  return {med[2] < med[1] && med[1] < med[0],
          "median final RQE m=1 " + num(med[0]) + ", m=10 " + num(med[1]) + ", m=100 " + num(med[2])};
}

Outcome c9_baseline_ordering() {
  const auto res = run_trials(exp_config(Family::OperatorNorm, 100, 10, 1000,
                                         {SolverSpec::szo(100), SolverSpec::zorga(ZorgaVariant::ConstantStep, 100),
                                          SolverSpec::zorga(ZorgaVariant::Armijo, 100)}));
  int good = 0;
  std::vector<double> s, zc, za;
  for (const auto& t : res.trials) {
    s.push_back(final_rqe(t, 0));
    zc.push_back(final_rqe(t, 1));
    za.push_back(final_rqe(t, 2));
    good += s.back() < zc.back() && s.back() < za.back();
  }
  return {good >= 9, std::to_string(good) + "/10 seeds; median SZO " + num(median(s)) + ", ZO-RGA const " +
                         num(median(zc)) + ", ZO-RGA Armijo " + num(median(za))};
}

Outcome c10_rga_bound() {
  std::size_t violations = 0, checked = 0;
  double worstRatio = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DensePair dense = gaussian_pair(50, seed);
    const auto sc = spectral_constants(dense);
    const double l = 2 * sc.normAH * (1 + sc.kappaB);
    const double rmax = reference_solve(dense).maxValue;
    SolverConfig cfg;
    cfg.maxIters = 1000;
    RngStream rng(seed, 1);
    const auto run = rga_run(dense, cfg, rng);
    const double f0 = run.trace.records.front().a;
    double best = INFINITY;
    for (const auto& r : run.trace.records) {
      best = std::min(best, *r.gradNorm * *r.gradNorm);
      const double bound = 2 * l * (rmax - f0) / static_cast<double>(r.k + 1);
      ++checked;
      violations += best > bound;
      worstRatio = std::max(worstRatio, best / bound);
    }
  }
  return {violations == 0, std::to_string(checked) + " prefixes, " + std::to_string(violations) +
                               " violations, max ratio " + num(worstRatio)};
}

Outcome c11_complex_embedding() {
  RngStream g(11, 0);
  auto cmat = [&](Index d) {
    ComplexMatrix m(d, d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j) m(i, j) = {g.normal(), g.normal()};
    return m;
  };
  auto cvec = [&](Index d) {
    ComplexVector v(d);
    for (Index i = 0; i < d; ++i) v[i] = {g.normal(), g.normal()};
    return v;
  };
  double worstHom = 0;
  int matched = 0;
  double worstGap = 0;
  for (int p = 0; p < 100; ++p) {
    const Index d = 1 + p % 8;
    const ComplexMatrix m1 = cmat(d), m2 = cmat(d);
    const ComplexVector x = cvec(d), v = cvec(d);
    const Matrix r1 = realify_matrix(m1), r2 = realify_matrix(m2);
    const double ip = std::abs(realify_vector(x).dot(r1 * realify_vector(v)) - x.dot(m1 * v).real()) /
                      std::max(1.0, std::abs(x.dot(m1 * v).real()));
    const double prod = (realify_matrix(m1 * m2) - r1 * r2).norm() / (r1.norm() * r2.norm());
    const double app = (r1 * realify_vector(v) - realify_vector(m1 * v)).norm() / (r1.norm() * v.norm());
    worstHom = std::max({worstHom, ip, prod, app});

    ComplexMatrix b = m2.adjoint() * m2 / static_cast<double>(d);
    b.diagonal().array() += 0.5;
    b = (0.5 * (b + b.adjoint())).eval();
    SolverConfig cfg;
    cfg.maxIters = 2000;
    RngStream rng(1100 + p, 1);
    const auto sol = solve_complex(m1, b, cfg, rng);
    const double ref = complex_reference_max(m1, b);
    const double gap = std::abs(sol.value - ref) / std::max(1.0, std::abs(ref));
    worstGap = std::max(worstGap, gap);
    matched += gap <= 1e-6;
  }
  return {worstHom <= 1e-12 && matched >= 95, "homomorphism worst " + num(worstHom) + "; " + std::to_string(matched) +
                                                  "/100 values within 1e-6 (worst " + num(worstGap) + ")"};
}

Outcome c12_karhunen_loeve() {
  const Index d = 300;
  const DensePair dense = karhunen_loeve(d);
  const OperatorPair pair = dense.operators();
  const auto ref = reference_solve(dense);
  int good = 0;
  std::string finals;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<double> runmin;
    const TraceProbe probe = [&](const UnitBVector& v, TraceRecord&) {
      const double e = sin_b2(dense.B, v.vec(), ref.maxVector.vec()).minimized;
      runmin.push_back(runmin.empty() ? e : std::min(runmin.back(), e));
    };
    SolverConfig cfg;
    cfg.m = 100;
    cfg.maxIters = 500;
    RngStream rng(seed, 1);
    szo_run(pair, cfg, rng, &probe);
    bool nonincreasing = true;
    for (std::size_t i = 1; i < runmin.size(); ++i) nonincreasing = nonincreasing && runmin[i] <= runmin[i - 1];
    const bool ok = nonincreasing && runmin.back() < runmin.front() && runmin.back() < 1e-2;
    good += ok;
    finals += (finals.empty() ? "" : ", ") + num(runmin.back());
  }
  return {good >= 4, std::to_string(good) + "/5 seeds; final running-min sin^2_B " + finals};
}

Outcome c13_timing_scaling() {
  BenchConfig b;
  b.family = Family::IllConditioned;
  b.q = 1;
  b.dims = {50, 100, 200};
  b.ms = {100};
  b.trials = 10;
  const auto rows = bench_to_target(b);
  const double p = fit_time_exponent(rows, 100);
  std::string detail = "fit exponent " + num(p) + "; median s:";
  for (const auto& r : rows) detail += " d=" + std::to_string(r.d) + " " + num(r.medianSeconds);
  return {p >= 1.6 && p <= 2.6, detail};
}

std::string slurp_without_wall(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string line, out;
  while (std::getline(in, line)) {
    std::size_t c1 = line.find(','), c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1),
                c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
    out += (c3 == std::string::npos ? line : line.substr(0, c2 + 1) + line.substr(c3)) + '\n';
  }
  return out;
}

Outcome c14_determinism() {
  const fs::path root = fs::temp_directory_path() / ("rayq_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  ExperimentConfig c;
  c.problem = {.family = Family::IllConditioned, .dim = 30, .q = 2};
  c.solvers = {SolverSpec::szo(1), SolverSpec::szo(10), SolverSpec::rga(),
               SolverSpec::zorga(ZorgaVariant::ConstantStep, 10), SolverSpec::zorga(ZorgaVariant::Armijo, 10)};
  c.trials = 5;
  c.maxIters = 300;
  c.baseSeed = 2024;
  c.output = root / "a";
  run_experiment(c, worker_count());
  c.output = root / "b";
  run_experiment(c, 1);
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a" / "traces")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), root / "a");
    differ += slurp_without_wall(e.path()) != slurp_without_wall(root / "b" / rel);
  }
  fs::remove_all(root);
  return {files == 25 && differ == 0, std::to_string(files) + " trace files compared, " + std::to_string(differ) +
                                          " differ outside t_wall_s"};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
  double limitSeconds;  // 0 = no runtime requirement
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "step identity", c1_step_identity, 10},
      {2, "stationarity of the optimal step", c2_stationarity, 0},
      {3, "min b^2 bound on all families", c3_min_bsq_bound, 0},
      {4, "sampler second moment", c4_second_moment, 30},
      {5, "zeroth-order identity", c5_zeroth_order_identity, 0},
      {6, "conditional mean of b^2", c6_conditional_mean, 0},
      {7, "oracle convergence", c7_oracle_convergence, 60},
      {8, "sample-count ordering", c8_m_ordering, 0},
      {9, "baseline ordering", c9_baseline_ordering, 0},
      {10, "RGA sublinear bound", c10_rga_bound, 0},
      {11, "complex embedding", c11_complex_embedding, 0},
      {12, "Karhunen-Loeve eigenfunction", c12_karhunen_loeve, 300},
      {13, "time scaling in d", c13_timing_scaling, 0},
      {14, "determinism", c14_determinism, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limitSeconds > 0 && secs >= c.limitSeconds) {
      o.pass = false;
      o.detail += "; over the " + num(c.limitSeconds) + " s limit";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << num(secs) << " s]" << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
