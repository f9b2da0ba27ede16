#pragma once

// Dense ground truth and error metrics. Everything here may use A^T and
// factorizations of B; it exists for tests, diagnostics and the baselines.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rayq/linalg.hpp"
#include "rayq/trace.hpp"

namespace rayq {

struct ReferenceSolution {
  double maxValue = 0.0;
  UnitBVector maxVector = UnitBVector::trusted(Vector());
  /// λ₁ − λ₂ of B⁻¹A^H; +inf when d = 1.
  double eigengap = 0.0;
  Index maxSpaceDim = 0;
  /// Generalized eigenvalues of (A^H, B), descending.
  Vector eigenvalues;
};

inline constexpr double kMultiplicityTolerance = 1e-8;

/// Symmetric eigensolve of L⁻¹A^H L⁻ᵀ with B = LLᵀ.
inline ReferenceSolution reference_solve(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols()) raise(ErrorCode::NotSquare, "A and B must be square");
  if (A.rows() != B.rows()) raise(ErrorCode::DimensionMismatch, "A and B dimensions differ");
  const Index d = A.rows();

  const Eigen::MatrixXd bs = 0.5 * (B + B.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(bs);
  if (llt.info() != Eigen::Success) raise(ErrorCode::CholeskyFailure, "B is not positive definite");
  const auto L = llt.matrixL();

  const Eigen::MatrixXd ah = 0.5 * (A + A.transpose());
  const Eigen::MatrixXd left = L.solve(ah);
  Eigen::MatrixXd c = L.solve(left.transpose());
  c = 0.5 * (c + c.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) raise(ErrorCode::EigensolverFailure, "symmetric eigensolver did not converge");

  ReferenceSolution ref;
  ref.eigenvalues = es.eigenvalues().reverse();
  ref.maxValue = ref.eigenvalues[0];
  ref.eigengap = d > 1 ? ref.eigenvalues[0] - ref.eigenvalues[1] : std::numeric_limits<double>::infinity();

  const double scale = ref.eigenvalues.cwiseAbs().maxCoeff();
  ref.maxSpaceDim = 0;
  for (Index i = 0; i < d; ++i)
    if (ref.eigenvalues[0] - ref.eigenvalues[i] <= kMultiplicityTolerance * scale) ++ref.maxSpaceDim;

  const Vector y = es.eigenvectors().col(d - 1);
  Vector v = L.transpose().solve(y);
  v /= std::sqrt(v.dot(bs * v));
  ref.maxVector = UnitBVector::trusted(std::move(v));
  return ref;
}

inline ReferenceSolution reference_solve(const DensePair& p) { return reference_solve(p.A, p.B); }

/// Norms that enter the convergence constants. κ(B) = λ_max(B)/λ_min(B).
struct SpectralConstants {
  double normA = 0.0;
  double normAH = 0.0;
  double normB = 0.0;
  double normBinv = 0.0;
  double kappaB = 0.0;
};

inline SpectralConstants spectral_constants(const DensePair& p) {
  SpectralConstants s;
  const Eigen::MatrixXd ata = p.A.transpose() * p.A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(ata, Eigen::EigenvaluesOnly);
  s.normA = std::sqrt(std::max(0.0, ea.eigenvalues().maxCoeff()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(Eigen::MatrixXd(p.symmetric_part()), Eigen::EigenvaluesOnly);
  s.normAH = eh.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(Eigen::MatrixXd(0.5 * (p.B + p.B.transpose())),
                                                    Eigen::EigenvaluesOnly);
  const double lmin = eb.eigenvalues().minCoeff(), lmax = eb.eigenvalues().maxCoeff();
  if (!(lmin > 0.0)) raise(ErrorCode::NotSpd, "B has a nonpositive eigenvalue");
  s.normB = lmax;
  s.normBinv = 1.0 / lmin;
  s.kappaB = lmax / lmin;
  return s;
}

/// Relative quotient error (R − r)/|R|. When R = 0 the absolute error R − r
/// is reported instead and `absolute` is set.
struct QuotientError {
  double value = 0.0;
  bool absolute = false;
};

inline QuotientError quotient_error(double maxValue, double r) {
  if (maxValue == 0.0) return {maxValue - r, true};
  return {(maxValue - r) / std::abs(maxValue), false};
}

inline QuotientError rqe(const ReferenceSolution& ref, const OperatorPair& pair, const Vector& v) {
  return quotient_error(ref.maxValue, rayleigh(pair, v));
}

/// ‖A^H v − ⟨v, A^H v⟩ Bv‖² for v on the B-sphere.
inline double eigen_residual_sq(const DensePair& p, const Vector& v) {
  const Vector ahv = 0.5 * (p.A * v + p.A.transpose() * v);
  return (ahv - v.dot(ahv) * (p.B * v)).squaredNorm();
}

/// Running minimum of the squared eigen-residual along v⁰..v^k.
inline std::vector<double> msqr(const DensePair& p, std::span<const Vector> iterates) {
  std::vector<double> out;
  out.reserve(iterates.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : iterates) {
    best = std::min(best, eigen_residual_sq(p, v));
    out.push_back(best);
  }
  return out;
}

struct SinB2 {
  /// min over s ∈ {±1} of 1 − s·cos_B; in [0, 1].
  double minimized = 0.0;
  /// 1 − cos_B without sign folding.
  double signedValue = 0.0;
};

inline SinB2 sin_b2(const Matrix& B, const Vector& v, const Vector& vTrue) {
  if (v.size() != B.rows() || vTrue.size() != B.rows())
    raise(ErrorCode::DimensionMismatch, "vector size does not match B");
  const Vector bt = B * vTrue;
  const double nv = std::sqrt(std::max(0.0, v.dot(B * v)));
  const double nt = std::sqrt(std::max(0.0, vTrue.dot(bt)));
  if (nv == 0.0 || nt == 0.0) raise(ErrorCode::ZeroVector, "sin_B² of a zero vector");
  const double cosine = std::clamp(v.dot(bt) / (nv * nt), -1.0, 1.0);
  return {1.0 - std::abs(cosine), 1.0 - cosine};
}

/// 8‖A‖²‖B⁻¹‖(1 + 3κ(B)) / (n + 1): bound on min_{k≤n} b_k².
inline double min_bsq_bound(const SpectralConstants& s, std::size_t n) {
  return 8.0 * s.normA * s.normA * s.normBinv * (1.0 + 3.0 * s.kappaB) / static_cast<double>(n + 1);
}

/// 4‖A‖‖B⁻¹‖: bound on each τ_k b_k.
inline double step_product_bound(const SpectralConstants& s) { return 4.0 * s.normA * s.normBinv; }

/// Markov-type bound on P(residual² ≥ ε) after n steps.
inline double residual_rate_bound(const SpectralConstants& s, Index d, std::size_t n, double eps) {
  return 8.0 * static_cast<double>(d - 1) * s.normA * s.normA * s.normBinv * (1.0 + 3.0 * s.kappaB) * s.kappaB /
         (static_cast<double>(n + 1) * eps);
}

struct BoundReport {
  bool pass = true;
  /// min over prefixes of (bound − min b²); negative on failure.
  double worstMargin = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> firstViolation;
  std::size_t prefixesChecked = 0;
};

/// Checks min_{k≤n} b_k² against the bound at every prefix of the trace.
/// Rows without a recorded |b| (e.g. the final row) are skipped.
inline BoundReport check_min_bsq_bound(const RunTrace& trace, const SpectralConstants& s) {
  BoundReport rep;
  double running = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    if (!r.absB) continue;
    running = std::min(running, (*r.absB) * (*r.absB));
    const double margin = min_bsq_bound(s, r.k) - running;
    ++rep.prefixesChecked;
    rep.worstMargin = std::min(rep.worstMargin, margin);
    if (margin < 0.0 && !rep.firstViolation) {
      rep.pass = false;
      rep.firstViolation = r.k;
    }
  }
  return rep;
}

inline BoundReport check_min_bsq_bound(const RunTrace& trace, const DensePair& p) {
  return check_min_bsq_bound(trace, spectral_constants(p));
}

}  // namespace rayq
