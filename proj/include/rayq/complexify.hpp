#pragma once

// Complex pairs solved through the real embedding
//   v ↦ (Re v, Im v),   M ↦ [[Re M, −Im M], [Im M, Re M]],
// under which ⟨x̃, M̃ṽ⟩ = Re⟨x, Mv⟩ and the real quotient of (Ã, B̃) equals
// Re⟨v,Av⟩/⟨v,Bv⟩.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <charconv>
#include <complex>
#include <istream>
#include <ostream>
#include <string>

#include "rayq/algorithms.hpp"
#include "rayq/linalg.hpp"
#include "rayq/matrix_io.hpp"
#include "rayq/rng.hpp"

namespace rayq {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline Vector realify_vector(const ComplexVector& v) {
  Vector out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

inline ComplexVector derealify_vector(const Vector& v) {
  if (v.size() % 2 != 0) raise(ErrorCode::DimensionMismatch, "realified vector must have even length");
  const Index d = v.size() / 2;
  ComplexVector out(d);
  for (Index i = 0; i < d; ++i) out[i] = {v[i], v[d + i]};
  return out;
}

inline Matrix realify_matrix(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) raise(ErrorCode::NotSquare, "realify_matrix expects a square matrix");
  const Index d = m.rows();
  Matrix out(2 * d, 2 * d);
  out.topLeftCorner(d, d) = m.real();
  out.topRightCorner(d, d) = -m.imag();
  out.bottomLeftCorner(d, d) = m.imag();
  out.bottomRightCorner(d, d) = m.real();
  return out;
}

/// Re⟨v,Av⟩ / ⟨v,Bv⟩ with ⟨x,y⟩ = Σ y_i conj(x_i).
inline double complex_rayleigh(const ComplexMatrix& A, const ComplexMatrix& B, const ComplexVector& v) {
  const double den = v.dot(B * v).real();
  if (!(den > 0.0)) raise(ErrorCode::NonPositiveDenominator, "⟨v,Bv⟩ ≤ 0");
  return v.dot(A * v).real() / den;
}

inline constexpr int kHermitianProbes = 20;

/// Random-probe check that B is Hermitian positive definite.
inline void check_hermitian_pd(const ComplexMatrix& B, std::uint64_t seed = 0xC0FFEEull) {
  if (B.rows() != B.cols()) raise(ErrorCode::NotSquare, "B must be square");
  RngStream rng(seed, 0x4E);
  const Index d = B.rows();
  auto draw = [&] {
    ComplexVector z(d);
    for (Index i = 0; i < d; ++i) z[i] = {rng.normal(), rng.normal()};
    return z;
  };
  for (int p = 0; p < kHermitianProbes; ++p) {
    const ComplexVector u = draw(), w = draw();
    const ComplexVector bu = B * u, bw = B * w;
    const std::complex<double> uBw = u.dot(bw), wBu = w.dot(bu);
    const double scale = u.norm() * bw.norm() + w.norm() * bu.norm();
    if (std::abs(uBw - std::conj(wBu)) > 1e-10 * scale) raise(ErrorCode::NotHermitianPD, "B failed the Hermitian probe");
    if (!(u.dot(bu).real() > 0.0)) raise(ErrorCode::NotHermitianPD, "B failed the positivity probe");
  }
}

struct ComplexSolveResult {
  ComplexVector v;
  double value = 0.0;
  RunTrace trace;
  StopReason reason = StopReason::MaxIters;
};

/// Runs the SZO solver on (Ã, B̃) and maps the final iterate back to ℂ^d.
inline ComplexSolveResult solve_complex(const ComplexMatrix& A, const ComplexMatrix& B, const SolverConfig& cfg,
                                        RngStream& rng) {
  if (A.rows() != A.cols()) raise(ErrorCode::NotSquare, "A must be square");
  if (A.rows() != B.rows()) raise(ErrorCode::DimensionMismatch, "A and B dimensions differ");
  check_hermitian_pd(B);
  const OperatorPair pair = OperatorPair::dense(realify_matrix(A), realify_matrix(B));
  RunResult run = szo_run(pair, cfg, rng);
  ComplexSolveResult out;
  out.v = derealify_vector(run.state.v.vec());
  out.value = complex_rayleigh(A, B, out.v);
  out.trace = std::move(run.trace);
  out.reason = run.reason;
  return out;
}

/// Largest eigenvalue of B⁻¹A^H, A^H = (A + A*)/2, from a complex Hermitian eigensolve.
inline double complex_reference_max(const ComplexMatrix& A, const ComplexMatrix& B) {
  const ComplexMatrix bh = 0.5 * (B + B.adjoint());
  Eigen::LLT<ComplexMatrix> llt(bh);
  if (llt.info() != Eigen::Success) raise(ErrorCode::CholeskyFailure, "B is not positive definite");
  const auto L = llt.matrixL();
  const ComplexMatrix ah = 0.5 * (A + A.adjoint());
  const ComplexMatrix left = L.solve(ah);
  ComplexMatrix c = L.solve(ComplexMatrix(left.adjoint()));
  c = 0.5 * (c + c.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) raise(ErrorCode::EigensolverFailure, "Hermitian eigensolver did not converge");
  return es.eigenvalues().maxCoeff();
}

// Text format: "zd <rows> <cols>\n" then row-major "re im" pairs.

inline void write_complex_text(std::ostream& os, const ComplexMatrix& m) {
  os << "zd " << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << "  ";
      os << io::format_double(m(i, j).real()) << ' ' << io::format_double(m(i, j).imag());
    }
    os << '\n';
  }
}

inline ComplexMatrix read_complex_text(std::istream& is) {
  std::string tag;
  long long rows = 0, cols = 0;
  if (!(is >> tag >> rows >> cols) || tag != "zd") raise(ErrorCode::Io, "bad complex matrix header");
  if (rows < 1 || cols < 1) raise(ErrorCode::Io, "matrix dimensions must be positive");
  ComplexMatrix m(rows, cols);
  auto next = [&] {
    std::string tok;
    if (!(is >> tok)) raise(ErrorCode::Io, "complex matrix ends early");
    double x = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || !std::isfinite(x))
      raise(ErrorCode::Io, "bad complex matrix entry '" + tok + "'");
    return x;
  };
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const double re = next();
      const double im = next();
      m(i, j) = {re, im};
    }
  return m;
}

}  // namespace rayq
