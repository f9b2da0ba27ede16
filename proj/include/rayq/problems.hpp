#pragma once

// Seeded generators for the four experiment families. Each generator is a
// pure function of its arguments.

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rayq/linalg.hpp"
#include "rayq/rng.hpp"

namespace rayq {

enum class Family { GaussianPair, IllConditioned, OperatorNorm, KarhunenLoeve };

constexpr std::string_view to_string(Family f) {
  switch (f) {
    case Family::GaussianPair: return "gaussian";
    case Family::IllConditioned: return "illcond";
    case Family::OperatorNorm: return "opnorm";
    case Family::KarhunenLoeve: return "kl";
  }
  return "unknown";
}

inline Family parse_family(std::string_view s) {
  if (s == "gaussian" || s == "GaussianPair") return Family::GaussianPair;
  if (s == "illcond" || s == "ill-conditioned" || s == "IllConditioned") return Family::IllConditioned;
  if (s == "opnorm" || s == "operator-norm" || s == "OperatorNorm") return Family::OperatorNorm;
  if (s == "kl" || s == "karhunen-loeve" || s == "KarhunenLoeve") return Family::KarhunenLoeve;
  raise(ErrorCode::InvalidArgument, "unknown problem family '" + std::string(s) + "'");
}

struct KarhunenLoeveParams {
  double lengthScale = 0.3;
  double lo = 0.0;
  double hi = 1.0;
};

struct ProblemSpec {
  Family family = Family::GaussianPair;
  Index dim = 0;
  std::optional<int> q;
  std::uint64_t seed = 0;
  KarhunenLoeveParams kl;

  void validate() const {
    if (family == Family::IllConditioned && (!q || *q < 1 || *q > 3))
      raise(ErrorCode::InvalidArgument, "ill-conditioned family needs q ∈ {1,2,3}");
    const Index min_dim = family == Family::KarhunenLoeve ? 3 : 2;
    if (dim < min_dim) raise(ErrorCode::DimensionTooSmall, "dimension too small for this family");
    if (family == Family::KarhunenLoeve && (!(kl.lengthScale > 0.0) || !(kl.hi > kl.lo)))
      raise(ErrorCode::InvalidArgument, "bad Karhunen-Loeve grid parameters");
  }
};

namespace detail {

inline constexpr std::uint64_t kGeneratorStream = 0x67656E00ull;

inline Matrix gaussian_matrix(RngStream& rng, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// A Gaussian; B = (B̃ + dI)ᵀ(B̃ + dI) with B̃ Gaussian.
inline DensePair gaussian_pair(Index d, std::uint64_t seed) {
  if (d < 2) raise(ErrorCode::DimensionTooSmall, "gaussian_pair needs d ≥ 2");
  RngStream rng(seed, detail::kGeneratorStream + 1);
  Matrix a = detail::gaussian_matrix(rng, d, d);
  Matrix shifted = detail::gaussian_matrix(rng, d, d);
  shifted.diagonal().array() += static_cast<double>(d);
  Matrix b = detail::symmetrized(shifted.transpose() * shifted);
  return DensePair(std::move(a), std::move(b));
}

/// Q from the QR decomposition of a d×d Gaussian matrix, columns signed so
/// that R has a nonnegative diagonal.
inline Matrix random_orthogonal(Index d, RngStream& rng) {
  const Matrix g = detail::gaussian_matrix(rng, d, d);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// A Gaussian; B = Q diag(10^{p_i}) Qᵀ with p_i ~ U(0, q).
inline DensePair ill_conditioned_pair(Index d, double q, std::uint64_t seed) {
  if (d < 2) raise(ErrorCode::DimensionTooSmall, "ill_conditioned_pair needs d ≥ 2");
  if (!(q >= 1.0)) raise(ErrorCode::InvalidArgument, "exponent range q must be ≥ 1");
  RngStream rng(seed, detail::kGeneratorStream + 2);
  Matrix a = detail::gaussian_matrix(rng, d, d);
  Vector lambda(d);
  for (Index i = 0; i < d; ++i) {
    double u = rng.uniform();
    while (u == 0.0) u = rng.uniform();
    lambda[i] = std::pow(10.0, q * u);
  }
  const Matrix qm = random_orthogonal(d, rng);
  Matrix b = detail::symmetrized(qm * lambda.asDiagonal() * qm.transpose());
  return DensePair(std::move(a), std::move(b));
}

struct OperatorNormProblem {
  DensePair pair;
  Matrix aFactor;  // d×d
  Matrix bFactor;  // 2d×d
};

/// A = ÃᵀÃ, B = B̃ᵀB̃ with Ã ∈ ℝ^{d×d}, B̃ ∈ ℝ^{2d×d} Gaussian.
inline OperatorNormProblem operator_norm_pair(Index d, std::uint64_t seed) {
  if (d < 2) raise(ErrorCode::DimensionTooSmall, "operator_norm_pair needs d ≥ 2");
  RngStream rng(seed, detail::kGeneratorStream + 3);
  Matrix at = detail::gaussian_matrix(rng, d, d);
  Matrix bt = detail::gaussian_matrix(rng, 2 * d, d);
  Matrix a = detail::symmetrized(at.transpose() * at);
  Matrix b = detail::symmetrized(bt.transpose() * bt);
  return {DensePair(std::move(a), std::move(b)), std::move(at), std::move(bt)};
}

/// Uniform grid on [lo, hi].
inline Vector kl_grid(Index d, const KarhunenLoeveParams& p = {}) {
  Vector t(d);
  for (Index i = 0; i < d; ++i) t[i] = p.lo + (p.hi - p.lo) * static_cast<double>(i) / static_cast<double>(d - 1);
  return t;
}

/// RBF covariance A_ij = exp(−(t_i − t_j)²/(2ℓ²)) and trapezoidal mass matrix B.
inline DensePair karhunen_loeve(Index d = 300, const KarhunenLoeveParams& p = {}) {
  if (d < 3) raise(ErrorCode::DimensionTooSmall, "karhunen_loeve needs d ≥ 3");
  if (!(p.lengthScale > 0.0) || !(p.hi > p.lo)) raise(ErrorCode::InvalidArgument, "bad grid parameters");
  const Vector t = kl_grid(d, p);
  const double inv = 1.0 / (2.0 * p.lengthScale * p.lengthScale);
  Matrix a(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      const double diff = t[i] - t[j];
      a(i, j) = std::exp(-diff * diff * inv);
    }
  const double h = (p.hi - p.lo) / static_cast<double>(d - 1);
  Matrix b = Matrix::Zero(d, d);
  for (Index i = 0; i < d; ++i) b(i, i) = (i == 0 || i == d - 1) ? 0.5 * h : h;
  return DensePair(std::move(a), std::move(b));
}

inline DensePair generate(const ProblemSpec& spec) {
  spec.validate();
  switch (spec.family) {
    case Family::GaussianPair: return gaussian_pair(spec.dim, spec.seed);
    case Family::IllConditioned: return ill_conditioned_pair(spec.dim, *spec.q, spec.seed);
    case Family::OperatorNorm: return operator_norm_pair(spec.dim, spec.seed).pair;
    case Family::KarhunenLoeve: return karhunen_loeve(spec.dim, spec.kl);
  }
  raise(ErrorCode::InvalidArgument, "unknown family");
}

}  // namespace rayq
