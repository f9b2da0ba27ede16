#pragma once

// Dense kernels, the B-sphere geometry and the adjoint-free operator pair.

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "rayq/error.hpp"
#include "rayq/rng.hpp"

namespace rayq {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
/// Dense row-major matrix; houses A, B and generator factors.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Column block of vectors, one vector per column (batched applies).
using Block = Eigen::MatrixXd;

/// Forward application v -> Mv of a square linear map, nothing else.
/// Matrix-free callers supply a block apply; dense callers hand over a matrix.
class ForwardOperator {
 public:
  using BlockApply = std::function<void(const Eigen::Ref<const Block>& in, Eigen::Ref<Block> out)>;

  ForwardOperator(Index dim, BlockApply fn) : dim_(dim), fn_(std::move(fn)) {
    if (dim_ < 1) raise(ErrorCode::InvalidArgument, "operator dimension must be positive");
    if (!fn_) raise(ErrorCode::InvalidArgument, "empty apply function");
  }

  static ForwardOperator dense(std::shared_ptr<const Matrix> m) {
    if (!m || m->rows() != m->cols()) raise(ErrorCode::NotSquare, "dense operator must be square");
    const Index d = m->rows();
    return ForwardOperator(d, [m = std::move(m)](const Eigen::Ref<const Block>& in, Eigen::Ref<Block> out) {
      out.noalias() = (*m) * in;
    });
  }

  static ForwardOperator dense(const Matrix& m) { return dense(std::make_shared<const Matrix>(m)); }

  Index dim() const noexcept { return dim_; }

  Vector operator()(const Vector& x) const {
    check(x.size());
    Vector y(dim_);
    fn_(x, y);
    return y;
  }

  Block operator()(const Block& x) const {
    check(x.rows());
    Block y(dim_, x.cols());
    fn_(x, y);
    return y;
  }

  /// Wraps this operator so that every applied column bumps `counter`.
  ForwardOperator counted(std::shared_ptr<std::atomic<std::uint64_t>> counter) const {
    return ForwardOperator(dim_, [inner = fn_, counter = std::move(counter)](const Eigen::Ref<const Block>& in,
                                                                           Eigen::Ref<Block> out) {
      counter->fetch_add(static_cast<std::uint64_t>(in.cols()), std::memory_order_relaxed);
      inner(in, out);
    });
  }

 private:
  void check(Index n) const {
    if (n != dim_)
      raise(ErrorCode::DimensionMismatch,
            "vector of size " + std::to_string(n) + " applied to operator of dimension " + std::to_string(dim_));
  }

  Index dim_;
  BlockApply fn_;
};

/// The problem (A, B) seen strictly through forward products. There is no
/// transpose-apply and no inverse-apply here; anything needing A^T lives on
/// DensePair instead.
class OperatorPair {
 public:
  static constexpr int kSpdProbes = 10;

  /// Verifies on random probes that B is symmetric positive definite.
  OperatorPair(ForwardOperator a, ForwardOperator b, std::uint64_t probeSeed = 0x5EEDB0B5ull)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.dim() != b_.dim()) raise(ErrorCode::DimensionMismatch, "A and B dimensions differ");
    verify_b(probeSeed);
  }

  static OperatorPair dense(const Matrix& a, const Matrix& b) {
    return OperatorPair(ForwardOperator::dense(a), ForwardOperator::dense(b));
  }

  Index dim() const noexcept { return a_.dim(); }
  bool b_spd_verified() const noexcept { return b_spd_; }

  Vector applyA(const Vector& v) const { return a_(v); }
  Vector applyB(const Vector& v) const { return b_(v); }
  Block applyA(const Block& x) const { return a_(x); }
  Block applyB(const Block& x) const { return b_(x); }

  const ForwardOperator& a() const noexcept { return a_; }
  const ForwardOperator& b() const noexcept { return b_; }

 private:
  void verify_b(std::uint64_t seed) {
    RngStream rng(seed, 0xB5);
    const Index d = dim();
    Block probes(d, 2 * kSpdProbes);
    for (Index j = 0; j < probes.cols(); ++j)
      for (Index i = 0; i < d; ++i) probes(i, j) = rng.normal();
    const Block bp = b_(probes);
    for (Index j = 0; j < kSpdProbes; ++j) {
      const auto u = probes.col(2 * j), w = probes.col(2 * j + 1);
      const auto bu = bp.col(2 * j), bw = bp.col(2 * j + 1);
      const double uBw = u.dot(bw), wBu = w.dot(bu);
      const double scale = u.norm() * bw.norm() + w.norm() * bu.norm();
      if (!(std::abs(uBw - wBu) <= 1e-12 * scale))
        raise(ErrorCode::NotSpd, "B failed the symmetry probe");
      if (!(u.dot(bu) > 0.0) || !(w.dot(bw) > 0.0)) raise(ErrorCode::NotSpd, "B failed the positivity probe");
    }
    b_spd_ = true;
  }

  ForwardOperator a_;
  ForwardOperator b_;
  bool b_spd_ = false;
};

/// Dense matrices behind a pair. Used by the diagnostics and the baselines,
/// which need A^T; the solver never sees this type.
struct DensePair {
  Matrix A;
  Matrix B;

  DensePair(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
    if (A.rows() != A.cols() || B.rows() != B.cols()) raise(ErrorCode::NotSquare, "A and B must be square");
    if (A.rows() != B.rows()) raise(ErrorCode::DimensionMismatch, "A and B dimensions differ");
  }

  Index dim() const noexcept { return A.rows(); }
  Matrix symmetric_part() const { return 0.5 * (A + A.transpose()); }
  OperatorPair operators() const { return OperatorPair::dense(A, B); }
};

/// Operator pair plus, optionally, its dense backing.
struct Problem {
  OperatorPair ops;
  std::shared_ptr<const DensePair> dense;

  explicit Problem(OperatorPair p) : ops(std::move(p)) {}
  explicit Problem(DensePair d)
      : ops(d.operators()), dense(std::make_shared<const DensePair>(std::move(d))) {}

  const DensePair& dense_or_throw() const {
    if (!dense) raise(ErrorCode::DenseRequired, "operation needs dense A and B");
    return *dense;
  }
};

/// Point on the B-sphere, ⟨v, Bv⟩ = 1.
class UnitBVector {
 public:
  static constexpr double kTolerance = 1e-10;

  /// Returns w / ‖w‖_B.
  static UnitBVector normalized(const OperatorPair& pair, const Vector& w);

  /// Accepts v after checking |‖v‖_B − 1| ≤ 1e-10.
  static UnitBVector checked(const OperatorPair& pair, Vector v);

  /// Trusted constructor for values normalized in this library with a known Bv.
  static UnitBVector trusted(Vector v) { return UnitBVector(std::move(v)); }

  const Vector& vec() const noexcept { return v_; }
  Index size() const noexcept { return v_.size(); }
  operator const Vector&() const noexcept { return v_; }

 private:
  explicit UnitBVector(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

namespace detail {

inline double b_norm_from(double vBv, double euclid_sq) {
  if (vBv < -1e-14 * euclid_sq) raise(ErrorCode::NonPositiveDenominator, "⟨v,Bv⟩ < 0: B is not SPD");
  return vBv > 0.0 ? std::sqrt(vBv) : 0.0;
}

inline void check_dim(const OperatorPair& pair, Index n) {
  if (n != pair.dim()) raise(ErrorCode::DimensionMismatch, "vector size does not match the pair");
}

}  // namespace detail

/// ⟨v,Av⟩ / ⟨v,Bv⟩.
inline double rayleigh(const OperatorPair& pair, const Vector& v) {
  detail::check_dim(pair, v.size());
  if (v.squaredNorm() == 0.0) raise(ErrorCode::ZeroVector, "rayleigh quotient of the zero vector");
  const double den = v.dot(pair.applyB(v));
  if (!(den > 0.0)) raise(ErrorCode::NonPositiveDenominator, "⟨v,Bv⟩ ≤ 0");
  return v.dot(pair.applyA(v)) / den;
}

/// sqrt(⟨v,Bv⟩); tiny negative round-off is clamped to zero.
inline double b_norm(const OperatorPair& pair, const Vector& v) {
  detail::check_dim(pair, v.size());
  return detail::b_norm_from(v.dot(pair.applyB(v)), v.squaredNorm());
}

/// Euclidean orthogonal projection onto T_v = {x : ⟨x,Bv⟩ = 0}, given Bv.
inline Vector project_tangent_with(const Vector& bv, const Vector& y) {
  const double n = bv.norm();
  if (!(n >= 1e-300)) raise(ErrorCode::DegenerateNormal, "‖Bv‖ vanishes");
  const Vector w = bv / n;
  return y - y.dot(w) * w;
}

inline Vector project_tangent(const OperatorPair& pair, const UnitBVector& v, const Vector& y) {
  detail::check_dim(pair, y.size());
  return project_tangent_with(pair.applyB(v.vec()), y);
}

/// (v + x) / ‖v + x‖_B.
inline UnitBVector retract(const OperatorPair& pair, const UnitBVector& v, const Vector& x) {
  detail::check_dim(pair, x.size());
  const Vector w = v.vec() + x;
  const double n = b_norm(pair, w);
  if (!(n >= 1e-300)) raise(ErrorCode::ZeroVector, "v + x has vanishing B-norm");
  return UnitBVector::trusted(w / n);
}

/// b = ⟨x,Av⟩ + ⟨v,Ax⟩ = 2⟨x, A^H v⟩ from two forward products with A.
inline double b_coefficient(const OperatorPair& pair, const UnitBVector& v, const Vector& x) {
  detail::check_dim(pair, x.size());
  if (std::abs(x.norm() - 1.0) > 1e-8) raise(ErrorCode::InvalidArgument, "direction must have unit norm");
  const Vector bv = pair.applyB(v.vec());
  if (std::abs(x.dot(bv)) > 1e-8 * bv.norm()) raise(ErrorCode::InvalidArgument, "direction must be tangent at v");
  Block vx(pair.dim(), 2);
  vx.col(0) = v.vec();
  vx.col(1) = x;
  const Block avx = pair.applyA(vx);
  return x.dot(avx.col(0)) + v.vec().dot(avx.col(1));
}

/// 2(A^H v − ((Bv)ᵀA^H v / ‖Bv‖²) Bv). Needs A^T, hence dense only.
inline Vector riemannian_grad(const DensePair& dense, const Vector& v) {
  if (v.size() != dense.dim()) raise(ErrorCode::DimensionMismatch, "vector size does not match the pair");
  const Vector ahv = 0.5 * (dense.A * v + dense.A.transpose() * v);
  const Vector bv = dense.B * v;
  const double bb = bv.squaredNorm();
  if (!(bb >= 1e-300 * 1e-300)) raise(ErrorCode::DegenerateNormal, "‖Bv‖ vanishes");
  return 2.0 * (ahv - (bv.dot(ahv) / bb) * bv);
}

inline Vector riemannian_grad(const Problem& problem, const Vector& v) {
  return riemannian_grad(problem.dense_or_throw(), v);
}

inline UnitBVector UnitBVector::normalized(const OperatorPair& pair, const Vector& w) {
  const double n = b_norm(pair, w);
  if (!(n >= 1e-300)) raise(ErrorCode::ZeroVector, "cannot normalize a vector with vanishing B-norm");
  return UnitBVector(w / n);
}

inline UnitBVector UnitBVector::checked(const OperatorPair& pair, Vector v) {
  const double n = b_norm(pair, v);
  if (std::abs(n - 1.0) > kTolerance) raise(ErrorCode::InvalidArgument, "vector is not on the B-sphere");
  return UnitBVector(std::move(v));
}

}  // namespace rayq
