#pragma once

#include <utility>

#include "rayq/linalg.hpp"
#include "rayq/rng.hpp"

namespace rayq {

inline constexpr double kNullSampleThreshold = 1e-150;
inline constexpr int kMaxResamples = 100;

/// Unit Euclidean direction in T_v.
struct TangentDirection {
  Vector x;
};

inline void fill_normal(RngStream& rng, Eigen::Ref<Block> out) {
  for (Index j = 0; j < out.cols(); ++j)
    for (Index i = 0; i < out.rows(); ++i) out(i, j) = rng.normal();
}

inline Vector normal_vector(RngStream& rng, Index d) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

/// v⁰ = ṽ/‖ṽ‖_B with ṽ ~ N(0, I_d).
inline UnitBVector sample_initial(const OperatorPair& pair, RngStream& rng) {
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    const Vector w = normal_vector(rng, pair.dim());
    const double n = b_norm(pair, w);
    if (n >= kNullSampleThreshold) return UnitBVector::trusted(w / n);
  }
  raise(ErrorCode::DegenerateSample, "initial draw kept vanishing");
}

/// m directions x_i = P_v x̃_i / ‖P_v x̃_i‖ as the columns of a d×m block,
/// uniform on T_v ∩ S^{d−1}. `bv` is B·v.
inline Block sample_tangent_block(const Vector& bv, Index m, RngStream& rng) {
  const Index d = bv.size();
  if (d < 2) raise(ErrorCode::DimensionTooSmall, "tangent sampling needs d ≥ 2");
  const double nb = bv.norm();
  if (!(nb >= 1e-300)) raise(ErrorCode::DegenerateNormal, "‖Bv‖ vanishes");
  const Vector w = bv / nb;

  Block x(d, m);
  fill_normal(rng, x);
  x -= w * (w.transpose() * x);
  for (Index j = 0; j < m; ++j) {
    double n = x.col(j).norm();
    for (int attempt = 0; n < kNullSampleThreshold; ++attempt) {
      if (attempt >= kMaxResamples) raise(ErrorCode::DegenerateSample, "tangent projection kept vanishing");
      fill_normal(rng, x.col(j));
      x.col(j) -= w * w.dot(x.col(j));
      n = x.col(j).norm();
    }
    x.col(j) /= n;
  }
  return x;
}

inline TangentDirection sample_tangent_direction(const OperatorPair& pair, const UnitBVector& v, RngStream& rng) {
  if (pair.dim() < 2) raise(ErrorCode::DimensionTooSmall, "tangent sampling needs d ≥ 2");
  return {sample_tangent_block(pair.applyB(v.vec()), 1, rng).col(0)};
}

}  // namespace rayq
