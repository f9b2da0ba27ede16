#pragma once

#include <cmath>
#include <cstdint>

#include "rayq/linalg.hpp"
#include "rayq/rng.hpp"

namespace rayq::testing {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Matrix random_matrix(Index rows, Index cols, RngStream& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

/// Well-conditioned SPD matrix: GᵀG/d + shift·I.
inline Matrix random_spd(Index d, RngStream& rng, double shift = 0.5) {
  const Matrix g = random_matrix(d, d, rng);
  Matrix b = g.transpose() * g / static_cast<double>(d);
  b.diagonal().array() += shift;
  return 0.5 * (b + b.transpose());
}

inline Vector random_vector(Index d, RngStream& rng) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

inline double rel_err(double x, double ref) { return std::abs(x - ref) / std::max(1.0, std::abs(ref)); }

}  // namespace rayq::testing
