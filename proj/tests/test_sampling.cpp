#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rayq/rng.hpp"
#include "rayq/sampling.hpp"
#include "test_util.hpp"

using namespace rayq;
using namespace rayq::testing;

// Known-answer vectors from the Random123 distribution.
TEST(Philox, KnownAnswers) {
  using A4 = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, Deterministic) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.normal(), b.normal());
  RngStream c(42, 8), d(43, 7);
  RngStream e(42, 7);
  EXPECT_NE(c(), e());
  RngStream f(42, 7);
  EXPECT_NE(d(), f());
}

TEST(RngStream, UniformAndNormalMoments) {
  RngStream rng(5, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    ASSERT_TRUE(std::isfinite(z));
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sn / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 5 * std::sqrt(2.0 / n));
}

TEST(RngStream, SubstreamsAreDistinctAndReproducible) {
  const RngStream root(9, 1);
  auto s1 = root.substream(0), s2 = root.substream(1), s1b = root.substream(0);
  EXPECT_NE(s1.stream_id(), s2.stream_id());
  EXPECT_EQ(s1(), s1b());
}

TEST(SampleInitial, OneDimensional) {
  Matrix b(1, 1);
  b << 4;
  Matrix a(1, 1);
  a << 1;
  const auto pair = OperatorPair::dense(a, b);
  RngStream rng(1, 0);
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(std::abs(sample_initial(pair, rng).vec()[0]), 0.5);
}

TEST(SampleInitial, DeterministicAndOnSphere) {
  RngStream g(3, 0);
  const auto pair = OperatorPair::dense(random_matrix(6, 6, g), random_spd(6, g));
  RngStream r1(77, 2), r2(77, 2);
  const auto v1 = sample_initial(pair, r1), v2 = sample_initial(pair, r2);
  EXPECT_EQ(v1.vec(), v2.vec());
  EXPECT_LE(std::abs(b_norm(pair, v1.vec()) - 1.0), 1e-10);
}

TEST(SampleInitial, SecondMomentIsotropic) {
  const Index d = 4;
  const auto pair = OperatorPair::dense(Matrix::Identity(d, d), Matrix::Identity(d, d));
  RngStream rng(13, 0);
  const int n = 100000;
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Vector v = sample_initial(pair, rng).vec();
    m += v * v.transpose();
  }
  m /= n;
  const Matrix diff = m - Matrix::Identity(d, d) / static_cast<double>(d);
  EXPECT_LE(diff.cwiseAbs().maxCoeff(), 5.0 / std::sqrt(n));
}

TEST(SampleTangent, TwoPointDistribution) {
  const auto pair = OperatorPair::dense(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const auto v = UnitBVector::checked(pair, vec({1, 0}));
  RngStream rng(17, 0);
  const int n = 10000;
  int up = 0;
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_tangent_direction(pair, v, rng).x;
    ASSERT_EQ(x[0], 0.0);
    ASSERT_EQ(std::abs(x[1]), 1.0);
    if (x[1] > 0) ++up;
  }
  EXPECT_NEAR(static_cast<double>(up) / n, 0.5, 0.02);
}

TEST(SampleTangent, UnitAndTangent) {
  RngStream g(19, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const Index d = 2 + trial % 10;
    const auto pair = OperatorPair::dense(random_matrix(d, d, g), random_spd(d, g));
    const auto v = UnitBVector::normalized(pair, random_vector(d, g));
    const Vector bv = pair.applyB(v.vec());
    for (int i = 0; i < 20; ++i) {
      const Vector x = sample_tangent_direction(pair, v, g).x;
      EXPECT_LE(std::abs(x.norm() - 1.0), 1e-12);
      EXPECT_LE(std::abs(x.dot(bv)), 1e-10 * bv.norm());
    }
  }
}

TEST(SampleTangent, DimensionTooSmall) {
  Matrix one(1, 1);
  one << 1;
  const auto pair = OperatorPair::dense(one, one);
  const auto v = UnitBVector::checked(pair, vec({1}));
  RngStream rng(1, 0);
  try {
    sample_tangent_direction(pair, v, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionTooSmall);
  }
}

TEST(SampleTangent, SecondMomentMatchesProjection) {
  const Index d = 10;
  RngStream g(23, 0);
  const auto pair = OperatorPair::dense(random_matrix(d, d, g), random_spd(d, g));
  const auto v = UnitBVector::normalized(pair, random_vector(d, g));
  const Vector w = pair.applyB(v.vec()).normalized();
  const Matrix p = Matrix::Identity(d, d) - w * w.transpose();
  const int n = 100000;
  Matrix m = Matrix::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Vector x = sample_tangent_direction(pair, v, g).x;
    m += x * x.transpose();
  }
  m /= n;
  EXPECT_LE((m - p / static_cast<double>(d - 1)).norm(), 5.0 * std::sqrt(static_cast<double>(d) / n));
}

TEST(SampleTangent, BlockColumnsIndependent) {
  RngStream g(29, 0);
  const Vector bv = random_vector(8, g);
  const Block x = sample_tangent_block(bv, 16, g);
  std::set<double> firsts;
  for (Index j = 0; j < x.cols(); ++j) {
    EXPECT_LE(std::abs(x.col(j).norm() - 1.0), 1e-12);
    EXPECT_LE(std::abs(x.col(j).dot(bv)), 1e-10 * bv.norm());
    firsts.insert(x(0, j));
  }
  EXPECT_EQ(firsts.size(), 16u);
}
