#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "rayq/complexify.hpp"
#include "rayq/oracle.hpp"
#include "test_util.hpp"

using namespace rayq;
using namespace rayq::testing;
using namespace std::complex_literals;

namespace {

ComplexMatrix random_complex(Index d, RngStream& g) {
  ComplexMatrix m(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = {g.normal(), g.normal()};
  return m;
}

ComplexVector random_cvec(Index d, RngStream& g) {
  ComplexVector v(d);
  for (Index i = 0; i < d; ++i) v[i] = {g.normal(), g.normal()};
  return v;
}

ComplexMatrix random_hpd(Index d, RngStream& g) {
  const ComplexMatrix m = random_complex(d, g);
  ComplexMatrix b = m.adjoint() * m / static_cast<double>(d);
  b.diagonal().array() += 0.5;
  return 0.5 * (b + b.adjoint());
}

}  // namespace

TEST(Realify, VectorExamples) {
  ComplexVector v(2);
  v << 1.0, 0.0;
  EXPECT_EQ(realify_vector(v), vec({1, 0, 0, 0}));
  v << 1i, 0.0;
  EXPECT_EQ(realify_vector(v), vec({0, 0, 1, 0}));
  RngStream g(1, 0);
  const ComplexVector w = random_cvec(5, g);
  EXPECT_EQ(derealify_vector(realify_vector(w)), w);
  EXPECT_NEAR(realify_vector(w).norm(), w.norm(), 1e-14);
}

TEST(Realify, MatrixExamples) {
  EXPECT_EQ(realify_matrix(ComplexMatrix::Identity(3, 3)), Matrix(Matrix::Identity(6, 6)));
  const ComplexMatrix ii = 1i * ComplexMatrix::Identity(3, 3);
  ComplexVector e1 = ComplexVector::Zero(3);
  e1[0] = 1.0;
  EXPECT_EQ(realify_matrix(ii) * realify_vector(e1), realify_vector(ii * e1));
  EXPECT_THROW(realify_matrix(ComplexMatrix::Zero(2, 3)), Error);
}

TEST(Realify, InnerProductAndHomomorphism) {
  RngStream g(2, 0);
  for (int p = 0; p < 100; ++p) {
    const Index d = 1 + p % 8;
    const ComplexMatrix m1 = random_complex(d, g), m2 = random_complex(d, g);
    const ComplexVector x = random_cvec(d, g), v = random_cvec(d, g);
    const Matrix r1 = realify_matrix(m1), r2 = realify_matrix(m2);
    const double lhs = realify_vector(x).dot(r1 * realify_vector(v));
    const double rhs = x.dot(m1 * v).real();
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(rhs)));
    EXPECT_LE((realify_matrix(m1 * m2) - r1 * r2).norm(), 1e-12 * (r1.norm() * r2.norm()));
    EXPECT_LE((realify_matrix(m1 + m2) - (r1 + r2)).norm(), 1e-15 * (r1.norm() + r2.norm()));
    EXPECT_LE((r1 * realify_vector(v) - realify_vector(m1 * v)).norm(), 1e-12 * r1.norm() * v.norm());
  }
}

TEST(Realify, HermitianPdBecomesSpd) {
  RngStream g(3, 0);
  const ComplexMatrix b = random_hpd(4, g);
  const Matrix rb = realify_matrix(b);
  EXPECT_LE((rb - rb.transpose()).norm(), 1e-14);
  EXPECT_NO_THROW(OperatorPair::dense(Matrix::Identity(8, 8), rb));
}

TEST(Realify, SpectrumDoubles) {
  RngStream g(4, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 2 + trial % 7;
    const ComplexMatrix a = random_complex(d, g), b = random_hpd(d, g);
    const auto real_ref = reference_solve(realify_matrix(a), realify_matrix(b));
    // Complex generalized spectrum from the Hermitian reduction.
    const ComplexMatrix bh = 0.5 * (b + b.adjoint());
    Eigen::LLT<ComplexMatrix> llt(bh);
    const auto l = llt.matrixL();
    const ComplexMatrix ah = 0.5 * (a + a.adjoint());
    const ComplexMatrix left = l.solve(ah);
    ComplexMatrix c = l.solve(ComplexMatrix(left.adjoint()));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
    const Vector lam = es.eigenvalues().reverse();
    ASSERT_EQ(real_ref.eigenvalues.size(), 2 * d);
    for (Index i = 0; i < d; ++i) {
      EXPECT_NEAR(real_ref.eigenvalues[2 * i], lam[i], 1e-10 * std::max(1.0, std::abs(lam[i])));
      EXPECT_NEAR(real_ref.eigenvalues[2 * i + 1], lam[i], 1e-10 * std::max(1.0, std::abs(lam[i])));
    }
    EXPECT_GE(real_ref.maxSpaceDim, 2);
    EXPECT_NEAR(real_ref.maxValue, complex_reference_max(a, b), 1e-10 * std::max(1.0, std::abs(lam[0])));
  }
}

TEST(SolveComplex, RealDiagonal) {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 1.0;
  SolverConfig cfg;
  cfg.maxIters = 500;
  RngStream rng(5, 1);
  const auto res = solve_complex(a, ComplexMatrix::Identity(2, 2), cfg, rng);
  EXPECT_NEAR(res.value, 2.0, 1e-10);
  EXPECT_NEAR(res.value, complex_rayleigh(a, ComplexMatrix::Identity(2, 2), res.v), 1e-10);
}

TEST(SolveComplex, HermitianOffDiagonal) {
  ComplexMatrix a(2, 2);
  a << 0.0, 1i, -1i, 0.0;
  SolverConfig cfg;
  cfg.maxIters = 2000;
  RngStream rng(6, 1);
  const auto res = solve_complex(a, ComplexMatrix::Identity(2, 2), cfg, rng);
  EXPECT_NEAR(res.value, 1.0, 1e-6);
  EXPECT_NEAR(complex_reference_max(a, ComplexMatrix::Identity(2, 2)), 1.0, 1e-12);
}

TEST(SolveComplex, RejectsNonHermitianB) {
  ComplexMatrix b(2, 2);
  b << 1.0, 1i, 1i, 1.0;
  SolverConfig cfg;
  RngStream rng(7, 1);
  try {
    solve_complex(ComplexMatrix::Identity(2, 2), b, cfg, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotHermitianPD);
  }
}

TEST(ComplexIo, RoundTrip) {
  RngStream g(8, 0);
  const ComplexMatrix m = random_complex(3, g);
  std::stringstream ss;
  write_complex_text(ss, m);
  EXPECT_EQ(ss.str().substr(0, 7), "zd 3 3\n");
  EXPECT_EQ(read_complex_text(ss), m);
  std::stringstream bad("zd 1 1\n1.0\n");
  EXPECT_THROW(read_complex_text(bad), Error);
}
