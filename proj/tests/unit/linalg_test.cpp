#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "test_util.hpp"
#include "invfilt/error.hpp"
#include "invfilt/linalg.hpp"

namespace invfilt {
namespace {

using testing::mat;
using testing::near;
using testing::throws_code;

TEST(Pinv, InverseOfCaseOneInputStack) {
  EXPECT_TRUE(near(pinv(mat(2, 2, {1, 0, -1, 1})), mat(2, 2, {1, 0, 1, 1}), 1e-12));
}

TEST(Pinv, IdentityIsItsOwnPseudoInverse) {
  EXPECT_TRUE(near(pinv(Matrix::Identity(3, 3)), Matrix::Identity(3, 3), 1e-14));
}

TEST(Pinv, RowVectorClosedForm) {
  // v^T / (v v^T)
  EXPECT_TRUE(near(pinv(mat(1, 2, {-1.35, 0.9})), mat(2, 1, {-0.5128, 0.3419}), 1e-3));
}

TEST(Pinv, PenroseIdentitiesOnRankDeficientMatrix) {
  testing::Rng rng(11);
  const Matrix m = testing::gaussian(rng, 5, 2) * testing::gaussian(rng, 2, 4);
  const Matrix x = pinv(m);
  const double s = m.norm();
  EXPECT_LE((m * x * m - m).norm(), 1e-10 * s);
  EXPECT_LE((x * m * x - x).norm(), 1e-10 * x.norm());
  EXPECT_LE((m * x - (m * x).transpose()).norm(), 1e-10);
  EXPECT_LE((x * m - (x * m).transpose()).norm(), 1e-10);
}

TEST(Pinv, RejectsNonFinite) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(pinv(m), Error);
}

TEST(OrthComplement, CaseOneObservabilityStack) {
  const Matrix h = orth_complement_rows(mat(2, 1, {-1, -0.5}));
  ASSERT_EQ(h.rows(), 1);
  // Same line as [-0.45, 0.90]: compare projectors.
  EXPECT_TRUE(near(projector_rowspace(h), projector_rowspace(mat(1, 2, {-0.45, 0.9})), 1e-12));
}

TEST(OrthComplement, AxisAligned) {
  const Matrix h = orth_complement_rows(mat(2, 1, {1, 0}));
  EXPECT_NEAR(std::abs(h(0, 1)), 1.0, 1e-14);
  EXPECT_NEAR(h(0, 0), 0.0, 1e-14);
}

TEST(OrthComplement, RandomTallMatrix) {
  testing::Rng rng(3);
  const Matrix m = testing::gaussian(rng, 6, 2);
  const Matrix h = orth_complement_rows(m);
  ASSERT_EQ(h.rows(), 4);
  EXPECT_LE((h * m).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(near(h * h.transpose(), Matrix::Identity(4, 4), 1e-10));
}

TEST(OrthComplement, Errors) {
  EXPECT_TRUE(throws_code([] { orth_complement_rows(Matrix::Identity(2, 2)); }, ErrorCode::InvalidDimension));
  EXPECT_TRUE(throws_code([] { orth_complement_rows(Matrix::Zero(3, 1)); }, ErrorCode::RankDeficient));
}

TEST(Projectors, CaseOneValues) {
  EXPECT_TRUE(near(projector_rowspace(mat(1, 2, {-1, 2})), mat(2, 2, {0.2, -0.4, -0.4, 0.8}), 1e-12));
  EXPECT_TRUE(near(projector_colspace(mat(2, 1, {-1, -0.5})), mat(2, 2, {0.8, 0.4, 0.4, 0.2}), 1e-12));
  EXPECT_TRUE(near(projector_rowspace(Matrix::Identity(2, 2)), Matrix::Identity(2, 2), 1e-14));
  EXPECT_TRUE(near(projector_colspace(mat(2, 1, {1, 0})), mat(2, 2, {1, 0, 0, 0}), 1e-14));
}

TEST(Projectors, OrthogonalDecomposition) {
  testing::Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const Matrix c = testing::gaussian(rng, 8, 3);
    const Matrix pc = projector_colspace(c);
    const Matrix ph = projector_rowspace(orth_complement_rows(c));
    EXPECT_TRUE(near(pc + ph, Matrix::Identity(8, 8), 1e-10));
    EXPECT_TRUE(near(pc, pc.transpose(), 1e-10));
    EXPECT_TRUE(near(pc * pc, pc, 1e-10));
    EXPECT_TRUE(near(ph * ph, ph, 1e-10));
  }
}

TEST(Eigenvalues, Examples) {
  const Spectrum a = eigenvalues(mat(1, 1, {1.5}));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_NEAR(a[0].real(), 1.5, 1e-14);
  EXPECT_LE(spectrum_distance(eigenvalues(mat(2, 2, {0.3, 0, 0, -0.7})), {0.3, -0.7}), 1e-14);
  // The printed closed loop is rounded to two decimals, so only roughly +-0.1.
  for (const Complex& z : eigenvalues(mat(2, 2, {3.15, -4.05, 2.45, -3.15}))) EXPECT_LE(std::abs(z), 0.15);
  EXPECT_THROW(eigenvalues(Matrix::Zero(2, 3)), Error);
}

TEST(Eigenvalues, TransposeInvariance) {
  testing::Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const Matrix m = testing::gaussian(rng, 5, 5);
    EXPECT_LE(spectrum_distance(eigenvalues(m), eigenvalues(m.transpose())), 1e-8);
  }
}

TEST(Rotation, RandomIsSpecialOrthogonalAndDeterministic) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 12345ULL}) {
    const Matrix r = random_rotation(16, seed);
    EXPECT_LE((r * r.transpose() - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-10);
    EXPECT_EQ(r, random_rotation(16, seed));
  }
  Eigen::JacobiSVD<Matrix> svd(random_rotation(16, 42));
  EXPECT_LE((svd.singularValues().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_NE(random_rotation(4, 1), random_rotation(4, 2));
  EXPECT_THROW(random_rotation(1, 0), Error);
}

TEST(Rotation, Plane) {
  const double h = std::sqrt(2.0) / 2.0;
  EXPECT_TRUE(near(plane_rotation(2, 0, 1, std::numbers::pi / 4), mat(2, 2, {h, -h, h, h}), 1e-15));
  EXPECT_TRUE(near(plane_rotation(3, 0, 2, 0.0), Matrix::Identity(3, 3), 0.0));
  const Matrix r = plane_rotation(2, 0, 1, 45 * std::numbers::pi / 180);
  EXPECT_TRUE(near(r * mat(2, 2, {0.8, 0.4, 0.4, 0.2}) * r.transpose(), mat(2, 2, {0.1, 0.3, 0.3, 0.9}), 1e-12));
  EXPECT_NEAR(plane_rotation(5, 1, 3, 0.7).determinant(), 1.0, 1e-14);
  EXPECT_THROW(plane_rotation(2, 0, 0, 1.0), Error);
  EXPECT_THROW(plane_rotation(2, 0, 2, 1.0), Error);
}

TEST(Rank, Examples) {
  EXPECT_EQ(numerical_rank(mat(2, 2, {1, 0, -1, 1})), 2);
  EXPECT_EQ(numerical_rank(Matrix::Zero(3, 3)), 0);
  // [C2M | D2M] of Case 1 is 2x3, so its rank is at most 2.
  EXPECT_EQ(numerical_rank(mat(2, 3, {-1, 1, 0, -0.5, -1, 1})), 2);
  EXPECT_EQ(numerical_rank(mat(2, 2, {1, 2, 2, 4})), 1);
}

TEST(NullSpace, AnnihilatesAndIsOrthonormal) {
  testing::Rng rng(2);
  const Matrix m = testing::gaussian(rng, 3, 2) * testing::gaussian(rng, 2, 5);
  const Matrix n = null_space(m);
  ASSERT_EQ(n.cols(), 3);
  EXPECT_LE((m * n).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(near(n.transpose() * n, Matrix::Identity(3, 3), 1e-10));
}

TEST(SpectrumDistance, BottleneckMatching) {
  EXPECT_DOUBLE_EQ(spectrum_distance({1.0, 2.0}, {2.0, 1.0}), 0.0);
  EXPECT_NEAR(spectrum_distance({0.0, 1.0}, {0.1, 1.3}), 0.3, 1e-15);
  EXPECT_TRUE(std::isinf(spectrum_distance({0.0}, {0.0, 1.0})));
  EXPECT_TRUE(is_conjugate_closed({Complex(0.1, 0.2), Complex(0.1, -0.2), 0.5}, 1e-12));
  EXPECT_FALSE(is_conjugate_closed({Complex(0.1, 0.2), 0.5}, 1e-12));
}

TEST(Tolerance, RejectsNonPositive) {
  ToleranceConfig t;
  EXPECT_NO_THROW(t.validate());
  t.eig_tol = 0.0;
  EXPECT_THROW(t.validate(), Error);
}

}  // namespace
}  // namespace invfilt
