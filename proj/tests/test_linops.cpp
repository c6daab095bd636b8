#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dictsel/linops.hpp"
#include "dictsel/rng.hpp"

using namespace dictsel;

namespace {

Matrix random_matrix(GaussianRng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
  }
  return m;
}

Vector random_vector(GaussianRng& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("orthonormal basis of the identity is the identity") {
  const OrthonormalBasis b = orthonormal_basis(Matrix::Identity(3, 3), 1e-12);
  CHECK(b.rank() == 3);
  CHECK((b.vectors - Matrix::Identity(3, 3)).norm() == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(b.dropped_cols.empty());
}

TEST_CASE("exactly collinear column is dropped") {
  Matrix m = Matrix::Zero(3, 2);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  const OrthonormalBasis b = orthonormal_basis(m, 1e-12);
  CHECK(b.rank() == 1);
  REQUIRE(b.dropped_cols.size() == 1);
  CHECK(b.dropped_cols[0] == 1);
  CHECK(b.source_cols == std::vector<int>{0});
}

TEST_CASE("gram matrix of a random basis is the identity") {
  GaussianRng rng(42);
  const Matrix m = random_matrix(rng, 5, 3);
  const OrthonormalBasis b = orthonormal_basis(m);
  const Matrix gram = b.vectors.transpose() * b.vectors;
  CHECK((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("all-zero input is an empty-basis error") {
  CHECK_THROWS_AS(orthonormal_basis(Matrix::Zero(4, 2)), std::invalid_argument);
}

TEST_CASE("projection onto coordinate planes, empty and full bases") {
  Matrix plane = Matrix::Zero(3, 2);
  plane(0, 0) = 1.0;
  plane(1, 1) = 1.0;
  Vector y(3);
  y << 1.0, 2.0, 3.0;

  const Vector p = project(orthonormal_basis(plane), y);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(2.0));
  CHECK(p[2] == doctest::Approx(0.0));

  CHECK(project(OrthonormalBasis::empty(3), y).norm() == 0.0);

  GaussianRng rng(7);
  const Matrix full = random_matrix(rng, 3, 3);
  const Vector py = project(orthonormal_basis(full), y);
  CHECK((py - y).norm() < 1e-12 * y.norm());
}

TEST_CASE("project rejects dimension mismatch") {
  const OrthonormalBasis b = orthonormal_basis(Matrix::Identity(3, 3));
  CHECK_THROWS_AS(project(b, Vector::Zero(4)), std::invalid_argument);
}

TEST_CASE("least squares on the identity returns the target") {
  Vector y(3);
  y << 1.0, 2.0, 3.0;
  const CoefficientVector c = least_squares(Matrix::Identity(3, 3), y);
  CHECK((c.values - y).norm() < 1e-14);
  CHECK(c.support == std::vector<int>{0, 1, 2});
}

TEST_CASE("y = f + g against [f|g|h] recovers (1,1,0)") {
  GaussianRng rng(3);
  const Matrix d = random_matrix(rng, 20, 3);
  const Vector y = d.col(0) + d.col(1);
  const CoefficientVector c = least_squares(d, y);
  CHECK(c.values[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(c.values[1] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(c.values[2]) < 1e-10);
}

TEST_CASE("known coefficients survive an orthogonal residual") {
  // y = 2 c0 - 3 c2 + r with r orthogonalized against span(D): the solve
  // must return exactly (2, 0, -3, 0) up to 1e-8.
  GaussianRng rng(11);
  Matrix d(50, 4);
  for (int i = 0; i < 50; ++i) {
    const double t = -1.0 + 2.0 * i / 49.0;
    d(i, 0) = 1.0;
    d(i, 1) = t;
    d(i, 2) = t * t;
    d(i, 3) = t * t * t;
  }
  Vector r = random_vector(rng, 50);
  r -= project(orthonormal_basis(d), r);
  const Vector y = 2.0 * d.col(0) - 3.0 * d.col(2) + 0.1 * r;
  const CoefficientVector c = least_squares(d, y);
  Vector expected(4);
  expected << 2.0, 0.0, -3.0, 0.0;
  CHECK((c.values - expected).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("rank-deficient least squares is a hard error") {
  Matrix d(4, 2);
  d.col(0) = Vector::Ones(4);
  d.col(1) = 2.0 * Vector::Ones(4);
  CHECK_THROWS_AS(least_squares(d, Vector::Ones(4)), RankDeficiencyError);
}

TEST_CASE("normal-equation residual of the solve is tiny") {
  GaussianRng rng(5);
  const Matrix d = random_matrix(rng, 30, 6);
  const Vector y = random_vector(rng, 30);
  const CoefficientVector c = least_squares(d, y);
  const double res = (d.transpose() * (y - d * c.values)).norm();
  CHECK(res <= 1e-8 * d.norm() * y.norm());
}

TEST_CASE("restricted least squares: full set, empty set, orthonormal pick") {
  GaussianRng rng(9);
  const Matrix d = random_matrix(rng, 12, 3);
  const Vector y = random_vector(rng, 12);

  const CoefficientVector full = restricted_least_squares(d, {0, 1, 2}, y);
  const CoefficientVector plain = least_squares(d, y);
  CHECK((full.values - plain.values).norm() < 1e-12);

  const CoefficientVector empty = restricted_least_squares(d, {}, y);
  CHECK(empty.values.norm() == 0.0);
  CHECK(empty.support.empty());

  const OrthonormalBasis onb = orthonormal_basis(random_matrix(rng, 10, 3));
  const Vector target = 3.0 * onb.vectors.col(0) + 4.0 * onb.vectors.col(1);
  const CoefficientVector pick = restricted_least_squares(onb.vectors, {1}, target);
  CHECK(pick.values[0] == 0.0);
  CHECK(pick.values[1] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(pick.values[2] == 0.0);
  CHECK(pick.support == std::vector<int>{1});
}

TEST_CASE("projection idempotence and Pythagoras over random subspaces") {
  GaussianRng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 5 + static_cast<int>(rng.raw() % 40);
    const int n = 1 + static_cast<int>(rng.raw() % std::min(m, 20));
    const OrthonormalBasis b = orthonormal_basis(random_matrix(rng, m, n));
    const Vector y = random_vector(rng, m);
    const Vector py = project(b, y);
    CHECK((project(b, py) - py).norm() <= 1e-10 * y.norm());
    const double lhs = y.squaredNorm();
    const double rhs = py.squaredNorm() + (y - py).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * lhs);
  }
}

TEST_CASE("coefficient-residual identity for every column") {
  // |[D^+ y]_i| * ||d_i - P_{D\i} d_i|| == ||(P_D - P_{D\i}) y|| per column.
  GaussianRng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.raw() % 9);
    const int m = n + 1 + static_cast<int>(rng.raw() % (50 - n));
    const Matrix d = random_matrix(rng, m, n);
    const Vector y = random_vector(rng, m);
    const Vector coef = least_squares(d, y).values;
    const OrthonormalBasis full = orthonormal_basis(d);
    const Vector pdy = project(full, y);
    for (int i = 0; i < n; ++i) {
      Matrix rest(m, n - 1);
      int k = 0;
      for (int j = 0; j < n; ++j) {
        if (j != i) rest.col(k++) = d.col(j);
      }
      const OrthonormalBasis rb = orthonormal_basis(rest);
      const double omega = (d.col(i) - project(rb, d.col(i))).norm();
      const double lhs = std::abs(coef[i]) * omega;
      const double rhs = (pdy - project(rb, y)).norm();
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, rhs));
    }
  }
}

TEST_CASE("residual splits into reduced-model and projection-gap parts") {
  // ||y - P_{D\i} y||^2 - ||P_{D\i} y - P_D y||^2 == ||y - P_D y||^2,
  // exercised with y outside span(D).
  GaussianRng rng(123);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.raw() % 8);
    const int m = n + 2 + static_cast<int>(rng.raw() % 30);
    const Matrix d = random_matrix(rng, m, n);
    const Vector y = random_vector(rng, m);
    const OrthonormalBasis full = orthonormal_basis(d);
    const Vector pdy = project(full, y);
    const int i = static_cast<int>(rng.raw() % n);
    Matrix rest(m, n - 1);
    int k = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i) rest.col(k++) = d.col(j);
    }
    const Vector psub = project(orthonormal_basis(rest), y);
    const double lhs = (y - psub).squaredNorm() - (psub - pdy).squaredNorm();
    const double rhs = (y - pdy).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, y.squaredNorm()));
  }
}
