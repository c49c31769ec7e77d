#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pbrwp/linalg.hpp"

using namespace pbrwp;
using Catch::Approx;

TEST_CASE("scaled_norm_sq hand cases") {
  SpdMatrix m = SpdMatrix::diagonal((Eigen::Vector2d() << 4.0, 1.0).finished());
  VectorXd x(2), y(2);

  x << 1, 2;
  CHECK(scaled_norm_sq(x, x, m) == 0.0);

  x << 2, 1;
  y << 0, 0;
  CHECK(scaled_norm_sq(x, y, m) == Approx(2.0).margin(1e-14));

  SpdMatrix eye = SpdMatrix::identity(2);
  x << -1.5, 2.5;
  y << 0.5, 1.0;
  CHECK(scaled_norm_sq(x, y, eye) ==
        Approx((x - y).squaredNorm()).margin(1e-12));
}

TEST_CASE("scaled_norm_sq is exactly symmetric in its arguments") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    int d = 1 + static_cast<int>(rng() % 8);
    SpdMatrix m(oracles::random_spd(rng, d));
    VectorXd x(d), y(d);
    for (int i = 0; i < d; ++i) {
      x(i) = normal(rng);
      y(i) = normal(rng);
    }
    CHECK(scaled_norm_sq(x, y, m) == scaled_norm_sq(y, x, m));
  }
}

TEST_CASE("scaled_norm_sq rejects dimension mismatch") {
  SpdMatrix m = SpdMatrix::identity(2);
  VectorXd x(3), y(3);
  x.setZero();
  y.setZero();
  CHECK_THROWS_AS(scaled_norm_sq(x, y, m), std::invalid_argument);
}

TEST_CASE("Cholesky round-trip on random SPD matrices") {
  std::mt19937_64 rng(7);
  for (int d : {2, 5, 16, 64}) {
    MatrixXd a = oracles::random_spd(rng, d, 0.1, 10.0);
    SpdMatrix m(a);
    MatrixXd l = m.chol_lower();
    double rel = (l * l.transpose() - m.entries()).norm() / m.entries().norm();
    CHECK(rel <= 1e-10);
  }
}

TEST_CASE("SpdMatrix construction rejects bad inputs") {
  MatrixXd not_pd(2, 2);
  not_pd << 1, 0, 0, -1;
  CHECK_THROWS_AS(SpdMatrix(not_pd), std::invalid_argument);

  MatrixXd asym(2, 2);
  asym << 1, 0.5, -0.5, 1;  // asymmetry far beyond 1e-8 relative
  CHECK_THROWS_AS(SpdMatrix(asym), std::invalid_argument);

  MatrixXd drift(2, 2);
  drift << 1, 0.5 + 1e-12, 0.5, 1;  // floating-point drift is symmetrized away
  SpdMatrix ok(drift);
  CHECK(ok.entries()(0, 1) == ok.entries()(1, 0));
}

TEST_CASE("log_det hand cases and eigen oracle") {
  CHECK(log_det(SpdMatrix::identity(3)) == Approx(0.0).margin(1e-15));
  SpdMatrix d41 =
      SpdMatrix::diagonal((Eigen::Vector2d() << 4.0, 1.0).finished());
  CHECK(log_det(d41) == Approx(std::log(4.0)).margin(1e-14));

  std::mt19937_64 rng(13);
  for (int d : {2, 5, 16}) {
    MatrixXd a = oracles::random_spd(rng, d, 0.2, 5.0);
    SpdMatrix m(a);
    CHECK(log_det(m) == Approx(oracles::eigen_log_det(a)).margin(1e-8));
    SpdMatrix m2(2.0 * a);
    CHECK(log_det(m2) - log_det(m) == Approx(d * std::log(2.0)).margin(1e-10));
  }
}

TEST_CASE("sample_gaussian moments and determinism") {
  const int draws = 100000;

  SECTION("standard normal covariance") {
    GaussianDist g(VectorXd::Zero(2), SpdMatrix::identity(2));
    auto rng = substream(42, 0);
    MatrixXd samples(2, draws);
    for (int i = 0; i < draws; ++i) samples.col(i) = sample_gaussian(g, rng);
    VectorXd mean = samples.rowwise().mean();
    MatrixXd centered = samples.colwise() - mean;
    MatrixXd cov = centered * centered.transpose() / double(draws - 1);
    CHECK((cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
  }

  SECTION("declared diagonal covariance") {
    GaussianDist g(
        VectorXd::Zero(2),
        SpdMatrix::diagonal((Eigen::Vector2d() << 4.0, 1.0).finished()));
    auto rng = substream(43, 0);
    double acc = 0.0;
    for (int i = 0; i < draws; ++i) {
      VectorXd s = sample_gaussian(g, rng);
      acc += s(0) * s(0);
    }
    double var = acc / draws;
    CHECK(std::abs(var - 4.0) / 4.0 < 0.05);
  }

  SECTION("seed reuse reproduces the draw sequence") {
    GaussianDist g(VectorXd::Ones(3), SpdMatrix::identity(3));
    auto rng_a = substream(99, 1, 2);
    auto rng_b = substream(99, 1, 2);
    for (int i = 0; i < 10; ++i) {
      VectorXd a = sample_gaussian(g, rng_a);
      VectorXd b = sample_gaussian(g, rng_b);
      CHECK(a == b);
    }
  }
}

TEST_CASE("PreconditionerSpec resolution") {
  CHECK(PreconditionerSpec::identity().resolve(3).entries() ==
        MatrixXd::Identity(3, 3));

  VectorXd diag(2);
  diag << 2.0, 0.5;
  SpdMatrix m = PreconditionerSpec::diagonal(diag).resolve(2);
  CHECK(m.is_diagonal());
  CHECK(m.entries()(0, 0) == 2.0);

  VectorXd bad(2);
  bad << 1.0, -1.0;
  CHECK_THROWS_AS(PreconditionerSpec::diagonal(bad), std::invalid_argument);

  CHECK_THROWS_AS(PreconditionerSpec::diagonal(diag).resolve(3),
                  std::invalid_argument);
}

TEST_CASE("GaussianDist validates mean length") {
  CHECK_THROWS_AS(GaussianDist(VectorXd::Zero(3), SpdMatrix::identity(2)),
                  std::invalid_argument);
}
