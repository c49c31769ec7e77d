#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pbrwp/metrics.hpp"
#include "pbrwp/rng.hpp"

using namespace pbrwp;
using Catch::Approx;

namespace {

MatrixXd iid_standard_gaussian(int n, unsigned seed) {
  auto rng = substream(seed, 0);
  std::normal_distribution<double> normal;
  MatrixXd x(2, n);
  for (int j = 0; j < n; ++j) {
    x(0, j) = normal(rng);
    x(1, j) = normal(rng);
  }
  return x;
}

double std_gaussian_log_density(const VectorXd& v) {
  return -0.5 * v.squaredNorm();
}

}  // namespace

TEST_CASE("kde kl estimate on an i.i.d. Gaussian sample stays under the ceiling") {
  MatrixXd x = iid_standard_gaussian(5000, 1001);
  double kl = kl_estimate_kde(x, std_gaussian_log_density);
  CHECK(kl >= 0.0);
  CHECK(kl <= 0.05);

  SECTION("a larger sample does not exceed the ceiling either") {
    MatrixXd big = iid_standard_gaussian(20000, 1002);
    CHECK(kl_estimate_kde(big, std_gaussian_log_density) <= 0.05);
  }
}

TEST_CASE("kde kl estimate flags a collapsed ensemble") {
  MatrixXd x = MatrixXd::Zero(2, 400);
  double kl = kl_estimate_kde(x, std_gaussian_log_density);
  CHECK(kl > 1.0);
}

TEST_CASE("kde kl estimate is exactly invariant under particle reordering") {
  MatrixXd x = iid_standard_gaussian(600, 1003);
  double base = kl_estimate_kde(x, std_gaussian_log_density);

  std::mt19937_64 rng(1004);
  MatrixXd shuffled = x;
  for (int j = static_cast<int>(x.cols()) - 1; j > 0; --j) {
    int k = static_cast<int>(rng() % static_cast<std::uint64_t>(j + 1));
    shuffled.col(j).swap(shuffled.col(k));
  }
  CHECK(kl_estimate_kde(shuffled, std_gaussian_log_density) == base);
}

TEST_CASE("kde kl estimate is stable under grid refinement") {
  MatrixXd x = iid_standard_gaussian(5000, 1005);
  KlEstimateConfig coarse;  // resolution 200
  KlEstimateConfig fine;
  fine.resolution = 400;
  double a = kl_estimate_kde(x, std_gaussian_log_density, coarse);
  double b = kl_estimate_kde(x, std_gaussian_log_density, fine);
  CHECK(std::abs(a - b) < 0.05 * std::max(a, b));
}

TEST_CASE("kde kl estimate rejects misconfigured grids") {
  MatrixXd x = iid_standard_gaussian(200, 1006);
  KlEstimateConfig cfg;
  cfg.grid_min = Eigen::Vector2d(500.0, 500.0);
  cfg.grid_max = Eigen::Vector2d(501.0, 501.0);
  CHECK_THROWS_AS(kl_estimate_kde(x, std_gaussian_log_density, cfg),
                  std::runtime_error);

  KlEstimateConfig bad;
  bad.resolution = 4;
  CHECK_THROWS_AS(kl_estimate_kde(x, std_gaussian_log_density, bad),
                  std::invalid_argument);
}

TEST_CASE("ensemble moments") {
  SECTION("two particles at +-e1") {
    MatrixXd x(3, 2);
    x.col(0) << 1, 0, 0;
    x.col(1) << -1, 0, 0;
    EnsembleMoments m = ensemble_moments(x);
    CHECK(m.mean.norm() == 0.0);
    CHECK(m.cov(0, 0) == Approx(2.0).margin(1e-15));
    CHECK(std::abs(m.cov(1, 1)) < 1e-15);
    CHECK(std::abs(m.cov(2, 2)) < 1e-15);
  }

  SECTION("identical particles have zero covariance") {
    MatrixXd x(2, 7);
    for (int j = 0; j < 7; ++j) x.col(j) << 3.0, -1.0;
    CHECK(ensemble_moments(x).cov.cwiseAbs().maxCoeff() < 1e-14);
  }

  SECTION("large i.i.d. sample is close to the population covariance") {
    MatrixXd x = iid_standard_gaussian(100000, 1007);
    EnsembleMoments m = ensemble_moments(x);
    CHECK((m.cov - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.05);
  }

  SECTION("covariance requires at least two particles") {
    MatrixXd x(2, 1);
    x << 1, 2;
    CHECK_THROWS_AS(ensemble_moments(x), std::invalid_argument);
  }
}

TEST_CASE("mean norm trajectory") {
  MatrixXd centered(2, 2);
  centered.col(0) << 1, 1;
  centered.col(1) << -1, -1;

  MatrixXd single(2, 1);
  single << 3, 4;  // norm 5

  MatrixXd pair(2, 2);
  pair.col(0) << 0, 0;
  pair.col(1) << 2, 0;

  auto traj = mean_norm_trajectory({centered, single, pair});
  CHECK(traj[0] == 0.0);
  CHECK(traj[1] == Approx(5.0).margin(1e-15));
  CHECK(traj[2] == Approx(1.0).margin(1e-15));

  SECTION("scaled variant") {
    SpdMatrix m =
        SpdMatrix::diagonal((Eigen::Vector2d() << 4.0, 1.0).finished());
    MatrixXd at2(2, 1);
    at2 << 2, 0;  // ||(2,0)||_M = sqrt(4/4) = 1
    auto scaled = mean_norm_trajectory({at2}, m);
    CHECK(scaled[0] == Approx(1.0).margin(1e-14));
  }
}
