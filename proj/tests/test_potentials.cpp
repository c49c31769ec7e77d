#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pbrwp/potentials.hpp"

using namespace pbrwp;
using Catch::Approx;

namespace {

// Finite-difference validation away from the radial singularity set.
void check_gradients(const Potential& p, double singular_radius_margin,
                     const std::function<double(const VectorXd&)>& radial,
                     unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 2.0);
  int checked = 0;
  while (checked < 100) {
    VectorXd x(p.dim());
    for (int i = 0; i < p.dim(); ++i) x(i) = normal(rng);
    if (radial(x) < singular_radius_margin) continue;
    VectorXd g = p.grad(x);
    if (g.norm() < 1e-8) continue;  // relative error undefined at criticals
    VectorXd fd =
        oracles::fd_gradient([&](const VectorXd& v) { return p.value(v); }, x);
    double rel = (fd - g).norm() / g.norm();
    CHECK(rel <= 1e-5);
    ++checked;
  }
}

}  // namespace

TEST_CASE("quadratic potential basics") {
  QuadraticPotential p(SpdMatrix::identity(2));
  VectorXd zero = VectorXd::Zero(2);
  CHECK(p.value(zero) == 0.0);
  CHECK(p.grad(zero).norm() == 0.0);

  VectorXd x(2);
  x << 2, 0;
  CHECK(p.grad(x).isApprox(x, 1e-15));

  SECTION("gradient is linear") {
    std::mt19937_64 spd_rng(3);
    QuadraticPotential q(SpdMatrix(oracles::random_spd(spd_rng, 3)));
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 10; ++rep) {
      VectorXd a(3), b(3);
      for (int i = 0; i < 3; ++i) {
        a(i) = normal(rng);
        b(i) = normal(rng);
      }
      CHECK((q.grad(a + b) - q.grad(a) - q.grad(b)).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }
}

TEST_CASE("two-moons fixed values and symmetry") {
  TwoMoonsPotential p;
  VectorXd x(2);

  x << 0, 0;
  // 2 * 9 - 2 * log(2 e^{-18}) = 54 - 2 log 2
  CHECK(p.value(x) == Approx(54.0 - 2.0 * std::log(2.0)).margin(1e-12));

  x << 3, 0;
  CHECK(p.grad(x).cwiseAbs().maxCoeff() < 1e-12);

  SECTION("reflection invariance in the first coordinate") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
      VectorXd v(2), w(2);
      v << normal(rng), normal(rng);
      w << -v(0), v(1);
      CHECK(p.value(v) == Approx(p.value(w)).margin(1e-12));
    }
  }

  SECTION("no underflow blowup for large first coordinate") {
    x << 20, 0;
    CHECK(std::isfinite(p.value(x)));
    CHECK(p.grad(x).allFinite());
    x << -40, 1;
    CHECK(std::isfinite(p.value(x)));
    CHECK(p.grad(x).allFinite());
  }

  SECTION("one-dimensional variant is well formed") {
    TwoMoonsPotential p1(1);
    VectorXd y(1);
    y << 3.0;
    CHECK(p1.value(y) == Approx(-2.0 * std::log(1.0 + std::exp(-72.0))).margin(1e-12));
  }
}

TEST_CASE("annulus fixed values") {
  ScaledAnnulusPotential p;
  VectorXd x(2);

  x << 3, 0;
  CHECK(p.value(x) == 0.0);
  CHECK(p.grad(x).cwiseAbs().maxCoeff() < 1e-14);

  x << 0, 1.5;  // ||diag(1,2) x|| = 3 on the ellipse
  CHECK(p.value(x) == Approx(0.0).margin(1e-12));

  x << 1, 1;
  double r = std::sqrt(1.0 + 4.0);
  CHECK(p.value(x) == Approx((r - 3.0) * (r - 3.0)).margin(1e-12));
}

TEST_CASE("radial subgradient selection at the origin") {
  TwoMoonsPotential moons;
  ScaledAnnulusPotential annulus;
  VectorXd origin = VectorXd::Zero(2);
  CHECK(moons.grad(origin).allFinite());
  CHECK(annulus.grad(origin).allFinite());
  CHECK(annulus.grad(origin).norm() == 0.0);
}

TEST_CASE("finite-difference gradient validation") {
  std::mt19937_64 spd_rng(6);
  QuadraticPotential quad(SpdMatrix(oracles::random_spd(spd_rng, 2, 0.5, 2.0)));
  TwoMoonsPotential moons;
  ScaledAnnulusPotential annulus;

  check_gradients(quad, 0.0, [](const VectorXd&) { return 1.0; }, 101);
  check_gradients(moons, 1e-3, [](const VectorXd& x) { return x.norm(); },
                  102);
  check_gradients(
      annulus, 1e-3,
      [](const VectorXd& x) {
        return (Eigen::Vector2d(1.0, 2.0).cwiseProduct(x)).norm();
      },
      103);
}
