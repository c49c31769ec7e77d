#pragma once

// Test-only reference implementations: quadrature, scalar transcriptions of
// the update equations, and random SPD instance generators. Everything here
// is independent of the library's computational paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Composite trapezoid rule on [a, b] with n points.
inline double trapezoid(const std::function<double(double)>& f, double a,
                        double b, int n) {
  double h = (b - a) / (n - 1);
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n - 1; ++i) acc += f(a + i * h);
  return acc * h;
}

// log Z(y) for the 1-d quadratic potential V(z) = z^2 / (2 sigma2), scalar
// preconditioner m, derived by completing the square by hand.
inline double scalar_quadratic_log_z(double y, double sigma2, double m,
                                     double t, double beta) {
  double a = 0.5 * beta / sigma2 + 0.5 * beta / (t * m);
  double b = 0.5 * beta * y / (t * m);
  return 0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(a) + 0.5 * b * b / a -
         0.25 * beta * y * y / (t * m);
}

// One two-particle PBRWP step in d = 1 for the quadratic potential, written
// directly from the displayed update equations with plain doubles.
inline std::pair<double, double> scalar_pbrwp_two_particles(
    double x1, double x2, double sigma2, double m, double t, double beta,
    double eta) {
  double lz1 = scalar_quadratic_log_z(x1, sigma2, m, t, beta);
  double lz2 = scalar_quadratic_log_z(x2, sigma2, m, t, beta);
  double dist = (x1 - x2) * (x1 - x2) / m;
  double w11 = -lz1, w12 = -beta * dist / (4.0 * t) - lz2;
  double w21 = -beta * dist / (4.0 * t) - lz1, w22 = -lz2;

  auto softmax2 = [](double a, double b) {
    double mx = std::max(a, b);
    double ea = std::exp(a - mx), eb = std::exp(b - mx);
    return std::pair<double, double>{ea / (ea + eb), eb / (ea + eb)};
  };
  auto [s11, s12] = softmax2(w11, w12);
  auto [s21, s22] = softmax2(w21, w22);

  double g1 = x1 / sigma2, g2 = x2 / sigma2;
  double mix1 = s11 * x1 + s12 * x2;
  double mix2 = s21 * x1 + s22 * x2;
  double y1 = x1 - 0.5 * eta * m * g1 + 0.5 * eta / t * (x1 - mix1);
  double y2 = x2 - 0.5 * eta * m * g2 + 0.5 * eta / t * (x2 - mix2);
  return {y1, y2};
}

// One two-particle variable-preconditioner step in d = 1 for the quadratic
// potential, transcribed from the per-particle weight definition
//   w_ij = -beta (x_i - x_j)^2 / (4 T m_j) - log(m_j)/2 + beta V(x_j)/2.
inline std::pair<double, double> scalar_variable_pbrwp_two_particles(
    double x1, double x2, double m1, double m2, double sigma2, double t,
    double beta, double eta) {
  auto v = [&](double x) { return 0.5 * x * x / sigma2; };
  auto w = [&](double xi, double xj, double mj) {
    return -beta * (xi - xj) * (xi - xj) / (4.0 * t * mj) -
           0.5 * std::log(mj) + 0.5 * beta * v(xj);
  };
  auto softmax2 = [](double a, double b) {
    double mx = std::max(a, b);
    double ea = std::exp(a - mx), eb = std::exp(b - mx);
    return std::pair<double, double>{ea / (ea + eb), eb / (ea + eb)};
  };
  auto [s11, s12] = softmax2(w(x1, x1, m1), w(x1, x2, m2));
  auto [s21, s22] = softmax2(w(x2, x1, m1), w(x2, x2, m2));
  double y1 = x1 - 0.5 * eta * m1 * (x1 / sigma2) +
              0.5 * eta / t * (x1 - (s11 * x1 + s12 * x2));
  double y2 = x2 - 0.5 * eta * m2 * (x2 / sigma2) +
              0.5 * eta / t * (x2 - (s21 * x1 + s22 * x2));
  return {y1, y2};
}

// Variance recursion v' = (1 - a)^2 v + c, iterated to k steps.
inline double variance_recursion(double v0, double a, double c, int k) {
  double v = v0;
  for (int i = 0; i < k; ++i) v = (1.0 - a) * (1.0 - a) * v + c;
  return v;
}

// Random orthogonal basis via QR of a Gaussian matrix.
inline MatrixXd random_orthogonal(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal(rng);
  Eigen::HouseholderQR<MatrixXd> qr(a);
  return qr.householderQ();
}

inline MatrixXd spd_from_spectrum(const MatrixXd& q, const VectorXd& evals) {
  MatrixXd m = q * evals.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

inline VectorXd random_spectrum(std::mt19937_64& rng, int d, double lo,
                                double hi) {
  std::uniform_real_distribution<double> unif(lo, hi);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = unif(rng);
  return v;
}

inline MatrixXd random_spd(std::mt19937_64& rng, int d, double lo = 0.5,
                           double hi = 3.0) {
  return spd_from_spectrum(random_orthogonal(rng, d),
                           random_spectrum(rng, d, lo, hi));
}

// Central finite-difference gradient of f at x with step h.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x, double h = 1e-5) {
  VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    VectorXd hi = x, lo = x;
    hi(i) += h;
    lo(i) -= h;
    g(i) = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

inline double eigen_log_det(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().array().log().sum();
}

}  // namespace oracles
