#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "pbrwp/linalg.hpp"

namespace pbrwp {

// Closed-form Gaussian machinery for the quadratic potential
// V(x) = x^T Sigma^{-1} x / 2, i.e. target N(0, beta^{-1} Sigma).

struct PrwpoGaussian {
  VectorXd tilde_mu;
  SpdMatrix tilde_sigma;
};

// One proximal application to N(mu, Sigma_k):
//   tilde_mu    = (I + T M Sigma^{-1})^{-1} mu
//   tilde_Sigma = 2 beta^{-1} T B + B M^{-1} Sigma_k M^{-1} B,
// with B = (T Sigma^{-1} + M^{-1})^{-1}.
inline PrwpoGaussian prwpo_gaussian(const VectorXd& mu,
                                    const SpdMatrix& sigma_k,
                                    const SpdMatrix& sigma_target,
                                    const SpdMatrix& m, double t, double beta) {
  if (t <= 0 || beta <= 0)
    throw std::invalid_argument("prwpo_gaussian: T, beta must be positive");
  const int d = m.dim();
  const MatrixXd eye = MatrixXd::Identity(d, d);

  SpdMatrix b_inv(t * sigma_target.solve(eye) + m.solve(eye));
  MatrixXd b = b_inv.solve(eye);

  MatrixXd minv_sk_minv = m.solve(m.solve(sigma_k.entries()).transpose());
  MatrixXd tilde = (2.0 * t / beta) * b + b * minv_sk_minv * b;
  tilde = 0.5 * (tilde + tilde.transpose());

  MatrixXd m_sigma_inv = sigma_target.solve(m.entries()).transpose();
  VectorXd tilde_mu =
      Eigen::PartialPivLU<MatrixXd>(eye + t * m_sigma_inv).solve(mu);

  return PrwpoGaussian{std::move(tilde_mu), SpdMatrix(tilde)};
}

// Covariance recursion of the PBRWP iteration on zero-mean Gaussians:
//   Sigma_{k+1} = F Sigma_k F^T,
//   F = I - eta M Sigma^{-1} + eta beta^{-1} M tilde_Sigma_k^{-1}.
inline SpdMatrix pbrwp_cov_update(const SpdMatrix& sigma_k,
                                  const SpdMatrix& sigma_target,
                                  const SpdMatrix& m, double t, double beta,
                                  double eta) {
  const int d = m.dim();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  SpdMatrix tilde =
      prwpo_gaussian(VectorXd::Zero(d), sigma_k, sigma_target, m, t, beta)
          .tilde_sigma;
  MatrixXd m_sigma_inv = sigma_target.solve(m.entries()).transpose();
  MatrixXd m_tilde_inv = tilde.solve(m.entries()).transpose();
  MatrixXd f = eye - eta * m_sigma_inv + (eta / beta) * m_tilde_inv;
  MatrixXd next = f * sigma_k.entries() * f.transpose();
  next = 0.5 * (next + next.transpose());
  try {
    return SpdMatrix(next);
  } catch (const std::invalid_argument&) {
    throw std::domain_error(
        "pbrwp_cov_update: covariance lost positive-definiteness "
        "(step-size too large)");
  }
}

// Mean recursion paired with pbrwp_cov_update:
//   mu_{k+1} = F mu_k - eta beta^{-1} M tilde_Sigma_k^{-1} tilde_mu_k.
inline VectorXd pbrwp_mean_update(const VectorXd& mu_k,
                                  const SpdMatrix& sigma_k,
                                  const SpdMatrix& sigma_target,
                                  const SpdMatrix& m, double t, double beta,
                                  double eta) {
  PrwpoGaussian prox = prwpo_gaussian(mu_k, sigma_k, sigma_target, m, t, beta);
  MatrixXd m_tilde_inv = prox.tilde_sigma.solve(m.entries()).transpose();
  VectorXd f_mu = mu_k - eta * m.apply(sigma_target.solve(mu_k)) +
                  (eta / beta) * (m_tilde_inv * mu_k);
  return f_mu - (eta / beta) * (m_tilde_inv * prox.tilde_mu);
}

// True iff Sigma - T M is positive semidefinite (smallest pivot with 1e-12
// slack). This is the invertibility condition for the proximal.
inline bool max_t_check(const SpdMatrix& sigma_target, const SpdMatrix& m,
                        double t) {
  MatrixXd a = sigma_target.entries() - t * m.entries();
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Eigen::LDLT<MatrixXd> ldlt(0.5 * (a + a.transpose()));
  if (ldlt.info() != Eigen::Success) return false;
  return ldlt.vectorD().minCoeff() >= -1e-12 * scale;
}

// M-conjugated quantities Xi = sqrt(M)^{-1} Sigma sqrt(M)^{-1} and
// K_+- = I +- T sqrt(M) Sigma^{-1} sqrt(M).
struct ConjugatedCov {
  MatrixXd xi;
  MatrixXd k_plus;
  MatrixXd k_minus;
};

inline ConjugatedCov conjugated_cov(const SpdMatrix& sigma_target,
                                    const SpdMatrix& m, double t) {
  const int d = m.dim();
  SpdMatrix root(spd_sqrt(m.entries()));
  MatrixXd xi = root.solve(root.solve(sigma_target.entries()).transpose());
  xi = 0.5 * (xi + xi.transpose());
  MatrixXd s = root.entries() * sigma_target.solve(root.entries());
  s = 0.5 * (s + s.transpose());
  MatrixXd eye = MatrixXd::Identity(d, d);
  return ConjugatedCov{std::move(xi), eye + t * s, eye - t * s};
}

// Stationary covariance of the PBRWP iteration:
//   Sigma_inf = sqrt(M) K_- (beta^{-1} Xi) K_+ sqrt(M),
// whose proximal is exactly the target covariance beta^{-1} Sigma.
// Requires Sigma - T M positive definite.
inline SpdMatrix stationary_covariance(const SpdMatrix& sigma_target,
                                       const SpdMatrix& m, double t,
                                       double beta) {
  if (!max_t_check(sigma_target, m, t))
    throw std::domain_error(
        "stationary_covariance: requires Sigma - T M positive semidefinite");
  ConjugatedCov c = conjugated_cov(sigma_target, m, t);
  MatrixXd root = spd_sqrt(m.entries());
  MatrixXd tilde_xi_inf = c.xi / beta;
  MatrixXd out = root * c.k_minus * tilde_xi_inf * c.k_plus * root;
  out = 0.5 * (out + out.transpose());
  return SpdMatrix(out);
}

// KL(a || b) for Gaussians:
//   1/2 [log det Sb - log det Sa - d + tr(Sb^{-1} Sa)
//        + (mu_a - mu_b)^T Sb^{-1} (mu_a - mu_b)].
inline double kl_gaussians(const GaussianDist& a, const GaussianDist& b) {
  if (a.cov.dim() != b.cov.dim())
    throw std::invalid_argument("kl_gaussians: dimension mismatch");
  const int d = a.cov.dim();
  double v = 0.5 * (b.cov.log_det() - a.cov.log_det() - d +
                    b.cov.solve(a.cov.entries()).trace() +
                    b.cov.inv_quad(a.mean - b.mean));
  return v < 0.0 && v > -1e-9 ? 0.0 : v;
}

// Bures-Wasserstein distance on (mean, covariance) pairs; covariances may be
// singular (point masses included).
inline double w2_bures(const VectorXd& mu_a, const MatrixXd& cov_a,
                       const VectorXd& mu_b, const MatrixXd& cov_b) {
  if (mu_a.size() != mu_b.size() || cov_a.rows() != cov_b.rows())
    throw std::invalid_argument("w2_bures: dimension mismatch");
  MatrixXd half_b = spd_sqrt(cov_b);
  MatrixXd inner = half_b * cov_a * half_b;
  double cross = spd_sqrt(inner).trace();
  double v = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
             2.0 * cross;
  return std::sqrt(std::max(0.0, v));
}

inline double w2_gaussians(const GaussianDist& a, const GaussianDist& b) {
  return w2_bures(a.mean, a.cov.entries(), b.mean, b.cov.entries());
}

// Proximal contraction factor in Wasserstein-2 for quadratic targets:
//   zeta = (C^{-1}/2 + 1/(2T))^{-1} (1/(2T)) < 1.
inline double contraction_factor(double c_upper, double t) {
  if (c_upper <= 0 || t <= 0)
    throw std::invalid_argument("contraction_factor: C, T must be positive");
  return (1.0 / (2.0 * t)) / (0.5 / c_upper + 0.5 / t);
}

// Per-step multiplicative KL decay coefficient r, so that
// KL_{k+1} <= (1 - r) KL_k:
//   r = eta / (2 C [beta + 2 T (1 + T/C)^{-1} (1 + T/c)^2 / lambda]).
inline double kl_decay_rate_bound(double c_lower, double c_upper, double t,
                                  double beta, double lambda_min_xi,
                                  double eta) {
  if (c_lower <= 0 || c_upper <= 0 || t <= 0 || beta <= 0 || lambda_min_xi <= 0)
    throw std::invalid_argument("kl_decay_rate_bound: parameters must be positive");
  double bracket = beta + 2.0 * t / (1.0 + t / c_upper) *
                              (1.0 + t / c_lower) * (1.0 + t / c_lower) /
                              lambda_min_xi;
  return eta / (2.0 * c_upper * bracket);
}

// Admissible step-size
//   eta <= beta * min((max_i |lambda_i(tXi_k^{-1} - tXi_inf^{-1})|)^{-1} / 2,
//                     3 lambda_min(tXi_k) / 32).
inline double step_size_bound(const SpdMatrix& tilde_xi_k,
                              const SpdMatrix& tilde_xi_inf, double beta) {
  const int d = tilde_xi_k.dim();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  MatrixXd diff = tilde_xi_k.solve(eye) - tilde_xi_inf.solve(eye);
  diff = 0.5 * (diff + diff.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_diff(diff);
  double max_abs = es_diff.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es_k(tilde_xi_k.entries());
  double term2 = 3.0 * es_k.eigenvalues().minCoeff() / 32.0;
  if (max_abs < 1e-300) return beta * term2;
  return beta * std::min(0.5 / max_abs, term2);
}

// Both sides of the contraction-diffusion inequality for a descent direction
// Delta at ensemble X with minimizer x_hat:
//   <Delta, M^{-1}(X - Xhat)>_F
//     <= ||X - Xhat||_{2,M} (-mu/2 ||X - Xhat||_{2,M}
//        + (1 + sqrt(N)) / (2T) ||X - mean||_{2,M}),
// where ||A||_{2,M}^2 = tr(A^T M^{-1} A).
struct ContractionDiffusionGap {
  double lhs;
  double rhs;
};

inline ContractionDiffusionGap contraction_diffusion_gap(
    const MatrixXd& x, const VectorXd& x_hat, const SpdMatrix& m, double t,
    double mu_strong, const MatrixXd& delta_dir) {
  if (x.rows() != x_hat.size() || x.rows() != delta_dir.rows() ||
      x.cols() != delta_dir.cols())
    throw std::invalid_argument("contraction_diffusion_gap: shape mismatch");
  const double n = static_cast<double>(x.cols());
  MatrixXd diff = x.colwise() - x_hat;
  auto scaled_frob = [&m](const MatrixXd& a) {
    return std::sqrt(std::max(0.0, a.cwiseProduct(m.solve(a)).sum()));
  };
  double lhs = delta_dir.cwiseProduct(m.solve(diff)).sum();
  MatrixXd centered = x.colwise() - x.rowwise().mean().eval();
  double norm_diff = scaled_frob(diff);
  double rhs = norm_diff * (-0.5 * mu_strong * norm_diff +
                            (1.0 + std::sqrt(n)) / (2.0 * t) *
                                scaled_frob(centered));
  return ContractionDiffusionGap{lhs, rhs};
}

// Norm threshold above which the outermost particle contracts:
//   2 beta^{-1} T log(2 (N - 1) / T).
inline double norm_bound_threshold(int n, double t, double beta) {
  if (n < 2) throw std::invalid_argument("norm_bound_threshold: N must be >= 2");
  if (t <= 0 || beta <= 0)
    throw std::invalid_argument("norm_bound_threshold: T, beta must be positive");
  return 2.0 * t / beta * std::log(2.0 * (n - 1) / t);
}

// Trajectory bookkeeping for the Gaussian flow: the iterate and its proximal.
struct GaussianFlowState {
  VectorXd mu_k;
  SpdMatrix sigma_k;
  VectorXd tilde_mu;
  SpdMatrix tilde_sigma;

  static GaussianFlowState from(const VectorXd& mu, const SpdMatrix& sigma,
                                const SpdMatrix& sigma_target,
                                const SpdMatrix& m, double t, double beta) {
    PrwpoGaussian prox = prwpo_gaussian(mu, sigma, sigma_target, m, t, beta);
    return GaussianFlowState{mu, sigma, std::move(prox.tilde_mu),
                             std::move(prox.tilde_sigma)};
  }
};

}  // namespace pbrwp
