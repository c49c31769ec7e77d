#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "pbrwp/linalg.hpp"

namespace pbrwp {

// Grid/bandwidth configuration for the 2-d KDE KL estimate. With bandwidth
// <= 0 the per-axis Silverman rule h = sigma_hat * N^{-1/6} applies; with an
// unset grid the particle bounding box expanded by 4 bandwidths is used.
struct KlEstimateConfig {
  std::optional<Eigen::Vector2d> grid_min;
  std::optional<Eigen::Vector2d> grid_max;
  int resolution = 200;
  double bandwidth = 0.0;

  void validate() const {
    if (resolution < 16)
      throw std::invalid_argument("KlEstimateConfig: resolution must be >= 16");
    if (grid_min && grid_max &&
        !((grid_max->array() > grid_min->array()).all()))
      throw std::invalid_argument("KlEstimateConfig: grid_max must exceed grid_min");
  }
};

using LogDensityFn = std::function<double(const VectorXd&)>;

// Forward KL from the particle KDE to the target, both normalized on the
// same grid by trapezoid quadrature:
//   KL ~= sum_cells p log(p / q) * cell_area  over cells with p > 1e-300.
// The target is convolved with the same Gaussian kernel as the KDE before
// normalizing, so the KDE smoothing bias cancels instead of dominating the
// estimate; an ensemble drawn from the target itself then scores near zero
// even when the bandwidth rule oversmooths (bimodal targets inflate the
// per-axis spread badly at small N).
inline double kl_estimate_kde(const MatrixXd& x,
                              const LogDensityFn& log_target_unnorm,
                              const KlEstimateConfig& cfg = {}) {
  if (x.rows() != 2)
    throw std::invalid_argument("kl_estimate_kde: requires d = 2 ensembles");
  cfg.validate();
  const auto n = x.cols();
  if (n < 1) throw std::invalid_argument("kl_estimate_kde: empty ensemble");

  // Canonical particle order makes the estimate exactly invariant under
  // reordering of the input columns.
  MatrixXd xs = x;
  {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    std::sort(order.begin(), order.end(), [&x](int a, int b) {
      if (x(0, a) != x(0, b)) return x(0, a) < x(0, b);
      return x(1, a) < x(1, b);
    });
    for (int j = 0; j < n; ++j)
      xs.col(j) = x.col(order[static_cast<std::size_t>(j)]);
  }

  Eigen::Vector2d h;
  for (int axis = 0; axis < 2; ++axis) {
    if (cfg.bandwidth > 0) {
      h(axis) = cfg.bandwidth;
    } else {
      double mean = xs.row(axis).mean();
      double var =
          (xs.row(axis).array() - mean).square().sum() / std::max<double>(1, n - 1);
      double sigma = std::sqrt(var);
      // Degenerate ensembles get a small fixed width instead of a delta.
      h(axis) = std::max(sigma, 1e-4) *
                std::pow(static_cast<double>(n), -1.0 / 6.0);
    }
  }

  Eigen::Vector2d lo, hi;
  if (cfg.grid_min && cfg.grid_max) {
    lo = *cfg.grid_min;
    hi = *cfg.grid_max;
  } else {
    for (int axis = 0; axis < 2; ++axis) {
      lo(axis) = xs.row(axis).minCoeff() - 4.0 * h(axis);
      hi(axis) = xs.row(axis).maxCoeff() + 4.0 * h(axis);
    }
  }

  const int res = cfg.resolution;
  const double dx = (hi(0) - lo(0)) / (res - 1);
  const double dy = (hi(1) - lo(1)) / (res - 1);
  const double cell_area = dx * dy;

  VectorXd gx(res), gy(res);
  for (int r = 0; r < res; ++r) {
    gx(r) = lo(0) + r * dx;
    gy(r) = lo(1) + r * dy;
  }

  // Separable Gaussian KDE: P = Ax * Ay^T with per-axis kernel tables.
  MatrixXd ax(res, n), ay(res, n);
  for (int r = 0; r < res; ++r) {
    ax.row(r) =
        (-(gx(r) - xs.row(0).array()).square() / (2.0 * h(0) * h(0))).exp();
    ay.row(r) =
        (-(gy(r) - xs.row(1).array()).square() / (2.0 * h(1) * h(1))).exp();
  }
  MatrixXd p(res, res);
  p.noalias() = ax * ay.transpose();
  p /= (2.0 * M_PI * h(0) * h(1) * static_cast<double>(n));

  VectorXd wx = VectorXd::Ones(res), wy = VectorXd::Ones(res);
  wx(0) = wx(res - 1) = 0.5;
  wy(0) = wy(res - 1) = 0.5;

  MatrixXd log_q(res, res);
  VectorXd point(2);
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      point << gx(i), gy(j);
      log_q(i, j) = log_target_unnorm(point);
    }
  }

  double mass_p = (p.array() * (wx * wy.transpose()).array()).sum() * cell_area;
  double max_lq = log_q.maxCoeff();
  double mass_q_scaled =
      ((log_q.array() - max_lq).exp() * (wx * wy.transpose()).array()).sum() *
      cell_area;
  double log_mass_q = max_lq + std::log(mass_q_scaled);
  if (log_mass_q < std::log(1e-12))
    throw std::runtime_error(
        "kl_estimate_kde: target quadrature mass below 1e-12; grid misconfigured");
  if (!(mass_p > 0))
    throw std::runtime_error("kl_estimate_kde: particle KDE mass vanished on grid");

  // Same-kernel smoothing of the target on the grid (separable), then grid
  // normalization. Scale factors common to all cells cancel.
  MatrixXd q_raw = (log_q.array() - max_lq).exp();
  MatrixXd kx(res, res), ky(res, res);
  for (int a = 0; a < res; ++a) {
    kx.row(a) = (-(gx(a) - gx.array()).square() / (2.0 * h(0) * h(0))).exp();
    ky.row(a) = (-(gy(a) - gy.array()).square() / (2.0 * h(1) * h(1))).exp();
  }
  MatrixXd q_smooth = kx * q_raw * ky.transpose();
  double mass_q =
      (q_smooth.array() * (wx * wy.transpose()).array()).sum() * cell_area;

  double kl = 0.0;
  const double q_floor = std::numeric_limits<double>::min();
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      double pn = p(i, j) / mass_p;
      if (pn <= 1e-300) continue;
      double log_qn = std::log(std::max(q_smooth(i, j), q_floor) / mass_q);
      kl += pn * (std::log(pn) - log_qn) * cell_area;
    }
  }
  if (kl < -1e-6)
    throw std::logic_error("kl_estimate_kde: estimate below -1e-6, numerical fault");
  return std::max(kl, 0.0);
}

struct EnsembleMoments {
  VectorXd mean;
  MatrixXd cov;
};

// Sample mean and unbiased sample covariance of the ensemble columns.
inline EnsembleMoments ensemble_moments(const MatrixXd& x) {
  const auto n = x.cols();
  if (n < 2)
    throw std::invalid_argument("ensemble_moments: covariance needs N >= 2");
  VectorXd mean = x.rowwise().mean();
  MatrixXd centered = x.colwise() - mean;
  MatrixXd cov = centered * centered.transpose() / static_cast<double>(n - 1);
  return EnsembleMoments{std::move(mean), std::move(cov)};
}

// Norm of the ensemble average per snapshot, Euclidean by default or in the
// M-scaled metric when a preconditioner is supplied.
inline std::vector<double> mean_norm_trajectory(
    const std::vector<MatrixXd>& snapshots,
    const std::optional<SpdMatrix>& m = std::nullopt) {
  std::vector<double> out;
  out.reserve(snapshots.size());
  for (const auto& snap : snapshots) {
    VectorXd mean = snap.rowwise().mean();
    out.push_back(m ? std::sqrt(std::max(0.0, m->inv_quad(mean)))
                    : mean.norm());
  }
  return out;
}

}  // namespace pbrwp
