#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "pbrwp/linalg.hpp"
#include "pbrwp/parallel.hpp"
#include "pbrwp/potentials.hpp"
#include "pbrwp/rng.hpp"

namespace pbrwp {

// Row-major storage so that per-row softmax passes are contiguous.
using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// How the normalizing constants Z(y) are estimated. Estimates are carried in
// log space throughout; Z itself underflows once d reaches a few tens.
struct ZMethod {
  struct MonteCarlo {
    int n_samples = 1000;
  };
  struct Laplace {};
  struct ExactQuadratic {};
  std::variant<MonteCarlo, Laplace, ExactQuadratic> variant = MonteCarlo{};

  static ZMethod monte_carlo(int n) {
    if (n < 1) throw std::invalid_argument("ZMethod: n_samples must be >= 1");
    return {MonteCarlo{n}};
  }
  static ZMethod laplace() { return {Laplace{}}; }
  static ZMethod exact_quadratic() { return {ExactQuadratic{}}; }
};

// Importance-sampling estimate of
//   Z(y) = int exp(-beta/2 (V(z) + ||z - y||_M^2 / (2T))) dz
// with proposal z ~ N(y, 2 T beta^{-1} M), evaluated in log space:
//   log Z ~= (d/2) log(4 pi T / beta) + log det(M)/2
//            + logsumexp_i(-beta V(z_i)/2) - log n.
inline double log_z_monte_carlo(const VectorXd& y, const Potential& p,
                                const SpdMatrix& m, double t, double beta,
                                int n, std::mt19937_64& rng) {
  if (t <= 0 || beta <= 0)
    throw std::invalid_argument("log_z_monte_carlo: T, beta must be positive");
  if (n < 1) throw std::invalid_argument("log_z_monte_carlo: n must be >= 1");
  const int d = m.dim();
  const MatrixXd l = m.chol_lower();
  const double noise_scale = std::sqrt(2.0 * t / beta);
  double max_e = -std::numeric_limits<double>::infinity();
  std::vector<double> exponents(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    VectorXd z = y + noise_scale * (l * standard_normal_vector(rng, d));
    double e = -0.5 * beta * p.value(z);
    exponents[static_cast<std::size_t>(i)] = e;
    max_e = std::max(max_e, e);
  }
  double acc = 0.0;
  for (double e : exponents) acc += std::exp(e - max_e);
  return 0.5 * d * std::log(4.0 * M_PI * t / beta) + 0.5 * m.log_det() +
         max_e + std::log(acc) - std::log(static_cast<double>(n));
}

// Small-T asymptotic log Z(y) ~= -beta V(y)/2 + log det(M)/2. The remaining
// constant depends only on (beta, T) and cancels in the row softmax, so it is
// dropped; the log-det term is kept because it varies when M does.
inline double log_z_laplace(const VectorXd& y, const Potential& p,
                            const SpdMatrix& m, double beta) {
  return -0.5 * beta * p.value(y) + 0.5 * m.log_det();
}

// Closed-form log Z(y) for the quadratic potential V(z) = z^T Sigma^{-1} z/2.
// Completing the square with A = beta Sigma^{-1}/2 + beta M^{-1}/(2T) and
// b = beta M^{-1} y / (2T) gives
//   log Z(y) = (d/2) log(2 pi) - log det(A)/2 + b^T A^{-1} b / 2
//              - (beta/(4T)) y^T M^{-1} y.
class QuadraticZ {
 public:
  QuadraticZ(const SpdMatrix& sigma, const SpdMatrix& m, double t, double beta)
      : m_(m), t_(t), beta_(beta), a_(make_a(sigma, m, t, beta)) {}

  double log_z(const VectorXd& y) const {
    const int d = m_.dim();
    VectorXd minv_y = m_.solve(y);
    VectorXd b = (0.5 * beta_ / t_) * minv_y;
    double quad = b.dot(a_.solve(b));
    return 0.5 * d * std::log(2.0 * M_PI) - 0.5 * a_.log_det() + 0.5 * quad -
           (0.25 * beta_ / t_) * y.dot(minv_y);
  }

 private:
  static SpdMatrix make_a(const SpdMatrix& sigma, const SpdMatrix& m, double t,
                          double beta) {
    if (sigma.dim() != m.dim())
      throw std::invalid_argument("QuadraticZ: dimension mismatch");
    if (t <= 0 || beta <= 0)
      throw std::invalid_argument("QuadraticZ: T, beta must be positive");
    const MatrixXd eye = MatrixXd::Identity(m.dim(), m.dim());
    return SpdMatrix(0.5 * beta * sigma.solve(eye) +
                     (0.5 * beta / t) * m.solve(eye));
  }

  SpdMatrix m_;
  double t_;
  double beta_;
  SpdMatrix a_;
};

inline double log_z_exact_quadratic(const VectorXd& y, const SpdMatrix& sigma,
                                    const SpdMatrix& m, double t, double beta) {
  return QuadraticZ(sigma, m, t, beta).log_z(y);
}

// Per-particle log Z for a whole ensemble (columns of x are particles).
// Monte Carlo draws come from substreams keyed by (seed, iteration, particle)
// so the result does not depend on scheduling.
inline VectorXd log_z_ensemble(const MatrixXd& x, const Potential& p,
                               const SpdMatrix& m, double t, double beta,
                               const ZMethod& z, std::uint64_t seed,
                               std::int64_t iteration) {
  const auto n = x.cols();
  VectorXd out(n);
  if (const auto* mc = std::get_if<ZMethod::MonteCarlo>(&z.variant)) {
    const int samples = mc->n_samples;
    parallel_for(n, [&](std::ptrdiff_t j) {
      auto rng = substream(seed, static_cast<std::uint64_t>(iteration),
                           static_cast<std::uint64_t>(j), 0xCAFEULL);
      out(j) = log_z_monte_carlo(x.col(j), p, m, t, beta, samples, rng);
    });
  } else if (std::holds_alternative<ZMethod::Laplace>(z.variant)) {
    const double half_log_det = 0.5 * m.log_det();
    parallel_for(n, [&](std::ptrdiff_t j) {
      out(j) = -0.5 * beta * p.value(x.col(j)) + half_log_det;
    });
  } else {
    const auto* quad = dynamic_cast<const QuadraticPotential*>(&p);
    if (!quad)
      throw std::invalid_argument(
          "log_z_ensemble: exact_quadratic Z requires a quadratic potential");
    QuadraticZ qz(quad->sigma(), m, t, beta);
    parallel_for(n, [&](std::ptrdiff_t j) { out(j) = qz.log_z(x.col(j)); });
  }
  return out;
}

// Pairwise squared scaled distances ||x_i - x_j||_M^2 through the whitening
// transform Y = L^{-1} X and a Gram product. The diagonal is exact zero and
// round-off negatives are clamped.
inline RowMatrixXd scaled_sq_distances(const MatrixXd& x, const SpdMatrix& m) {
  MatrixXd y =
      m.is_diagonal()
          ? MatrixXd(m.entries().diagonal().cwiseSqrt().cwiseInverse().asDiagonal() * x)
          : m.solve_lower(x);
  VectorXd sq = y.colwise().squaredNorm();
  RowMatrixXd d2(x.cols(), x.cols());
  d2.noalias() = -2.0 * y.transpose() * y;
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);
  d2.diagonal().setZero();
  return d2;
}

// N x N log-weights W_{ij} = -beta ||x_i - x_j||_M^2 / (4T) - log Z_j.
struct InteractionMatrix {
  RowMatrixXd w;
  int n() const { return static_cast<int>(w.rows()); }
};

inline InteractionMatrix interaction_matrix(const MatrixXd& x,
                                            const SpdMatrix& m, double t,
                                            double beta,
                                            const VectorXd& log_z) {
  if (log_z.size() != x.cols())
    throw std::invalid_argument(
        "interaction_matrix: log_z length must equal particle count");
  if (t <= 0) throw std::invalid_argument("interaction_matrix: T must be positive");
  RowMatrixXd w = scaled_sq_distances(x, m);
  w *= -0.25 * beta / t;
  w.rowwise() -= log_z.transpose();
  return InteractionMatrix{std::move(w)};
}

// Row-wise softmax with max subtraction; each row sums to 1. Rows are
// independent, so they may be processed concurrently; within a row the
// reduction order is fixed.
inline void row_softmax_inplace(RowMatrixXd& w) {
  parallel_for(w.rows(), [&](std::ptrdiff_t i) {
    double m = w.row(i).maxCoeff();
    w.row(i) = (w.row(i).array() - m).exp();
    w.row(i) /= w.row(i).sum();
  });
}

inline RowMatrixXd row_softmax(const InteractionMatrix& w) {
  RowMatrixXd s = w.w;
  row_softmax_inplace(s);
  return s;
}

// Row-stochastic softmax of the interaction matrix, assembled row by row so
// no intermediate N x N matrix is swept more than once; large ensembles are
// memory-bandwidth bound otherwise. Numerically matches
// row_softmax(interaction_matrix(...)) to working precision. The `into`
// variant reuses the caller's buffer: a fresh N x N allocation costs a full
// page-fault sweep per step.
inline void interaction_softmax_into(const MatrixXd& x, const SpdMatrix& m,
                                     double t, double beta,
                                     const VectorXd& log_z, RowMatrixXd& s) {
  if (log_z.size() != x.cols())
    throw std::invalid_argument(
        "interaction_softmax: log_z length must equal particle count");
  if (t <= 0) throw std::invalid_argument("interaction_softmax: T must be positive");
  MatrixXd y =
      m.is_diagonal()
          ? MatrixXd(m.entries().diagonal().cwiseSqrt().cwiseInverse().asDiagonal() * x)
          : m.solve_lower(x);
  VectorXd sq = y.colwise().squaredNorm();
  const double c = 0.25 * beta / t;
  const auto n = x.cols();
  const int d = static_cast<int>(x.rows());
  MatrixXd yt = y.transpose();  // coordinate slices contiguous
  s.resize(n, n);
  parallel_for(n, [&](std::ptrdiff_t i) {
    auto row = s.row(i);
    // w_j = -c (sq_i + sq_j - 2 y_i . y_j) - log_z_j, built as axpy passes
    // over the contiguous coordinate slices instead of a k=d gemm.
    row = ((-c) * (sq.transpose().array() + sq(i)) -
           log_z.transpose().array())
              .matrix();
    for (int k = 0; k < d; ++k)
      row.array() += (2.0 * c * yt(i, k)) * yt.col(k).transpose().array();
    row(i) = -log_z(i);  // zero self-distance exactly
    double mx = row.maxCoeff();
    row = (row.array() - mx).exp();
    row /= row.sum();
  });
}

inline RowMatrixXd interaction_softmax(const MatrixXd& x, const SpdMatrix& m,
                                       double t, double beta,
                                       const VectorXd& log_z) {
  RowMatrixXd s;
  interaction_softmax_into(x, m, t, beta, log_z, s);
  return s;
}

// Pointwise kernel value
//   K(x, y) = exp(-beta/2 (V(x) + ||x - y||_M^2/(2T)) - log Z(y)).
inline double kernel_density(const VectorXd& x, const VectorXd& y,
                             const Potential& p, const SpdMatrix& m, double t,
                             double beta, double log_z_y) {
  double e = -0.5 * beta * (p.value(x) + scaled_norm_sq(x, y, m) / (2.0 * t));
  return std::exp(e - log_z_y);
}

}  // namespace pbrwp
