#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "pbrwp/rng.hpp"

namespace pbrwp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Symmetric positive definite matrix with a cached lower Cholesky factor.
// Inverses are never materialized: every M^{-1} application goes through
// triangular solves against the factor. Construction symmetrizes the input
// as (A + A^T)/2 and rejects asymmetry beyond 1e-8 relative.
class SpdMatrix {
 public:
  explicit SpdMatrix(const MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() == 0)
      throw std::invalid_argument("SpdMatrix: matrix must be square and non-empty");
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0 && asym > 1e-8 * scale)
      throw std::invalid_argument("SpdMatrix: input asymmetric beyond 1e-8 relative");
    entries_ = 0.5 * (a + a.transpose());
    llt_.compute(entries_);
    if (llt_.info() != Eigen::Success)
      throw std::invalid_argument("SpdMatrix: matrix is not positive definite");
    // Eigen reports success on semidefinite edge cases; insist on strictly
    // positive pivots.
    if ((llt_.matrixLLT().diagonal().array() <= 0.0).any())
      throw std::invalid_argument("SpdMatrix: non-positive Cholesky pivot");
    diagonal_ = entries_.isDiagonal(1e-300);
  }

  static SpdMatrix identity(int dim) {
    return SpdMatrix(MatrixXd::Identity(dim, dim));
  }

  static SpdMatrix diagonal(const VectorXd& diag) {
    if ((diag.array() <= 0.0).any())
      throw std::invalid_argument("SpdMatrix: diagonal entries must be positive");
    return SpdMatrix(MatrixXd(diag.asDiagonal()));
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const MatrixXd& entries() const { return entries_; }
  bool is_diagonal() const { return diagonal_; }

  MatrixXd chol_lower() const { return llt_.matrixL(); }

  // Solves M x = b.
  template <typename Derived>
  auto solve(const Eigen::MatrixBase<Derived>& b) const {
    return llt_.solve(b.derived()).eval();
  }

  // Solves L y = b with L the lower Cholesky factor (whitening transform).
  MatrixXd solve_lower(const MatrixXd& b) const {
    return llt_.matrixL().solve(b);
  }

  // x^T M^{-1} x through the factor; never forms M^{-1}.
  double inv_quad(const VectorXd& x) const {
    if (x.size() != dim())
      throw std::invalid_argument("SpdMatrix::inv_quad: dimension mismatch");
    if (diagonal_)
      return (x.array().square() / entries_.diagonal().array()).sum();
    return llt_.matrixL().solve(x).squaredNorm();
  }

  double log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  // M x without assuming structure; diagonal matrices take the cheap path.
  VectorXd apply(const VectorXd& x) const {
    if (diagonal_) return entries_.diagonal().cwiseProduct(x);
    return entries_ * x;
  }
  MatrixXd apply(const MatrixXd& x) const {
    if (diagonal_) return entries_.diagonal().asDiagonal() * x;
    return entries_ * x;
  }

 private:
  MatrixXd entries_;
  Eigen::LLT<MatrixXd> llt_;
  bool diagonal_ = false;
};

// ||x - y||_M^2 = (x - y)^T M^{-1} (x - y).
inline double scaled_norm_sq(const VectorXd& x, const VectorXd& y,
                             const SpdMatrix& m) {
  if (x.size() != y.size() || x.size() != m.dim())
    throw std::invalid_argument("scaled_norm_sq: dimension mismatch");
  return m.inv_quad(x - y);
}

inline double log_det(const SpdMatrix& m) { return m.log_det(); }

// Symmetric square root via eigendecomposition, eigenvalue floor 1e-14.
inline MatrixXd spd_sqrt(const MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spd_sqrt: eigendecomposition failed");
  VectorXd vals = es.eigenvalues().cwiseMax(1e-14);
  return es.eigenvectors() * vals.cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

// Configuration carrier for the preconditioner M.
struct PreconditionerSpec {
  struct Identity {};
  struct Diagonal {
    VectorXd entries;
  };
  struct Dense {
    MatrixXd entries;
  };
  std::variant<Identity, Diagonal, Dense> variant = Identity{};

  static PreconditionerSpec identity() { return {}; }
  static PreconditionerSpec diagonal(VectorXd d) {
    if ((d.array() <= 0.0).any())
      throw std::invalid_argument("PreconditionerSpec: diagonal entries must be positive");
    return {Diagonal{std::move(d)}};
  }
  static PreconditionerSpec dense(MatrixXd m) { return {Dense{std::move(m)}}; }

  SpdMatrix resolve(int dim) const {
    if (std::holds_alternative<Identity>(variant))
      return SpdMatrix::identity(dim);
    if (const auto* d = std::get_if<Diagonal>(&variant)) {
      if (d->entries.size() != dim)
        throw std::invalid_argument("PreconditionerSpec: diagonal size mismatch");
      return SpdMatrix::diagonal(d->entries);
    }
    const auto& m = std::get<Dense>(variant).entries;
    if (m.rows() != dim)
      throw std::invalid_argument("PreconditionerSpec: dense size mismatch");
    return SpdMatrix(m);
  }
};

struct GaussianDist {
  VectorXd mean;
  SpdMatrix cov;

  GaussianDist(VectorXd mu, SpdMatrix sigma)
      : mean(std::move(mu)), cov(std::move(sigma)) {
    if (mean.size() != cov.dim())
      throw std::invalid_argument("GaussianDist: mean length must equal cov dim");
  }
};

// mean + L xi with xi i.i.d. standard normal.
inline VectorXd sample_gaussian(const GaussianDist& g, std::mt19937_64& rng) {
  VectorXd xi = standard_normal_vector(rng, g.cov.dim());
  return g.mean + g.cov.chol_lower() * xi;
}

}  // namespace pbrwp
