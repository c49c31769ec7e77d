#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

#include "pbrwp/linalg.hpp"

namespace pbrwp {

// Target potential V with gradient; the target density is exp(-beta V) up to
// a constant. Implementations are stateless and reentrant.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual int dim() const = 0;
  virtual double value(const VectorXd& x) const = 0;
  virtual VectorXd grad(const VectorXd& x) const = 0;
};

// V(x) = x^T Sigma^{-1} x / 2.
class QuadraticPotential final : public Potential {
 public:
  explicit QuadraticPotential(SpdMatrix sigma) : sigma_(std::move(sigma)) {}

  int dim() const override { return sigma_.dim(); }
  const SpdMatrix& sigma() const { return sigma_; }

  double value(const VectorXd& x) const override {
    return 0.5 * sigma_.inv_quad(x);
  }

  VectorXd grad(const VectorXd& x) const override { return sigma_.solve(x); }

 private:
  SpdMatrix sigma_;
};

namespace detail {
// Radial direction x/||x||, with the zero vector as the subgradient choice
// at ||x|| below 1e-12.
inline VectorXd radial_unit(const VectorXd& x) {
  double r = x.norm();
  if (r < 1e-12) return VectorXd::Zero(x.size());
  return x / r;
}
}  // namespace detail

// Bimodal ring potential
//   V(x) = 2 (||x|| - 3)^2 - 2 log[exp(-2 (x1-3)^2) + exp(-2 (x1+3)^2)].
// The log-sum-exp term is evaluated with max subtraction; the raw
// exponentials underflow for |x1| beyond roughly 15.
class TwoMoonsPotential final : public Potential {
 public:
  explicit TwoMoonsPotential(int dim = 2) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("TwoMoonsPotential: dim must be >= 1");
  }

  int dim() const override { return dim_; }

  double value(const VectorXd& x) const override {
    double r = x.norm();
    double x1 = x(0);
    double a = -2.0 * (x1 - 3.0) * (x1 - 3.0);
    double b = -2.0 * (x1 + 3.0) * (x1 + 3.0);
    double m = std::max(a, b);
    double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    return 2.0 * (r - 3.0) * (r - 3.0) - 2.0 * lse;
  }

  VectorXd grad(const VectorXd& x) const override {
    double r = x.norm();
    double x1 = x(0);
    double a = -2.0 * (x1 - 3.0) * (x1 - 3.0);
    double b = -2.0 * (x1 + 3.0) * (x1 + 3.0);
    double m = std::max(a, b);
    double ea = std::exp(a - m);
    double eb = std::exp(b - m);
    double bimodal =
        (8.0 * (x1 - 3.0) * ea + 8.0 * (x1 + 3.0) * eb) / (ea + eb);
    VectorXd g = 4.0 * (r - 3.0) * detail::radial_unit(x);
    g(0) += bimodal;
    return g;
  }

 private:
  int dim_;
};

// Elliptical well V(x) = (||S x|| - radius)^2 with S = diag(scale).
class ScaledAnnulusPotential final : public Potential {
 public:
  ScaledAnnulusPotential()
      : scale_((VectorXd(2) << 1.0, 2.0).finished()), radius_(3.0) {}
  ScaledAnnulusPotential(VectorXd scale, double radius)
      : scale_(std::move(scale)), radius_(radius) {
    if (scale_.size() < 1 || (scale_.array() <= 0.0).any())
      throw std::invalid_argument("ScaledAnnulusPotential: scale must be positive");
  }

  int dim() const override { return static_cast<int>(scale_.size()); }

  double value(const VectorXd& x) const override {
    double r = scale_.cwiseProduct(x).norm();
    return (r - radius_) * (r - radius_);
  }

  VectorXd grad(const VectorXd& x) const override {
    double r = scale_.cwiseProduct(x).norm();
    if (r < 1e-12) return VectorXd::Zero(x.size());
    return (2.0 * (r - radius_) / r) *
           scale_.array().square().matrix().cwiseProduct(x);
  }

 private:
  VectorXd scale_;
  double radius_;
};

}  // namespace pbrwp
