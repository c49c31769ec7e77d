#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pbrwp/kernel.hpp"
#include "pbrwp/linalg.hpp"
#include "pbrwp/parallel.hpp"
#include "pbrwp/potentials.hpp"
#include "pbrwp/rng.hpp"

namespace pbrwp {

// d x N matrix of particle positions; column j is particle j.
using ParticleEnsemble = MatrixXd;

struct SamplerConfig {
  double eta = 0.1;   // step-size
  double t = 0.1;     // proximal regularization T
  double beta = 1.0;  // diffusion; "auto" is resolved to d^{-1/2} at parse time
  PreconditionerSpec preconditioner;
  ZMethod z_method;
  std::int64_t iters = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (eta <= 0) throw std::invalid_argument("SamplerConfig: eta must be positive");
    if (t <= 0) throw std::invalid_argument("SamplerConfig: T must be positive");
    if (beta <= 0) throw std::invalid_argument("SamplerConfig: beta must be positive");
    if (iters < 0) throw std::invalid_argument("SamplerConfig: iters must be >= 0");
  }
};

// Raised when an update produces a non-finite entry or a coordinate beyond
// the 1e8 guard; carries the iteration and particle that tripped it.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t iteration, Eigen::Index particle, double value)
      : std::runtime_error("divergence at iteration " +
                           std::to_string(iteration) + ", particle " +
                           std::to_string(particle) + " (value " +
                           std::to_string(value) + ")"),
        iteration(iteration),
        particle(static_cast<std::int64_t>(particle)) {}
  std::int64_t iteration;
  std::int64_t particle;
};

inline void check_ensemble(const ParticleEnsemble& x, std::int64_t iteration) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double v = x(i, j);
      if (!std::isfinite(v) || std::abs(v) > 1e8)
        throw DivergenceError(iteration, j, v);
    }
  }
}

// Columnwise gradient of V over the ensemble.
inline MatrixXd grad_matrix(const Potential& p, const MatrixXd& x) {
  MatrixXd g(x.rows(), x.cols());
  parallel_for(x.cols(), [&](std::ptrdiff_t j) { g.col(j) = p.grad(x.col(j)); });
  return g;
}

// Scratch buffer reused across iterations; the N x N softmax allocation
// dominates step time for large ensembles otherwise.
struct PbrwpWorkspace {
  RowMatrixXd softmax;
};

// Descent direction with the step-size factored out:
//   Delta = -1/2 M grad V(X) + 1/(2T) (X - X softmax(W)^T),
// so that one iteration is X + eta * Delta.
inline MatrixXd pbrwp_descent_direction(const MatrixXd& x, const Potential& p,
                                        const SpdMatrix& m, double t,
                                        double beta, const ZMethod& z,
                                        std::uint64_t seed,
                                        std::int64_t iteration,
                                        PbrwpWorkspace* ws = nullptr) {
  VectorXd log_z = log_z_ensemble(x, p, m, t, beta, z, seed, iteration);
  PbrwpWorkspace local;
  PbrwpWorkspace& w = ws ? *ws : local;
  interaction_softmax_into(x, m, t, beta, log_z, w.softmax);
  MatrixXd mixed(x.rows(), x.cols());
  mixed.noalias() = x * w.softmax.transpose();
  return -0.5 * m.apply(grad_matrix(p, x)) + (0.5 / t) * (x - mixed);
}

// One PBRWP iteration: Z estimates, interaction matrix, row softmax, evolve.
// Noise-free; the only stochasticity is Monte Carlo Z estimation, whose
// substreams are keyed by (seed, iteration, particle).
inline ParticleEnsemble pbrwp_step(const ParticleEnsemble& x,
                                   const Potential& p, const SpdMatrix& m,
                                   const SamplerConfig& cfg,
                                   std::int64_t iteration,
                                   PbrwpWorkspace* ws = nullptr) {
  ParticleEnsemble out =
      x + cfg.eta * pbrwp_descent_direction(x, p, m, cfg.t, cfg.beta,
                                            cfg.z_method, cfg.seed, iteration,
                                            ws);
  check_ensemble(out, iteration);
  return out;
}

inline ParticleEnsemble pbrwp_step(const ParticleEnsemble& x,
                                   const Potential& p,
                                   const SamplerConfig& cfg,
                                   std::int64_t iteration,
                                   PbrwpWorkspace* ws = nullptr) {
  SpdMatrix m = cfg.preconditioner.resolve(static_cast<int>(x.rows()));
  return pbrwp_step(x, p, m, cfg, iteration, ws);
}

// BRWP is PBRWP with the identity preconditioner.
inline ParticleEnsemble brwp_step(const ParticleEnsemble& x, const Potential& p,
                                  const SamplerConfig& cfg,
                                  std::int64_t iteration) {
  SpdMatrix m = SpdMatrix::identity(static_cast<int>(x.rows()));
  return pbrwp_step(x, p, m, cfg, iteration);
}

// Unadjusted Langevin: x' = x - tau grad V(x) + sqrt(2 tau / beta) xi.
// Per-particle substreams keyed by (seed, particle, iteration).
inline ParticleEnsemble ula_step(const ParticleEnsemble& x, const Potential& p,
                                 double tau, double beta, std::uint64_t seed,
                                 std::int64_t iteration) {
  if (tau < 0) throw std::invalid_argument("ula_step: tau must be >= 0");
  const int d = static_cast<int>(x.rows());
  const double noise = std::sqrt(2.0 * tau / beta);
  ParticleEnsemble out(x.rows(), x.cols());
  parallel_for(x.cols(), [&](std::ptrdiff_t j) {
    auto rng = substream(seed, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(iteration), 0xBA5EULL);
    out.col(j) =
        x.col(j) - tau * p.grad(x.col(j)) + noise * standard_normal_vector(rng, d);
  });
  check_ensemble(out, iteration);
  return out;
}

struct MalaResult {
  ParticleEnsemble x;
  double accept_rate = 0.0;
};

// Metropolis-adjusted Langevin with identity proposal preconditioner.
// Target pi ~ exp(-beta V); proposal mean x - tau grad V(x), covariance
// 2 tau / beta I.
inline MalaResult mala_step(const ParticleEnsemble& x, const Potential& p,
                            double tau, double beta, std::uint64_t seed,
                            std::int64_t iteration) {
  if (tau <= 0) throw std::invalid_argument("mala_step: tau must be positive");
  const int d = static_cast<int>(x.rows());
  const double noise = std::sqrt(2.0 * tau / beta);
  ParticleEnsemble out(x.rows(), x.cols());
  std::vector<int> accepted(static_cast<std::size_t>(x.cols()), 0);
  parallel_for(x.cols(), [&](std::ptrdiff_t j) {
    auto rng = substream(seed, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(iteration), 0xBA5EULL);
    VectorXd cur = x.col(j);
    VectorXd mean_fwd = cur - tau * p.grad(cur);
    VectorXd prop = mean_fwd + noise * standard_normal_vector(rng, d);
    VectorXd mean_bwd = prop - tau * p.grad(prop);
    // log q(a | b) = -beta ||a - mean(b)||^2 / (4 tau) + const
    double log_q_bwd = -beta * (cur - mean_bwd).squaredNorm() / (4.0 * tau);
    double log_q_fwd = -beta * (prop - mean_fwd).squaredNorm() / (4.0 * tau);
    double log_alpha =
        -beta * p.value(prop) + log_q_bwd + beta * p.value(cur) - log_q_fwd;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    if (log_alpha >= 0.0 || std::log(u) < log_alpha) {
      out.col(j) = prop;
      accepted[static_cast<std::size_t>(j)] = 1;
    } else {
      out.col(j) = cur;
    }
  });
  check_ensemble(out, iteration);
  double rate = 0.0;
  for (int a : accepted) rate += a;
  rate /= static_cast<double>(x.cols());
  return MalaResult{std::move(out), rate};
}

// Preconditioned (quadratic-mirror) Langevin:
//   x' = x - tau M grad V(x) + sqrt(2 tau / beta) L xi,  L L^T = M.
// With M = I this reproduces ula_step draw for draw.
inline ParticleEnsemble mla_step(const ParticleEnsemble& x, const Potential& p,
                                 double tau, double beta, const SpdMatrix& m,
                                 std::uint64_t seed, std::int64_t iteration) {
  if (tau < 0) throw std::invalid_argument("mla_step: tau must be >= 0");
  const int d = static_cast<int>(x.rows());
  const double noise = std::sqrt(2.0 * tau / beta);
  const MatrixXd l = m.chol_lower();
  ParticleEnsemble out(x.rows(), x.cols());
  parallel_for(x.cols(), [&](std::ptrdiff_t j) {
    auto rng = substream(seed, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(iteration), 0xBA5EULL);
    out.col(j) = x.col(j) - tau * m.apply(p.grad(x.col(j))) +
                 noise * (l * standard_normal_vector(rng, d));
  });
  check_ensemble(out, iteration);
  return out;
}

using ProxMap = std::function<VectorXd(const VectorXd&, double)>;
using GradMap = std::function<VectorXd(const VectorXd&)>;

// Moreau-Yosida regularized ULA for a composite potential f + g:
//   x' = (1 - tau/theta) x - tau grad f(x) + (tau/theta) prox_{theta g}(x)
//        + sqrt(2 tau) xi.
inline ParticleEnsemble myula_step(const ParticleEnsemble& x,
                                   const GradMap& grad_f, const ProxMap& prox_g,
                                   double tau, double theta, std::uint64_t seed,
                                   std::int64_t iteration) {
  if (tau < 0 || theta <= 0)
    throw std::invalid_argument("myula_step: tau must be >= 0, theta positive");
  const int d = static_cast<int>(x.rows());
  const double noise = std::sqrt(2.0 * tau);
  ParticleEnsemble out(x.rows(), x.cols());
  parallel_for(x.cols(), [&](std::ptrdiff_t j) {
    auto rng = substream(seed, static_cast<std::uint64_t>(j),
                         static_cast<std::uint64_t>(iteration), 0xBA5EULL);
    VectorXd cur = x.col(j);
    out.col(j) = (1.0 - tau / theta) * cur - tau * grad_f(cur) +
                 (tau / theta) * prox_g(cur, theta) +
                 noise * standard_normal_vector(rng, d);
  });
  check_ensemble(out, iteration);
  return out;
}

// Second-moment accumulator for the Adam-based diagonal preconditioner.
struct AdamPrecondState {
  VectorXd v;
  std::int64_t k = 0;
  double beta2 = 0.999;
  double epsilon = 0.001;

  static AdamPrecondState init(int dim, double beta2 = 0.999,
                               double epsilon = 0.001) {
    return AdamPrecondState{VectorXd::Zero(dim), 0, beta2, epsilon};
  }
};

// One accumulator update:
//   v_k = beta2 v_{k-1} + (1 - beta2) g^2,  vhat = v_k / (1 - beta2^k),
//   M = diag(1 / (sqrt(vhat) + eps)).
inline std::pair<AdamPrecondState, SpdMatrix> adam_precond_update(
    const AdamPrecondState& state, const VectorXd& g) {
  if (g.size() != state.v.size())
    throw std::invalid_argument("adam_precond_update: gradient size mismatch");
  AdamPrecondState next = state;
  next.k = state.k + 1;
  next.v = state.beta2 * state.v +
           (1.0 - state.beta2) * g.array().square().matrix();
  double correction =
      1.0 - std::pow(state.beta2, static_cast<double>(next.k));
  VectorXd vhat = next.v / correction;
  VectorXd diag =
      (vhat.array().sqrt() + state.epsilon).inverse().matrix();
  return {std::move(next), SpdMatrix::diagonal(diag)};
}

// Variable-preconditioner PBRWP. The drift applies M_j to particle j's
// gradient; the interaction weights fold in the Laplace Z estimate:
//   W_{ij} = -beta ||x_i - x_j||^2_{M_j} / (4T) - log det(M_j)/2
//            + beta V(x_j)/2.
inline ParticleEnsemble variable_pbrwp_step(
    const ParticleEnsemble& x, const Potential& p,
    const std::vector<SpdMatrix>& per_particle_m, const SamplerConfig& cfg,
    std::int64_t iteration) {
  const auto n = x.cols();
  if (static_cast<Eigen::Index>(per_particle_m.size()) != n)
    throw std::invalid_argument("variable_pbrwp_step: one M per particle required");

  VectorXd col_shift(n);
  parallel_for(n, [&](std::ptrdiff_t j) {
    col_shift(j) = -0.5 * per_particle_m[static_cast<std::size_t>(j)].log_det() +
                   0.5 * cfg.beta * p.value(x.col(j));
  });

  RowMatrixXd w(n, n);
  parallel_for(n, [&](std::ptrdiff_t i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double d2 = i == static_cast<std::ptrdiff_t>(j)
                      ? 0.0
                      : per_particle_m[static_cast<std::size_t>(j)].inv_quad(
                            x.col(i) - x.col(j));
      w(i, j) = -0.25 * cfg.beta / cfg.t * d2 + col_shift(j);
    }
  });
  row_softmax_inplace(w);

  MatrixXd drift(x.rows(), n);
  parallel_for(n, [&](std::ptrdiff_t j) {
    drift.col(j) =
        per_particle_m[static_cast<std::size_t>(j)].apply(p.grad(x.col(j)));
  });

  MatrixXd mixed(x.rows(), n);
  mixed.noalias() = x * w.transpose();
  ParticleEnsemble out =
      x - 0.5 * cfg.eta * drift + (0.5 * cfg.eta / cfg.t) * (x - mixed);
  check_ensemble(out, iteration);
  return out;
}

}  // namespace pbrwp
