#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbrwp/io.hpp"
#include "pbrwp/metrics.hpp"
#include "pbrwp/run_config.hpp"
#include "pbrwp/samplers.hpp"

namespace pbrwp {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline nlohmann::ordered_json matrix_json(const MatrixXd& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::ordered_json vector_json(const VectorXd& v) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["potential"]["name"] = to_string(cfg.potential);
  j["potential"]["dim"] = cfg.dim;
  if (cfg.potential == PotentialKind::quadratic)
    j["potential"]["sigma"] = matrix_json(cfg.sigma);
  j["sampler"]["name"] = to_string(cfg.sampler);
  j["sampler"]["eta"] = cfg.sampler_cfg.eta;
  j["sampler"]["t"] = cfg.sampler_cfg.t;
  j["sampler"]["beta"] = cfg.sampler_cfg.beta;
  j["sampler"]["beta_auto"] = cfg.beta_auto;
  j["sampler"]["preconditioner"] = cfg.precond_kind;
  j["sampler"]["preconditioner_matrix"] =
      matrix_json(cfg.sampler_cfg.preconditioner.resolve(cfg.dim).entries());
  j["sampler"]["z_method"] = cfg.z_method_name;
  j["sampler"]["z_samples"] = cfg.z_samples;
  j["sampler"]["iters"] = cfg.sampler_cfg.iters;
  j["sampler"]["seed"] = cfg.sampler_cfg.seed;
  if (cfg.sampler == SamplerKind::myula) {
    j["sampler"]["theta"] = cfg.theta;
    j["sampler"]["prox"] = cfg.prox == ProxKind::l1 ? "l1" : "none";
    j["sampler"]["prox_lambda"] = cfg.prox_lambda;
  }
  j["init"]["n_particles"] = cfg.n_particles;
  j["init"]["mean"] = vector_json(cfg.init_mean);
  j["init"]["cov"] = matrix_json(cfg.init_cov);
  j["output"]["snapshot_every"] = cfg.snapshot_every;
  j["output"]["dir"] = cfg.output_dir;
  return j;
}

}  // namespace detail

// Executes one experiment: initial Gaussian ensemble, the configured sampler
// for the configured iteration count, snapshots and metrics per
// snapshot_every, and a manifest holding every resolved setting.
// Exit codes: 0 success, 2 invalid config, 3 divergence guard.
inline int run(const RunOptions& opts) {
  RunConfig cfg;
  std::unique_ptr<Potential> potential;
  std::optional<SpdMatrix> init_cov;
  try {
    cfg = parse_run_config(IniFile::parse_file(opts.config_path));
    if (opts.out_dir) cfg.output_dir = *opts.out_dir;
    if (opts.seed) cfg.sampler_cfg.seed = *opts.seed;
    potential = make_potential(cfg);
    try {
      init_cov.emplace(cfg.init_cov);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("init.cov: ") + e.what());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
  };

  const std::uint64_t seed = cfg.sampler_cfg.seed;
  const int d = cfg.dim, n = cfg.n_particles;

  // Initial ensemble from its own substream, separate from step randomness.
  GaussianDist init(cfg.init_mean, *init_cov);
  auto init_rng = substream(seed, 0x1217ULL);
  MatrixXd x(d, n);
  for (int j = 0; j < n; ++j) x.col(j) = sample_gaussian(init, init_rng);

  write_particles_csv(out_path("particles_0.csv"), x);

  std::ofstream metrics(out_path("metrics.csv"), std::ios::binary);
  metrics << "iter,kl_estimate,mean_norm,cov_trace,max_particle_norm\n";

  LogDensityFn log_target = [&](const VectorXd& v) {
    return -cfg.sampler_cfg.beta * potential->value(v);
  };

  auto emit_metrics = [&](std::int64_t iter) {
    metrics << iter << ",";
    if (d == 2) metrics << format_double(kl_estimate_kde(x, log_target));
    metrics << ",";
    metrics << format_double(x.rowwise().mean().norm()) << ",";
    if (n >= 2)
      metrics << format_double(ensemble_moments(x).cov.trace());
    metrics << ",";
    double max_norm = 0.0;
    for (int j = 0; j < n; ++j) max_norm = std::max(max_norm, x.col(j).norm());
    metrics << format_double(max_norm) << "\n";
  };

  // Per-sampler state kept across iterations.
  std::optional<SpdMatrix> m_fixed;
  if (cfg.sampler == SamplerKind::pbrwp)
    m_fixed.emplace(cfg.sampler_cfg.preconditioner.resolve(d));
  else if (cfg.sampler == SamplerKind::brwp)
    m_fixed.emplace(SpdMatrix::identity(d));
  else if (cfg.sampler == SamplerKind::mla)
    m_fixed.emplace(cfg.sampler_cfg.preconditioner.resolve(d));
  std::vector<AdamPrecondState> adam_states(
      cfg.sampler == SamplerKind::pbrwp_adam ? n : 0,
      AdamPrecondState::init(d));
  PbrwpWorkspace workspace;

  GradMap grad_f = [&](const VectorXd& v) { return potential->grad(v); };
  ProxMap prox_g = [&](const VectorXd& v, double theta) {
    if (cfg.prox == ProxKind::none) return v;
    double thresh = theta * cfg.prox_lambda;
    VectorXd out = v;
    for (int i = 0; i < out.size(); ++i)
      out(i) = std::copysign(std::max(std::abs(out(i)) - thresh, 0.0), out(i));
    return out;
  };

  double accept_acc = 0.0;
  std::int64_t accept_count = 0;
  std::vector<double> iter_ms;
  iter_ms.reserve(static_cast<std::size_t>(cfg.sampler_cfg.iters));
  auto wall_start = std::chrono::steady_clock::now();

  try {
    for (std::int64_t k = 1; k <= cfg.sampler_cfg.iters; ++k) {
      auto t0 = std::chrono::steady_clock::now();
      switch (cfg.sampler) {
        case SamplerKind::pbrwp:
        case SamplerKind::brwp:
          x = pbrwp_step(x, *potential, *m_fixed, cfg.sampler_cfg, k,
                         &workspace);
          break;
        case SamplerKind::ula:
          x = ula_step(x, *potential, cfg.sampler_cfg.eta,
                       cfg.sampler_cfg.beta, seed, k);
          break;
        case SamplerKind::mala: {
          MalaResult r = mala_step(x, *potential, cfg.sampler_cfg.eta,
                                   cfg.sampler_cfg.beta, seed, k);
          x = std::move(r.x);
          accept_acc += r.accept_rate;
          ++accept_count;
          break;
        }
        case SamplerKind::mla:
          x = mla_step(x, *potential, cfg.sampler_cfg.eta,
                       cfg.sampler_cfg.beta, *m_fixed, seed, k);
          break;
        case SamplerKind::myula:
          x = myula_step(x, grad_f, prox_g, cfg.sampler_cfg.eta, cfg.theta,
                         seed, k);
          break;
        case SamplerKind::pbrwp_adam: {
          std::vector<SpdMatrix> ms;
          ms.reserve(static_cast<std::size_t>(n));
          for (int j = 0; j < n; ++j) {
            auto [next, mj] =
                adam_precond_update(adam_states[static_cast<std::size_t>(j)],
                                    potential->grad(x.col(j)));
            adam_states[static_cast<std::size_t>(j)] = next;
            ms.push_back(std::move(mj));
          }
          x = variable_pbrwp_step(x, *potential, ms, cfg.sampler_cfg, k);
          break;
        }
      }
      auto t1 = std::chrono::steady_clock::now();
      iter_ms.push_back(
          std::chrono::duration<double, std::milli>(t1 - t0).count());

      if (k % cfg.snapshot_every == 0) {
        write_particles_csv(
            out_path("particles_" + std::to_string(k) + ".csv"), x);
        emit_metrics(k);
      }
    }
  } catch (const DivergenceError& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return 3;
  }

  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - wall_start)
                    .count();

  nlohmann::ordered_json manifest;
  manifest["tool"]["name"] = "sampler";
  manifest["tool"]["version"] = kToolVersion;
  manifest["config"] = detail::config_json(cfg);
  manifest["run"]["seed"] = seed;
  manifest["run"]["iterations"] = cfg.sampler_cfg.iters;
  manifest["run"]["wall_clock_seconds"] = wall;
  double mean_ms = 0.0, max_ms = 0.0;
  for (double v : iter_ms) {
    mean_ms += v;
    max_ms = std::max(max_ms, v);
  }
  if (!iter_ms.empty()) mean_ms /= static_cast<double>(iter_ms.size());
  manifest["run"]["per_iteration_ms"]["mean"] = mean_ms;
  manifest["run"]["per_iteration_ms"]["max"] = max_ms;
  if (accept_count > 0)
    manifest["run"]["mala_mean_accept_rate"] =
        accept_acc / static_cast<double>(accept_count);

  std::ofstream mf(out_path("manifest.json"), std::ios::binary);
  mf << manifest.dump(2) << "\n";
  return 0;
}

}  // namespace pbrwp
