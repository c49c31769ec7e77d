#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "pbrwp/io.hpp"
#include "pbrwp/potentials.hpp"
#include "pbrwp/samplers.hpp"

namespace pbrwp {

// Invalid or inconsistent configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SamplerKind { pbrwp, brwp, ula, mala, mla, myula, pbrwp_adam };
enum class PotentialKind { quadratic, two_moons, annulus };
enum class ProxKind { none, l1 };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::pbrwp: return "pbrwp";
    case SamplerKind::brwp: return "brwp";
    case SamplerKind::ula: return "ula";
    case SamplerKind::mala: return "mala";
    case SamplerKind::mla: return "mla";
    case SamplerKind::myula: return "myula";
    case SamplerKind::pbrwp_adam: return "pbrwp_adam";
  }
  return "?";
}

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::quadratic: return "quadratic";
    case PotentialKind::two_moons: return "two_moons";
    case PotentialKind::annulus: return "annulus";
  }
  return "?";
}

// Fully resolved experiment description; every default is materialized here
// so the manifest alone reproduces a run.
struct RunConfig {
  PotentialKind potential = PotentialKind::two_moons;
  int dim = 2;
  MatrixXd sigma;  // quadratic potential only

  SamplerKind sampler = SamplerKind::pbrwp;
  SamplerConfig sampler_cfg;
  bool beta_auto = false;
  std::string precond_kind = "identity";
  std::string z_method_name = "mc";
  int z_samples = 1000;

  double theta = 0.1;  // myula
  ProxKind prox = ProxKind::none;
  double prox_lambda = 1.0;

  int n_particles = 100;
  VectorXd init_mean;
  MatrixXd init_cov;

  std::int64_t snapshot_every = 10;
  std::string output_dir = "out";
};

namespace detail {

inline double parse_double(const IniFile& ini, const std::string& key,
                           double fallback) {
  if (!ini.has(key)) return fallback;
  try {
    return std::stod(ini.get(key));
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key);
  }
}

inline std::int64_t parse_int(const IniFile& ini, const std::string& key,
                              std::int64_t fallback) {
  if (!ini.has(key)) return fallback;
  try {
    return std::stoll(ini.get(key));
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key);
  }
}

inline MatrixXd read_dense_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    rows.push_back(parse_double_list(line));
  }
  if (rows.empty()) throw ConfigError("empty matrix file: " + path);
  MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw ConfigError("ragged matrix file: " + path);
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return m;
}

// Shared shape for sigma / preconditioner / init covariance specs:
// identity | diagonal (+ "<prefix>_diag") | dense (+ "<prefix>_file") |
// scaled (+ "<prefix>_scale", init covariance only).
inline MatrixXd parse_matrix_spec(const IniFile& ini, const std::string& key,
                                  const std::string& prefix, int dim,
                                  bool allow_scaled) {
  std::string kind = ini.get_or(key, "identity");
  if (kind == "identity") return MatrixXd::Identity(dim, dim);
  if (kind == "diagonal") {
    auto diag = parse_double_list(ini.get(prefix + "_diag"));
    if (static_cast<int>(diag.size()) != dim)
      throw ConfigError(prefix + "_diag length must equal dim");
    VectorXd v = Eigen::Map<VectorXd>(diag.data(), dim);
    return MatrixXd(v.asDiagonal());
  }
  if (kind == "dense") {
    MatrixXd m = read_dense_matrix(ini.get(prefix + "_file"));
    if (m.rows() != dim || m.cols() != dim)
      throw ConfigError(prefix + "_file must be a " + std::to_string(dim) +
                        "x" + std::to_string(dim) + " matrix");
    return m;
  }
  if (allow_scaled && kind == "scaled") {
    double s = parse_double(ini, prefix + "_scale", 1.0);
    if (s <= 0) throw ConfigError(prefix + "_scale must be positive");
    return s * MatrixXd::Identity(dim, dim);
  }
  throw ConfigError("unknown matrix spec '" + kind + "' for " + key);
}

}  // namespace detail

inline RunConfig parse_run_config(const IniFile& ini) {
  RunConfig cfg;

  std::string pot = ini.get_or("potential.name", "two_moons");
  if (pot == "quadratic")
    cfg.potential = PotentialKind::quadratic;
  else if (pot == "two_moons")
    cfg.potential = PotentialKind::two_moons;
  else if (pot == "annulus")
    cfg.potential = PotentialKind::annulus;
  else
    throw ConfigError("unknown potential: " + pot);

  cfg.dim = static_cast<int>(detail::parse_int(ini, "potential.dim", 2));
  if (cfg.dim < 1) throw ConfigError("potential.dim must be >= 1");
  if (cfg.potential == PotentialKind::annulus && cfg.dim != 2)
    throw ConfigError("annulus potential is two-dimensional");
  if (cfg.potential == PotentialKind::quadratic)
    cfg.sigma = detail::parse_matrix_spec(ini, "potential.sigma",
                                          "potential.sigma", cfg.dim, false);

  std::string sampler = ini.get_or("sampler.name", "pbrwp");
  if (sampler == "pbrwp")
    cfg.sampler = SamplerKind::pbrwp;
  else if (sampler == "brwp")
    cfg.sampler = SamplerKind::brwp;
  else if (sampler == "ula")
    cfg.sampler = SamplerKind::ula;
  else if (sampler == "mala")
    cfg.sampler = SamplerKind::mala;
  else if (sampler == "mla")
    cfg.sampler = SamplerKind::mla;
  else if (sampler == "myula")
    cfg.sampler = SamplerKind::myula;
  else if (sampler == "pbrwp_adam")
    cfg.sampler = SamplerKind::pbrwp_adam;
  else
    throw ConfigError("unknown sampler: " + sampler);

  cfg.sampler_cfg.eta = detail::parse_double(ini, "sampler.eta", 0.1);
  cfg.sampler_cfg.t = detail::parse_double(ini, "sampler.t", 0.1);
  std::string beta = ini.get_or("sampler.beta", "1.0");
  if (beta == "auto") {
    cfg.beta_auto = true;
    cfg.sampler_cfg.beta = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  } else {
    try {
      cfg.sampler_cfg.beta = std::stod(beta);
    } catch (const std::exception&) {
      throw ConfigError("sampler.beta must be a number or \"auto\"");
    }
  }
  cfg.sampler_cfg.iters = detail::parse_int(ini, "sampler.iters", 100);
  cfg.sampler_cfg.seed =
      static_cast<std::uint64_t>(detail::parse_int(ini, "sampler.seed", 0));

  cfg.precond_kind = ini.get_or("sampler.preconditioner", "identity");
  MatrixXd pre = detail::parse_matrix_spec(
      ini, "sampler.preconditioner", "sampler.precond", cfg.dim, false);
  if (cfg.precond_kind == "identity")
    cfg.sampler_cfg.preconditioner = PreconditionerSpec::identity();
  else if (cfg.precond_kind == "diagonal")
    cfg.sampler_cfg.preconditioner =
        PreconditionerSpec::diagonal(pre.diagonal());
  else
    cfg.sampler_cfg.preconditioner = PreconditionerSpec::dense(pre);

  cfg.z_method_name = ini.get_or("sampler.z_method", "mc");
  cfg.z_samples =
      static_cast<int>(detail::parse_int(ini, "sampler.z_samples", 1000));
  if (cfg.z_method_name == "mc")
    cfg.sampler_cfg.z_method = ZMethod::monte_carlo(cfg.z_samples);
  else if (cfg.z_method_name == "laplace")
    cfg.sampler_cfg.z_method = ZMethod::laplace();
  else if (cfg.z_method_name == "exact_quadratic")
    cfg.sampler_cfg.z_method = ZMethod::exact_quadratic();
  else
    throw ConfigError("unknown z_method: " + cfg.z_method_name);
  if (cfg.z_method_name == "exact_quadratic" &&
      cfg.potential != PotentialKind::quadratic)
    throw ConfigError("exact_quadratic Z requires the quadratic potential");

  cfg.theta = detail::parse_double(ini, "sampler.theta", 0.1);
  if (cfg.theta <= 0) throw ConfigError("sampler.theta must be positive");
  std::string prox = ini.get_or("sampler.prox", "none");
  if (prox == "none")
    cfg.prox = ProxKind::none;
  else if (prox == "l1")
    cfg.prox = ProxKind::l1;
  else
    throw ConfigError("unknown prox: " + prox);
  cfg.prox_lambda = detail::parse_double(ini, "sampler.prox_lambda", 1.0);

  cfg.n_particles =
      static_cast<int>(detail::parse_int(ini, "init.n_particles", 100));
  if (cfg.n_particles < 1) throw ConfigError("init.n_particles must be >= 1");

  if (ini.has("init.mean")) {
    auto mean = parse_double_list(ini.get("init.mean"));
    if (mean.size() == 1) {
      cfg.init_mean = VectorXd::Constant(cfg.dim, mean[0]);
    } else if (static_cast<int>(mean.size()) == cfg.dim) {
      cfg.init_mean = Eigen::Map<VectorXd>(mean.data(), cfg.dim);
    } else {
      throw ConfigError("init.mean must be a scalar or a dim-length list");
    }
  } else {
    cfg.init_mean = VectorXd::Zero(cfg.dim);
  }
  cfg.init_cov =
      detail::parse_matrix_spec(ini, "init.cov", "init.cov", cfg.dim, true);

  cfg.snapshot_every = detail::parse_int(ini, "output.snapshot_every", 10);
  if (cfg.snapshot_every < 1)
    throw ConfigError("output.snapshot_every must be >= 1");
  cfg.output_dir = ini.get_or("output.dir", "out");

  try {
    cfg.sampler_cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline std::unique_ptr<Potential> make_potential(const RunConfig& cfg) {
  switch (cfg.potential) {
    case PotentialKind::quadratic:
      try {
        return std::make_unique<QuadraticPotential>(SpdMatrix(cfg.sigma));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("potential.sigma: ") + e.what());
      }
    case PotentialKind::two_moons:
      return std::make_unique<TwoMoonsPotential>(cfg.dim);
    case PotentialKind::annulus:
      return std::make_unique<ScaledAnnulusPotential>();
  }
  throw ConfigError("unreachable potential kind");
}

}  // namespace pbrwp
