#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pbrwp/runner.hpp"
#include "pbrwp/svg_plot.hpp"
#include "pbrwp/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Particle-based sampling experiments with proximal score "
               "approximations and Langevin baselines"};
  app.require_subcommand(1);

  std::string config_path, out_dir, metrics_path, svg_path;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* run_cmd = app.add_subcommand("run", "Execute an experiment config");
  run_cmd->add_option("--config", config_path, "Path to the INI config")
      ->required();
  auto* out_opt = run_cmd->add_option("--out", out_dir,
                                      "Output directory (overrides config)");
  auto* seed_opt =
      run_cmd->add_option("--seed", seed, "Seed override (overrides config)");

  auto* verify_cmd = app.add_subcommand(
      "verify", "Run the Gaussian closed-form verification suite");

  auto* plot_cmd =
      app.add_subcommand("plot", "Render a metrics CSV as an SVG line plot");
  plot_cmd->add_option("--metrics", metrics_path, "metrics.csv to plot")
      ->required();
  plot_cmd->add_option("--out", svg_path, "Output SVG path")->required();

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  if (run_cmd->parsed()) {
    pbrwp::RunOptions opts;
    opts.config_path = config_path;
    if (out_opt->count() > 0) opts.out_dir = out_dir;
    if (seed_set) opts.seed = seed;
    return pbrwp::run(opts);
  }

  if (verify_cmd->parsed()) {
    auto results = pbrwp::verify::run_all();
    bool all_ok = true;
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
      all_ok = all_ok && r.passed;
      std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name
                << std::string(width - r.name.size() + 2, ' ') << r.detail
                << "\n";
    }
    std::cout << (all_ok ? "all checks passed" : "some checks FAILED") << "\n";
    return all_ok ? 0 : 1;
  }

  if (plot_cmd->parsed()) {
    try {
      pbrwp::write_metrics_svg(pbrwp::read_csv_table(metrics_path), svg_path);
    } catch (const std::exception& e) {
      std::cerr << "plot error: " << e.what() << "\n";
      return 1;
    }
    return 0;
  }

  return 0;
}
