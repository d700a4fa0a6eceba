// bandit: command-line driver for the experiment harness.
//
//   bandit run --config FILE [--seed N] [--workers N] [--out DIR]
//   bandit run --preset NAME [...]
//   bandit list-presets
//   bandit show-preset NAME
//   bandit oracle-check
//
// Exit status: 0 success, 1 invalid configuration or I/O error, 2 numerical
// convergence failure.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "belman.hpp"
#include "oracle_check.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumerical = 2;

int run_command(const std::string& config_path, const std::string& preset, std::optional<std::uint64_t> seed,
                std::optional<std::uint64_t> workers, const std::string& out) {
  belman::ExperimentConfig config;
  if (!preset.empty()) {
    auto p = belman::find_preset(preset);
    if (!p) throw belman::ValidationError({"unknown preset: " + preset});
    config = *p;
  } else {
    config = belman::load_config(config_path);
  }
  if (seed) config.base_seed = *seed;
  if (workers) config.workers = *workers;
  if (!out.empty()) config.output = out;
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  const auto result = belman::run_experiment(config);
  belman::emit_csv(result, config.output);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  std::cout << config.name << ": " << config.algorithms.size() << " algorithms x " << config.n_runs
            << " runs x " << config.horizon << " steps in " << elapsed.count() << " s -> " << config.output
            << "\n";
  const auto metric = belman::metrics_for(config.mode).front();
  for (const auto& alg : config.algorithms) {
    const auto& agg = result.aggregate(alg, metric);
    std::cout << "  " << alg << ": mean " << metric << " at T " << agg.mean.back() << " (p75 " << agg.p75.back()
              << ")\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BelMan bandit laboratory"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment and write runs.csv / agg.csv");
  std::string config_path, preset, out;
  std::optional<std::uint64_t> seed, workers;
  auto* config_opt = run->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* preset_opt = run->add_option("--preset", preset, "named preset instead of a config file");
  config_opt->excludes(preset_opt);
  run->add_option("--seed", seed, "override base_seed");
  run->add_option("--workers", workers, "worker threads (BANDIT_WORKERS takes precedence)")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory");

  auto* list = app.add_subcommand("list-presets", "list the named presets");
  auto* show = app.add_subcommand("show-preset", "print a preset as a JSON config");
  std::string show_name;
  show->add_option("name", show_name)->required();
  auto* oracle = app.add_subcommand("oracle-check", "run the quadrature and grid oracle suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) {
      if (config_path.empty() && preset.empty()) {
        std::cerr << "error: run needs --config or --preset\n";
        return kExitInvalid;
      }
      return run_command(config_path, preset, seed, workers, out);
    }
    if (*list) {
      for (const auto& p : belman::presets()) {
        std::cout << p.name << "\t" << belman::mode_name(p.mode) << "\tT=" << p.horizon << "\truns=" << p.n_runs
                  << "\n";
      }
      return kExitOk;
    }
    if (*show) {
      auto p = belman::find_preset(show_name);
      if (!p) {
        std::cerr << "error: unknown preset " << show_name << "\n";
        return kExitInvalid;
      }
      std::cout << belman::config_to_json(*p).dump(2) << "\n";
      return kExitOk;
    }
    if (*oracle) return bandit_cli::run_oracle_check(std::cout) ? kExitOk : kExitNumerical;
  } catch (const belman::ValidationError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& v : e.violations()) std::cerr << "  - " << v << "\n";
    return kExitInvalid;
  } catch (const belman::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const belman::DivergentNormalizerError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitOk;
}
