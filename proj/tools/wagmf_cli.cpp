#include <cstdlib>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "wagmf/experiment.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string field; std::getline(ss, field, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw wagmf::Error(wagmf::ErrorKind::InvalidConfig, "bad alpha grid entry '" + field + "'");
    }
  }
  return out;
}

bool is_config_error(wagmf::ErrorKind kind) {
  using wagmf::ErrorKind;
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnknownPreset:
    case ErrorKind::InvalidOverride:
    case ErrorKind::InsufficientSeeds:
    case ErrorKind::InvalidSet:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted adaptive gradient experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run optimizer/problem experiments and write traces");
  std::string config_path;
  std::vector<std::string> optimizers;
  std::string alpha_grid;
  std::int64_t rounds = 0;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "wagmf_out";
  std::string problem;
  bool bound_eval = false;
  bool significance = false;
  run->add_option("--config", config_path, "JSON experiment config");
  run->add_option("--optimizer", optimizers, "Preset name (repeatable); replaces the config list");
  run->add_option("--alpha", alpha_grid, "Comma-separated alpha grid for the optimizers");
  run->add_option("--T", rounds, "Number of rounds");
  run->add_option("--seed", seeds, "Seed (repeatable)");
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--problem", problem, "Problem kind when no config is given");
  run->add_flag("--bound-eval", bound_eval, "Evaluate regret bounds per run");
  run->add_flag("--significance", significance, "Pairwise t-tests across seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  wagmf::ExperimentConfig config;
  try {
    if (!config_path.empty()) {
      config = wagmf::load_config(config_path);
    } else {
      config.box = std::make_pair(std::vector<double>{-1.0}, std::vector<double>{1.0});
    }
    if (!problem.empty()) config.problem.kind = problem;
    const auto grid = alpha_grid.empty() ? std::vector<double>{} : parse_grid(alpha_grid);
    if (!optimizers.empty()) {
      config.optimizers.clear();
      for (const auto& name : optimizers) config.optimizers.push_back({name, grid, {}});
    } else if (!grid.empty()) {
      for (auto& o : config.optimizers) o.alphas = grid;
    }
    if (rounds != 0) config.rounds = rounds;
    if (!seeds.empty()) config.seeds = seeds;
    if (bound_eval) config.bound_eval = true;
    if (significance) config.significance = true;
    config.validate();
  } catch (const wagmf::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const auto report = wagmf::run_experiment(config, out_dir);
    for (const auto& g : report.grid) {
      std::cout << g.optimizer << ": best alpha " << g.best_alpha << " (score " << g.best_score << ")\n";
    }
    for (const auto& p : report.pairs) {
      std::cout << p.a << " vs " << p.b << ": p = " << p.test.p << (p.significant ? " *" : "") << '\n';
    }
  } catch (const wagmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.kind()) ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
