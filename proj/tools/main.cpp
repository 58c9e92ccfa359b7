// ljchain command line: validate | predict | minimize | sweep | recover | ergodic

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ljchain/config.hpp"
#include "ljchain/minimize.hpp"
#include "ljchain/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"random Lennard-Jones chain laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  int workers = 0;
  long long seed_offset = 0;
  app.add_option("--config", config_path, "experiment config file")->required();
  app.add_option("--output", output, "output directory (overrides config)");
  app.add_option("--workers", workers, "worker count (overrides config)");
  app.add_option("--seed-offset", seed_offset, "added to every seed in the config");

  const char* modes[] = {"validate", "predict", "minimize", "sweep", "recover", "ergodic"};
  for (const char* m : modes) app.add_subcommand(m)->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    ljchain::RunConfig cfg = ljchain::parse_config(config_path);
    const std::string mode = app.get_subcommands().front()->get_name();
    if (mode == "validate") cfg.experiment.mode = ljchain::ExperimentMode::validate;
    else if (mode == "predict") cfg.experiment.mode = ljchain::ExperimentMode::predict;
    else if (mode == "minimize") cfg.experiment.mode = ljchain::ExperimentMode::minimize;
    else if (mode == "sweep") cfg.experiment.mode = ljchain::ExperimentMode::sweep;
    else if (mode == "recover") cfg.experiment.mode = ljchain::ExperimentMode::recover;
    else cfg.experiment.mode = ljchain::ExperimentMode::ergodic;

    if (!output.empty()) cfg.experiment.output = output;
    if (workers > 0) cfg.experiment.workers = workers;
    if (seed_offset != 0) {
      for (auto& s : cfg.experiment.seeds) s += static_cast<std::uint64_t>(seed_offset);
      cfg.experiment.seed += static_cast<std::uint64_t>(seed_offset);
    }

    const ljchain::RunOutcome out = ljchain::run(cfg);
    std::fputs(out.summary.c_str(), stdout);
    for (const auto& a : out.artifacts) std::printf("wrote %s\n", a.c_str());
    return out.exit_code;
  } catch (const ljchain::ConfigError& e) {
    std::fprintf(stderr, "config error");
    if (e.line > 0) std::fprintf(stderr, " (line %d, col %d)", e.line, e.column);
    std::fprintf(stderr, ": %s\n", e.what());
    return 2;
  } catch (const ljchain::SolveError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}
