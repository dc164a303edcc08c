#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "shortmr/errors.hpp"
#include "shortmr/kernels.hpp"
#include "shortmr/pipeline.hpp"

// shortmr <command> --config <path> [--seed N] [--out DIR]
// exit codes: 0 success, 1 validation error, 2 runtime failure
int main(int argc, char** argv) {
  CLI::App app{
      "shortmr - demographic shortcut-learning audit for volumetric "
      "classifiers on phantom cohorts"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::int64_t seed_override = -1;
  bool scalar_kernels = false;

  const char* commands[] = {"generate",  "curate",  "train",
                            "attribute", "analyze", "report"};
  const char* descriptions[] = {
      "generate the phantom cohort and synthetic atlas",
      "build the baseline/biased dataset pair and audit it",
      "train the attribute, baseline and biased classifiers",
      "compute GradCAM attribution volumes in atlas space",
      "regional rank analysis, permutation test and stability curves",
      "emit the delta, rank-scatter and region-overlay figures"};

  std::string chosen;
  for (int i = 0; i < 6; ++i) {
    auto* sub = app.add_subcommand(commands[i], descriptions[i]);
    sub->add_option("--config", config_path, "run configuration file")
        ->required();
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_override, "override the output directory");
    sub->add_flag("--scalar-kernels", scalar_kernels,
                  "force the scalar kernel backend");
    sub->callback([&chosen, name = std::string(commands[i])] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (scalar_kernels) {
      shortmr::kernels::set_active(shortmr::kernels::Backend::scalar);
    }
    auto cfg = shortmr::io::RunConfig::parse_file(config_path);
    if (seed_override >= 0) cfg.set("seed", std::to_string(seed_override));
    if (!out_override.empty()) cfg.set("out_dir", out_override);
    shortmr::run_pipeline(chosen, cfg);
  } catch (const shortmr::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
