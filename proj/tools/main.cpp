#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "benchalign/commands.hpp"
#include "benchalign/config.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the output directory");
}

benchalign::cli::ExperimentConfig resolve(const CommonArgs& args) {
  auto cfg = benchalign::cli::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchalign: learn preference-aligned per-question benchmark weights"};
  app.require_subcommand(1);

  CommonArgs validate_args, train_args, eval_args, baseline_args, sweep_args, synth_args;
  std::string benchmark_file, baseline_name, sweep_axis;
  unsigned jobs = 1;

  CLI::App* validate = app.add_subcommand("validate", "load and validate the corpus files");
  add_common(validate, validate_args);

  CLI::App* train = app.add_subcommand("train", "learn question weights from the target ranking");
  add_common(train, train_args);

  CLI::App* evaluate = app.add_subcommand("evaluate", "apply a weighted benchmark to the holdout");
  add_common(evaluate, eval_args);
  evaluate->add_option("--benchmark", benchmark_file, "weighted benchmark CSV")->required();

  CLI::App* baseline = app.add_subcommand("baseline", "run a comparison method");
  add_common(baseline, baseline_args);
  baseline->add_option("--name", baseline_name,
                       "one of: random, metabench, tinybenchmarks, no_ltr");

  CLI::App* sweep = app.add_subcommand("sweep", "data-availability sweep grid");
  add_common(sweep, sweep_args);
  sweep->add_option("--axis", sweep_axis, "models or questions");
  sweep->add_option("--jobs", jobs, "concurrent sweep cells");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic planted-weight world");
  add_common(synth, synth_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      benchalign::cli::cmd_validate(resolve(validate_args));
    } else if (train->parsed()) {
      benchalign::cli::cmd_train(resolve(train_args));
    } else if (evaluate->parsed()) {
      benchalign::cli::cmd_evaluate(resolve(eval_args), benchmark_file);
    } else if (baseline->parsed()) {
      auto cfg = resolve(baseline_args);
      const std::string name = baseline_name.empty() ? cfg.method_name : baseline_name;
      benchalign::cli::cmd_baseline(cfg, name);
    } else if (sweep->parsed()) {
      benchalign::cli::cmd_sweep(resolve(sweep_args), sweep_axis, jobs);
    } else if (synth->parsed()) {
      benchalign::cli::cmd_synth(resolve(synth_args));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
