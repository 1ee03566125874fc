// hydro - CLI for the rainfall-runoff forecasting engine.
//
// Subcommands: synth, ingest, train, eval, compare.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric/training
// error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hydro/run.hpp"

namespace {

int dispatch(int argc, char** argv) {
  CLI::App app{"Spatio-temporal rainfall-runoff forecasting engine"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic archive");
  std::string synth_out;
  hydro::SynthSpec synth_spec;
  synth->add_option("--out", synth_out, "Target directory")->required();
  synth->add_option("--catchments", synth_spec.n_catchments, "Catchment count");
  synth->add_option("--days", synth_spec.n_days, "Day count");
  synth->add_option("--seed", synth_spec.seed, "Generator seed");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load and inspect an archive");
  std::string ingest_dir;
  bool ingest_validate = false;
  ingest->add_option("data", ingest_dir, "Archive directory")->required();
  ingest->add_flag("--validate", ingest_validate, "Print validation details");

  // train
  auto* train = app.add_subcommand("train", "Train one run or the 8-run matrix");
  std::string train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  bool train_matrix = false, train_physical = false;
  train->add_option("--config", train_config, "Run config JSON")->required();
  train->add_option("--out", train_out, "Run directory")->required();
  train->add_option("--seed", train_seed, "Override the config seed");
  train->add_flag("--matrix", train_matrix,
                  "Run all {tier 1..4} x {static on/off} configurations");
  train->add_flag("--physical-rmse", train_physical,
                  "Also report RMSE in physical units");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string eval_checkpoint, eval_data, eval_out;
  std::string eval_split_mode;
  double eval_ratio = 0.8;
  std::optional<std::uint64_t> eval_split_seed;
  bool eval_physical = false;
  eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Archive directory")->required();
  eval->add_option("--out", eval_out, "Output directory")->required();
  eval->add_option("--split-mode", eval_split_mode,
                   "Override split mode (location|time)");
  eval->add_option("--ratio", eval_ratio, "Override split ratio");
  eval->add_option("--split-seed", eval_split_seed, "Override split seed");
  eval->add_flag("--physical-rmse", eval_physical,
                 "Also report RMSE in physical units");

  // compare
  auto* compare = app.add_subcommand("compare",
                                     "Per-gauge correlation of two series files");
  std::string compare_a, compare_b, compare_out;
  compare->add_option("series_a", compare_a, "First series CSV")->required();
  compare->add_option("series_b", compare_b, "Second series CSV")->required();
  compare->add_option("--out", compare_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*synth) {
    hydro::cmd_synth(synth_spec, synth_out);
  } else if (*ingest) {
    hydro::cmd_ingest(ingest_dir, ingest_validate);
  } else if (*train) {
    hydro::RunConfig cfg = hydro::load_run_config(train_config);
    if (train_seed) {
      cfg.seed = *train_seed;
      if (!cfg.split.seed) cfg.split.seed = *train_seed;
    }
    if (train_matrix) {
      hydro::run_matrix(cfg, train_out, train_physical);
    } else {
      const auto artifacts = hydro::run_training(cfg, train_out, train_physical);
      std::cout << "run complete: " << artifacts.history.size() << " epochs, "
                << "val total rmse "
                << (artifacts.val_metrics.total_rmse) << "\n";
    }
  } else if (*eval) {
    std::optional<hydro::SplitSpec> override_spec;
    if (!eval_split_mode.empty() || eval_split_seed ||
        eval->count("--ratio") > 0) {
      hydro::SplitSpec spec;
      if (eval_split_mode == "location" || eval_split_mode.empty()) {
        spec.mode = hydro::SplitMode::location;
      } else if (eval_split_mode == "time") {
        spec.mode = hydro::SplitMode::time;
      } else {
        throw hydro::ConfigError("--split-mode must be 'location' or 'time'");
      }
      spec.ratio = eval_ratio;
      spec.seed = eval_split_seed;
      override_spec = spec;
    }
    hydro::cmd_eval(eval_checkpoint, eval_data, eval_out, override_spec,
                    eval_physical);
  } else if (*compare) {
    hydro::cmd_compare(compare_a, compare_b, compare_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const hydro::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
