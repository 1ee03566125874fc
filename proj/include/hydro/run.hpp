// run.hpp - Configuration-driven pipeline behind the CLI: ingest or
// synthesize data, preprocess, train under one of the encoding/static
// configurations, evaluate, and compare data sources. Every artifact a run
// writes (losses.csv, metrics.csv, checkpoint.json, resolved-config.json,
// preprocess.json) is deterministic for a fixed config and seed.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydro/dataset.hpp"
#include "hydro/encodings.hpp"
#include "hydro/eval.hpp"
#include "hydro/model.hpp"
#include "hydro/preprocess.hpp"

namespace hydro {

struct SynthSpec {
  std::size_t n_catchments = 50;
  std::size_t n_days = 1460;
  std::uint64_t seed = 42;
};

// Exactly one of path / synth.
struct DataSpec {
  std::string path;
  std::optional<SynthSpec> synth;
};

struct SplitSpec {
  SplitMode mode = SplitMode::location;
  double ratio = 0.8;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
};

enum class TransformKind { minmax, minmax_cuberoot };

// Field names here are the config-file schema; unknown JSON fields are
// rejected so typos fail loudly.
struct RunConfig {
  DataSpec data;
  std::vector<std::string> features;  // observed input series
  std::vector<std::string> targets;   // predicted series (may add streamflow)
  int encoding_tier = 1;
  bool include_static = true;
  bool use_pca = false;
  double pca_threshold = 0.9;
  TransformKind transform = TransformKind::minmax;
  SplitSpec split;
  std::size_t l_seq = 21;
  double lr = 0.001;
  double dropout = 0.2;
  std::size_t successful_epochs = 120;
  std::size_t encoder_size = 64;
  std::size_t hidden_size = 64;
  std::uint64_t seed = 42;
  std::size_t max_epochs = 0;  // 0 = uncapped
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully resolved config (all defaults materialized).
nlohmann::json to_json(const RunConfig& cfg);

// Everything needed to turn a raw dataset into model-ready tensors again:
// fitted series transforms, the static-feature pipeline, and the encoding
// configuration. Stored inside checkpoints.
struct PipelineState {
  std::vector<std::string> features;
  std::vector<std::string> targets;
  std::vector<std::string> series_names;      // features + extra targets
  std::vector<TargetTransform> series_transforms;  // parallel to series_names
  bool include_static = true;
  bool use_pca = false;
  Standardizer standardizer;                  // when use_pca
  PcaModel pca;                               // when use_pca
  std::vector<ScalerParams> static_scalers;   // when !use_pca
  std::vector<std::string> static_attribute_names;  // fitted column order
  std::vector<std::string> static_channel_names;
  EncodingConfig encoding;

  const TargetTransform& transform_for(const std::string& series_name) const;
};

nlohmann::json to_json(const PipelineState& s);
PipelineState pipeline_from_json(const nlohmann::json& j);

// Model-ready views for one split side.
AssembledData assemble(const Dataset& d, const PipelineState& pipeline,
                       const EncodingSet& encodings,
                       const std::vector<std::size_t>& gauge_indices,
                       std::size_t day_begin, std::size_t day_end);

struct RunArtifacts {
  std::filesystem::path run_dir;
  LossHistory history;
  MetricsReport train_metrics;
  MetricsReport val_metrics;
};

// The full train pipeline; writes the run directory artifacts.
RunArtifacts run_training(const RunConfig& cfg,
                          const std::filesystem::path& out_dir,
                          bool physical_rmse = false);

// All eight configurations of {tier 1..4} x {static on/off}, sequentially,
// each in its own subdirectory, plus matrix-summary.csv.
void run_matrix(const RunConfig& base, const std::filesystem::path& out_dir,
                bool physical_rmse = false);

// CLI command bodies. They throw hydro errors; the binary maps them to exit
// codes (2 config, 3 data, 4 numeric/training).
void cmd_synth(const SynthSpec& spec, const std::filesystem::path& out_dir);
void cmd_ingest(const std::filesystem::path& data_dir, bool validate);
void cmd_eval(const std::filesystem::path& checkpoint,
              const std::filesystem::path& data_dir,
              const std::filesystem::path& out_dir,
              const std::optional<SplitSpec>& split_override,
              bool physical_rmse = false);
void cmd_compare(const std::filesystem::path& series_a,
                 const std::filesystem::path& series_b,
                 const std::filesystem::path& out_csv);

void write_losses_csv(const LossHistory& history,
                      const std::filesystem::path& path);

}  // namespace hydro
