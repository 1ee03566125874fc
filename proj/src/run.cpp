#include "hydro/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "hydro/synth.hpp"

namespace hydro {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void reject_unknown_fields(const nlohmann::json& j,
                           const std::set<std::string>& allowed,
                           const std::string& context) {
  if (!j.is_object())
    throw ConfigError(context + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config field '" + it.key() + "' in " +
                        context);
  }
}

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  reject_unknown_fields(
      j,
      {"data", "features", "targets", "encoding_tier", "include_static",
       "use_pca", "pca_threshold", "transform", "split", "l_seq", "lr",
       "dropout", "successful_epochs", "encoder_size", "hidden_size", "seed",
       "max_epochs"},
      "run config");

  RunConfig cfg;
  if (!j.contains("data"))
    throw ConfigError("config field 'data' is required");
  {
    const auto& data = j.at("data");
    reject_unknown_fields(data, {"path", "synth"}, "data");
    const bool has_path = data.contains("path");
    const bool has_synth = data.contains("synth");
    if (has_path == has_synth)
      throw ConfigError("data must set exactly one of 'path' or 'synth'");
    if (has_path) {
      cfg.data.path = data.at("path").get<std::string>();
    } else {
      const auto& synth = data.at("synth");
      reject_unknown_fields(synth, {"n_catchments", "n_days", "seed"},
                            "data.synth");
      SynthSpec spec;
      spec.n_catchments = get_or<std::size_t>(synth, "n_catchments", 50);
      spec.n_days = get_or<std::size_t>(synth, "n_days", 1460);
      spec.seed = get_or<std::uint64_t>(synth, "seed", 42);
      cfg.data.synth = spec;
    }
  }

  if (!j.contains("features") || !j.contains("targets"))
    throw ConfigError("config fields 'features' and 'targets' are required");
  cfg.features = j.at("features").get<std::vector<std::string>>();
  cfg.targets = j.at("targets").get<std::vector<std::string>>();
  if (cfg.features.empty()) throw ConfigError("'features' must be non-empty");
  if (cfg.targets.empty()) throw ConfigError("'targets' must be non-empty");
  for (const auto& list : {cfg.features, cfg.targets}) {
    std::set<std::string> seen;
    for (const auto& name : list)
      if (!seen.insert(name).second)
        throw ConfigError("duplicate series name '" + name + "' in config");
  }
  // Streamflow is predicted, never observed by the model.
  if (std::find(cfg.features.begin(), cfg.features.end(), "streamflow") !=
      cfg.features.end())
    throw ConfigError("'streamflow' cannot be a feature; it is target-only");

  cfg.encoding_tier = get_or<int>(j, "encoding_tier", 1);
  if (cfg.encoding_tier < 1 || cfg.encoding_tier > 4)
    throw ConfigError("'encoding_tier' must be 1..4");
  cfg.include_static = get_or<bool>(j, "include_static", true);
  cfg.use_pca = get_or<bool>(j, "use_pca", false);
  cfg.pca_threshold = get_or<double>(j, "pca_threshold", 0.9);
  if (!(cfg.pca_threshold > 0.0 && cfg.pca_threshold <= 1.0))
    throw ConfigError("'pca_threshold' must lie in (0,1]");

  const std::string transform = get_or<std::string>(j, "transform", "minmax");
  if (transform == "minmax") {
    cfg.transform = TransformKind::minmax;
  } else if (transform == "minmax+cuberoot") {
    cfg.transform = TransformKind::minmax_cuberoot;
  } else {
    throw ConfigError("'transform' must be 'minmax' or 'minmax+cuberoot'");
  }

  if (j.contains("split")) {
    const auto& split = j.at("split");
    reject_unknown_fields(split, {"mode", "ratio", "seed"}, "split");
    const std::string mode = get_or<std::string>(split, "mode", "location");
    if (mode == "location") {
      cfg.split.mode = SplitMode::location;
    } else if (mode == "time") {
      cfg.split.mode = SplitMode::time;
    } else {
      throw ConfigError("'split.mode' must be 'location' or 'time'");
    }
    cfg.split.ratio = get_or<double>(split, "ratio", 0.8);
    if (split.contains("seed"))
      cfg.split.seed = split.at("seed").get<std::uint64_t>();
  }
  if (!(cfg.split.ratio > 0.0 && cfg.split.ratio < 1.0))
    throw ConfigError("'split.ratio' must lie in (0,1)");

  cfg.l_seq = get_or<std::size_t>(j, "l_seq", 21);
  if (cfg.l_seq == 0) throw ConfigError("'l_seq' must be positive");
  cfg.lr = get_or<double>(j, "lr", 0.001);
  if (!(cfg.lr > 0.0)) throw ConfigError("'lr' must be positive");
  cfg.dropout = get_or<double>(j, "dropout", 0.2);
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0))
    throw ConfigError("'dropout' must lie in [0,1)");
  cfg.successful_epochs = get_or<std::size_t>(j, "successful_epochs", 120);
  cfg.encoder_size = get_or<std::size_t>(j, "encoder_size", 64);
  cfg.hidden_size = get_or<std::size_t>(j, "hidden_size", 64);
  if (cfg.encoder_size == 0 || cfg.hidden_size == 0)
    throw ConfigError("layer sizes must be positive");
  cfg.seed = get_or<std::uint64_t>(j, "seed", 42);
  cfg.max_epochs = get_or<std::size_t>(j, "max_epochs", 0);
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config parse failure: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json data;
  if (cfg.data.synth) {
    data["synth"] = {{"n_catchments", cfg.data.synth->n_catchments},
                     {"n_days", cfg.data.synth->n_days},
                     {"seed", cfg.data.synth->seed}};
  } else {
    data["path"] = cfg.data.path;
  }
  nlohmann::json split = {
      {"mode", cfg.split.mode == SplitMode::location ? "location" : "time"},
      {"ratio", cfg.split.ratio}};
  if (cfg.split.seed) split["seed"] = *cfg.split.seed;
  return {{"data", data},
          {"features", cfg.features},
          {"targets", cfg.targets},
          {"encoding_tier", cfg.encoding_tier},
          {"include_static", cfg.include_static},
          {"use_pca", cfg.use_pca},
          {"pca_threshold", cfg.pca_threshold},
          {"transform", cfg.transform == TransformKind::minmax
                            ? "minmax"
                            : "minmax+cuberoot"},
          {"split", split},
          {"l_seq", cfg.l_seq},
          {"lr", cfg.lr},
          {"dropout", cfg.dropout},
          {"successful_epochs", cfg.successful_epochs},
          {"encoder_size", cfg.encoder_size},
          {"hidden_size", cfg.hidden_size},
          {"seed", cfg.seed},
          {"max_epochs", cfg.max_epochs}};
}

const TargetTransform& PipelineState::transform_for(
    const std::string& series_name) const {
  for (std::size_t i = 0; i < series_names.size(); ++i)
    if (series_names[i] == series_name) return series_transforms[i];
  throw LookupError("no fitted transform for series '" + series_name + "'");
}

nlohmann::json to_json(const PipelineState& s) {
  nlohmann::json transforms = nlohmann::json::array();
  for (std::size_t i = 0; i < s.series_names.size(); ++i) {
    transforms.push_back({{"name", s.series_names[i]},
                          {"scaler", to_json(s.series_transforms[i].scaler)},
                          {"cube_root", s.series_transforms[i].cube_root}});
  }
  nlohmann::json scalers = nlohmann::json::array();
  for (const auto& sc : s.static_scalers) scalers.push_back(to_json(sc));
  nlohmann::json out = {
      {"features", s.features},
      {"targets", s.targets},
      {"series_transforms", transforms},
      {"include_static", s.include_static},
      {"use_pca", s.use_pca},
      {"static_scalers", scalers},
      {"static_attribute_names", s.static_attribute_names},
      {"static_channel_names", s.static_channel_names},
      {"encoding",
       {{"tier", s.encoding.tier}, {"include_static", s.encoding.include_static}}}};
  if (s.use_pca) {
    out["standardizer"] = to_json(s.standardizer);
    out["pca"] = to_json(s.pca);
  }
  return out;
}

PipelineState pipeline_from_json(const nlohmann::json& j) {
  PipelineState s;
  s.features = j.at("features").get<std::vector<std::string>>();
  s.targets = j.at("targets").get<std::vector<std::string>>();
  for (const auto& entry : j.at("series_transforms")) {
    s.series_names.push_back(entry.at("name").get<std::string>());
    TargetTransform t;
    t.scaler = scaler_from_json(entry.at("scaler"));
    t.cube_root = entry.at("cube_root").get<bool>();
    s.series_transforms.push_back(t);
  }
  s.include_static = j.at("include_static").get<bool>();
  s.use_pca = j.at("use_pca").get<bool>();
  for (const auto& sc : j.at("static_scalers"))
    s.static_scalers.push_back(scaler_from_json(sc));
  s.static_attribute_names =
      j.at("static_attribute_names").get<std::vector<std::string>>();
  s.static_channel_names =
      j.at("static_channel_names").get<std::vector<std::string>>();
  s.encoding.tier = j.at("encoding").at("tier").get<int>();
  s.encoding.include_static = j.at("encoding").at("include_static").get<bool>();
  if (s.use_pca) {
    s.standardizer = standardizer_from_json(j.at("standardizer"));
    s.pca = pca_from_json(j.at("pca"));
  }
  return s;
}

namespace {

double transform_value(double raw, const TargetTransform& t) {
  const double v = t.cube_root ? signed_cube_root(raw) : raw;
  return apply_min_max(v, t.scaler);
}

// Raw static rows for a gauge subset, columns in fitted-attribute order.
Matrix gather_static_rows(const Dataset& d,
                          const std::vector<std::string>& attribute_order,
                          const std::vector<std::size_t>& gauges) {
  std::vector<std::size_t> column(attribute_order.size());
  for (std::size_t a = 0; a < attribute_order.size(); ++a) {
    const auto& names = d.static_attrs.attribute_names;
    const auto it =
        std::find(names.begin(), names.end(), attribute_order[a]);
    if (it == names.end())
      throw LookupError("dataset lacks static attribute '" +
                        attribute_order[a] + "'");
    column[a] = static_cast<std::size_t>(it - names.begin());
  }
  Matrix rows(gauges.size(), attribute_order.size());
  for (std::size_t g = 0; g < gauges.size(); ++g)
    for (std::size_t a = 0; a < attribute_order.size(); ++a)
      rows(g, a) = d.static_attrs.values(gauges[g], column[a]);
  return rows;
}

}  // namespace

AssembledData assemble(const Dataset& d, const PipelineState& pipeline,
                       const EncodingSet& encodings,
                       const std::vector<std::size_t>& gauge_indices,
                       std::size_t day_begin, std::size_t day_end) {
  if (gauge_indices.empty())
    throw ContractError("assemble: empty gauge subset");
  if (day_end > d.n_days() || day_begin >= day_end)
    throw ContractError("assemble: bad day range");
  if (d.static_attrs.missing.any())
    throw ContractError("assemble: static attributes still have missing cells");

  const std::size_t n_days = day_end - day_begin;
  AssembledData out;

  auto sliced_series = [&](const std::string& name) {
    const std::size_t fi = d.series.feature_index(name);
    const auto& tf = pipeline.transform_for(name);
    if (d.series.missing[fi].any())
      throw ContractError("assemble: series '" + name +
                          "' still has missing cells");
    Matrix m(n_days, gauge_indices.size());
    for (std::size_t t = 0; t < n_days; ++t)
      for (std::size_t g = 0; g < gauge_indices.size(); ++g)
        m(t, g) = transform_value(
            d.series.values[fi](day_begin + t, gauge_indices[g]), tf);
    return m;
  };

  for (const auto& name : pipeline.features) {
    out.feature_series.push_back(sliced_series(name));
    out.input_names.push_back(name);
  }

  if (pipeline.include_static) {
    const Matrix raw =
        gather_static_rows(d, pipeline.static_attribute_names, gauge_indices);
    if (pipeline.use_pca) {
      out.static_rows =
          apply_pca(pipeline.pca, apply_standardizer(pipeline.standardizer, raw));
    } else {
      out.static_rows = Matrix(raw.rows(), raw.cols());
      for (std::size_t g = 0; g < raw.rows(); ++g)
        for (std::size_t a = 0; a < raw.cols(); ++a)
          out.static_rows(g, a) =
              apply_min_max(raw(g, a), pipeline.static_scalers[a]);
    }
    for (const auto& name : pipeline.static_channel_names)
      out.input_names.push_back(name);
  } else {
    out.static_rows = Matrix(gauge_indices.size(), 0);
  }

  out.space_enc = Matrix(gauge_indices.size(), encodings.per_catchment.cols());
  for (std::size_t g = 0; g < gauge_indices.size(); ++g)
    for (std::size_t e = 0; e < encodings.per_catchment.cols(); ++e)
      out.space_enc(g, e) = encodings.per_catchment(gauge_indices[g], e);
  for (const auto& name : encodings.space_channel_names)
    out.input_names.push_back(name);

  out.time_enc = Matrix(n_days, encodings.per_day.cols());
  for (std::size_t t = 0; t < n_days; ++t)
    for (std::size_t e = 0; e < encodings.per_day.cols(); ++e)
      out.time_enc(t, e) = encodings.per_day(day_begin + t, e);
  for (const auto& name : encodings.time_channel_names)
    out.input_names.push_back(name);

  for (const auto& name : pipeline.targets) {
    out.target_series.push_back(sliced_series(name));
    out.target_names.push_back(name);
  }

  for (const std::size_t g : gauge_indices)
    out.gauge_ids.push_back(d.catchments[g].id);
  return out;
}

namespace {

Dataset obtain_dataset(const RunConfig& cfg) {
  if (cfg.data.synth)
    return generate_dataset(cfg.data.synth->n_catchments,
                            cfg.data.synth->n_days, cfg.data.synth->seed);
  return load_dataset(cfg.data.path);
}

std::vector<std::string> series_name_union(const RunConfig& cfg) {
  std::vector<std::string> names = cfg.features;
  for (const auto& t : cfg.targets)
    if (std::find(names.begin(), names.end(), t) == names.end())
      names.push_back(t);
  return names;
}

Dataset impute_all(Dataset d, const std::vector<std::string>& series_names) {
  if (d.static_attrs.missing.any()) d = impute_static_means(std::move(d));
  for (const auto& name : series_names) {
    const std::size_t fi = d.series.feature_index(name);
    if (d.series.missing[fi].any()) d = impute_series_mean(std::move(d), name);
  }
  return d;
}

SplitAssignment make_split(const RunConfig& cfg, const Dataset& d,
                           std::uint64_t split_seed) {
  if (cfg.split.mode == SplitMode::location)
    return split_by_location(d.n_catchments(), cfg.split.ratio, split_seed);
  return split_by_time(d.n_days(), cfg.split.ratio);
}

// Fits the series transforms and static pipeline on the training partition.
PipelineState fit_pipeline(const RunConfig& cfg, const Dataset& d,
                           const SplitAssignment& split) {
  PipelineState pipe;
  pipe.features = cfg.features;
  pipe.targets = cfg.targets;
  pipe.include_static = cfg.include_static;
  pipe.use_pca = cfg.use_pca;
  pipe.encoding = EncodingConfig{cfg.encoding_tier, cfg.include_static};

  const bool location = cfg.split.mode == SplitMode::location;
  const auto& train = split.train_indices;

  for (const auto& name : series_name_union(cfg)) {
    const std::size_t fi = d.series.feature_index(name);
    const bool cube = cfg.transform == TransformKind::minmax_cuberoot &&
                      (name == "precipitation" || name == "streamflow");
    std::vector<double> values;
    if (location) {
      values.reserve(d.n_days() * train.size());
      for (std::size_t t = 0; t < d.n_days(); ++t)
        for (const std::size_t g : train)
          values.push_back(d.series.values[fi](t, g));
    } else {
      values.reserve(train.size() * d.n_catchments());
      for (const std::size_t t : train)
        for (std::size_t g = 0; g < d.n_catchments(); ++g)
          values.push_back(d.series.values[fi](t, g));
    }
    if (cube)
      for (double& v : values) v = signed_cube_root(v);
    TargetTransform tf;
    tf.scaler = fit_min_max(values);
    tf.cube_root = cube;
    if (tf.scaler.degenerate)
      std::cerr << "warning: series '" << name
                << "' is constant on the training partition\n";
    pipe.series_names.push_back(name);
    pipe.series_transforms.push_back(tf);
  }

  if (cfg.include_static) {
    pipe.static_attribute_names = d.static_attrs.attribute_names;
    std::vector<std::size_t> fit_rows;
    if (location) {
      fit_rows = train;
    } else {
      fit_rows.resize(d.n_catchments());
      for (std::size_t g = 0; g < d.n_catchments(); ++g) fit_rows[g] = g;
    }
    const Matrix rows = gather_static_rows(d, pipe.static_attribute_names, fit_rows);
    if (cfg.use_pca) {
      pipe.standardizer =
          fit_standardizer(rows, pipe.static_attribute_names);
      for (const auto& dropped : pipe.standardizer.dropped_names)
        std::cerr << "warning: dropping zero-variance static attribute '"
                  << dropped << "' before PCA\n";
      pipe.pca = fit_pca(apply_standardizer(pipe.standardizer, rows),
                         cfg.pca_threshold);
      for (std::size_t k = 0; k < pipe.pca.k; ++k)
        pipe.static_channel_names.push_back("pc_" + std::to_string(k + 1));
    } else {
      for (std::size_t a = 0; a < rows.cols(); ++a) {
        std::vector<double> column(rows.rows());
        for (std::size_t g = 0; g < rows.rows(); ++g) column[g] = rows(g, a);
        pipe.static_scalers.push_back(fit_min_max(column));
      }
      pipe.static_channel_names = pipe.static_attribute_names;
    }
  }
  return pipe;
}

struct SplitViews {
  AssembledData train;
  AssembledData val;
};

SplitViews assemble_split(const RunConfig& cfg, const Dataset& d,
                          const PipelineState& pipe, const EncodingSet& enc,
                          const SplitAssignment& split) {
  SplitViews views;
  if (cfg.split.mode == SplitMode::location) {
    views.train = assemble(d, pipe, enc, split.train_indices, 0, d.n_days());
    views.val = assemble(d, pipe, enc, split.val_indices, 0, d.n_days());
  } else {
    std::vector<std::size_t> all(d.n_catchments());
    for (std::size_t g = 0; g < all.size(); ++g) all[g] = g;
    const std::size_t n_train = split.train_indices.size();
    views.train = assemble(d, pipe, enc, all, 0, n_train);
    views.val = assemble(d, pipe, enc, all, n_train, d.n_days());
  }
  return views;
}

std::vector<TargetTransform> target_transforms(const PipelineState& pipe) {
  std::vector<TargetTransform> out;
  for (const auto& name : pipe.targets) out.push_back(pipe.transform_for(name));
  return out;
}

}  // namespace

void write_losses_csv(const LossHistory& history, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write losses: " + path.string());
  out << "epoch,train_rmse,val_rmse,successful\n";
  for (const EpochRecord& rec : history) {
    out << rec.epoch << ',' << format_double(rec.train_rmse) << ','
        << format_double(rec.val_rmse) << ',' << (rec.successful ? 1 : 0)
        << '\n';
  }
}

RunArtifacts run_training(const RunConfig& cfg, const fs::path& out_dir,
                          bool physical_rmse) {
  RunConfig resolved = cfg;
  resolved.split.seed = cfg.split.seed.value_or(cfg.seed);

  Dataset d = impute_all(obtain_dataset(cfg), series_name_union(cfg));
  const SplitAssignment split = make_split(cfg, d, *resolved.split.seed);
  const PipelineState pipe = fit_pipeline(resolved, d, split);
  const EncodingSet enc = build_encoding_set(pipe.encoding, d.n_days(),
                                             d.n_catchments());
  const SplitViews views = assemble_split(resolved, d, pipe, enc, split);

  Rng master(resolved.seed);
  Rng init_rng = master.child(0);
  Rng dropout_rng = master.child(1);
  ModelShape shape{views.train.n_inputs(), resolved.encoder_size,
                   resolved.hidden_size, views.train.target_names.size(),
                   resolved.dropout};
  ModelParams params = init_params(shape, init_rng);

  TrainConfig train_cfg;
  train_cfg.target_successful_epochs = resolved.successful_epochs;
  train_cfg.learning_rate = resolved.lr;
  train_cfg.l_seq = resolved.l_seq;
  train_cfg.max_epochs = resolved.max_epochs;
  train_cfg.on_epoch = [](const EpochRecord& rec) {
    std::cerr << "epoch " << rec.epoch << " train_rmse=" << rec.train_rmse
              << " val_rmse=" << rec.val_rmse
              << (rec.successful ? " *" : "") << "\n";
  };

  TrainResult result =
      train(train_cfg, views.train, views.val, std::move(params), dropout_rng);

  fs::create_directories(out_dir);
  write_losses_csv(result.history, out_dir / "losses.csv");

  const auto transforms = target_transforms(pipe);
  RunArtifacts artifacts;
  artifacts.run_dir = out_dir;
  artifacts.history = result.history;
  artifacts.train_metrics = evaluate(result.params, views.train,
                                     resolved.l_seq, transforms, "train");
  artifacts.val_metrics =
      evaluate(result.params, views.val, resolved.l_seq, transforms, "val");
  write_metrics_csv({artifacts.train_metrics, artifacts.val_metrics},
                    out_dir / "metrics.csv", physical_rmse);

  nlohmann::json extra;
  extra["config"] = to_json(resolved);
  extra["pipeline"] = to_json(pipe);
  extra["split"] = {
      {"mode", resolved.split.mode == SplitMode::location ? "location" : "time"},
      {"ratio", resolved.split.ratio},
      {"seed", *resolved.split.seed}};
  save_checkpoint(result.params, out_dir / "checkpoint.json", extra);

  {
    std::ofstream out(out_dir / "resolved-config.json");
    out << to_json(resolved).dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "preprocess.json");
    out << to_json(pipe).dump(2) << '\n';
  }
  return artifacts;
}

void run_matrix(const RunConfig& base, const fs::path& out_dir,
                bool physical_rmse) {
  fs::create_directories(out_dir);
  std::ofstream summary(out_dir / "matrix-summary.csv");
  if (!summary)
    throw IngestionError("cannot write matrix summary under " +
                         out_dir.string());
  summary << "run,encoding_tier,include_static,epochs,final_train_rmse,"
             "final_val_rmse,val_rmse_total,val_nnse_mean\n";

  for (int tier = 1; tier <= 4; ++tier) {
    for (const bool with_static : {false, true}) {
      RunConfig cfg = base;
      cfg.encoding_tier = tier;
      cfg.include_static = with_static;
      const std::string name =
          "tier" + std::to_string(tier) + (with_static ? "_static" : "_nostatic");
      std::cerr << "matrix run " << name << "\n";
      const RunArtifacts art = run_training(cfg, out_dir / name, physical_rmse);

      double nnse_sum = 0.0;
      for (const auto& row : art.val_metrics.targets) nnse_sum += row.nnse_mean;
      const double nnse_mean =
          art.val_metrics.targets.empty()
              ? 0.0
              : nnse_sum / static_cast<double>(art.val_metrics.targets.size());
      summary << name << ',' << tier << ',' << (with_static ? 1 : 0) << ','
              << art.history.size() << ',';
      if (art.history.empty())
        summary << ",";
      else
        summary << format_double(art.history.back().train_rmse) << ','
                << format_double(art.history.back().val_rmse);
      summary << ',' << format_double(art.val_metrics.total_rmse) << ','
              << format_double(nnse_mean) << '\n';
    }
  }
}

void cmd_synth(const SynthSpec& spec, const fs::path& out_dir) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir))
    throw DataError("refusing to overwrite non-empty directory: " +
                    out_dir.string());
  const Dataset d = generate_dataset(spec.n_catchments, spec.n_days, spec.seed);
  export_dataset(d, out_dir);
  std::cout << "wrote " << d.n_catchments() << " catchments x " << d.n_days()
            << " days to " << out_dir.string() << "\n";
}

void cmd_ingest(const fs::path& data_dir, bool validate) {
  const Dataset d = load_dataset(data_dir);
  std::cout << "catchments: " << d.n_catchments() << "\n"
            << "days: " << d.n_days() << " starting "
            << d.series.start_date.to_string() << "\n"
            << "features:";
  for (const auto& f : d.series.feature_names) std::cout << ' ' << f;
  std::cout << "\n";
  if (validate) {
    std::size_t missing_static = d.static_attrs.missing.count();
    std::cout << "missing static cells: " << missing_static << "\n";
    for (std::size_t fi = 0; fi < d.series.feature_names.size(); ++fi)
      std::cout << "missing " << d.series.feature_names[fi]
                << " cells: " << d.series.missing[fi].count() << "\n";
    std::cout << "validation passed\n";
  }
}

void cmd_eval(const fs::path& checkpoint, const fs::path& data_dir,
              const fs::path& out_dir,
              const std::optional<SplitSpec>& split_override,
              bool physical_rmse) {
  nlohmann::json extra;
  const ModelParams params = load_checkpoint(checkpoint, &extra);
  if (!extra.contains("pipeline") || !extra.contains("config"))
    throw FormatError("checkpoint lacks the embedded pipeline state");
  const PipelineState pipe = pipeline_from_json(extra.at("pipeline"));
  const RunConfig cfg = run_config_from_json(extra.at("config"));

  SplitSpec split_spec = cfg.split;
  if (split_override) split_spec = *split_override;

  RunConfig eval_cfg = cfg;
  eval_cfg.split = split_spec;

  Dataset d = impute_all(load_dataset(data_dir), pipe.series_names);
  const std::uint64_t split_seed = split_spec.seed.value_or(cfg.seed);
  const SplitAssignment split = make_split(eval_cfg, d, split_seed);
  const EncodingSet enc =
      build_encoding_set(pipe.encoding, d.n_days(), d.n_catchments());
  const SplitViews views = assemble_split(eval_cfg, d, pipe, enc, split);
  if (views.train.n_inputs() != params.n_inputs())
    throw ShapeError("dataset assembles to " +
                     std::to_string(views.train.n_inputs()) +
                     " input properties but the checkpoint expects " +
                     std::to_string(params.n_inputs()));

  const auto transforms = target_transforms(pipe);
  const MetricsReport train_report =
      evaluate(params, views.train, cfg.l_seq, transforms, "train");
  const MetricsReport val_report =
      evaluate(params, views.val, cfg.l_seq, transforms, "val");
  fs::create_directories(out_dir);
  write_metrics_csv({train_report, val_report}, out_dir / "metrics.csv",
                    physical_rmse);
  std::cout << "val total rmse: " << format_double(val_report.total_rmse)
            << "\n";
}

void cmd_compare(const fs::path& series_a, const fs::path& series_b,
                 const fs::path& out_csv) {
  const SeriesFrame a = load_series_csv(series_a);
  const SeriesFrame b = load_series_csv(series_b);

  // Date overlap.
  const Date a_end = a.dates.back();
  const Date b_end = b.dates.back();
  const Date lo = std::max(a.dates.front(), b.dates.front());
  const Date hi = std::min(a_end, b_end);
  if (hi < lo)
    throw AlignmentError("series files have no overlapping dates");
  const std::size_t a_off =
      static_cast<std::size_t>((lo.day - a.dates.front().day).count());
  const std::size_t b_off =
      static_cast<std::size_t>((lo.day - b.dates.front().day).count());
  const std::size_t n_days =
      static_cast<std::size_t>((hi.day - lo.day).count()) + 1;

  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> common;
  for (std::size_t ca = 0; ca < a.gauge_ids.size(); ++ca) {
    for (std::size_t cb = 0; cb < b.gauge_ids.size(); ++cb) {
      if (a.gauge_ids[ca] == b.gauge_ids[cb]) {
        common.push_back({a.gauge_ids[ca], {ca, cb}});
        break;
      }
    }
  }
  if (common.empty())
    throw AlignmentError("series files share no gauge columns");

  std::ofstream out(out_csv);
  if (!out) throw IngestionError("cannot write " + out_csv.string());
  out << "gauge_id,pearson_r\n";
  double sum = 0.0;
  for (const auto& [id, cols] : common) {
    std::vector<double> va, vb;
    va.reserve(n_days);
    vb.reserve(n_days);
    for (std::size_t t = 0; t < n_days; ++t) {
      if (a.missing(a_off + t, cols.first) || b.missing(b_off + t, cols.second))
        continue;
      va.push_back(a.values(a_off + t, cols.first));
      vb.push_back(b.values(b_off + t, cols.second));
    }
    const double r = pearson_correlation(va, vb);
    sum += r;
    out << id << ',' << format_double(r) << '\n';
  }
  out << "MEAN," << format_double(sum / static_cast<double>(common.size()))
      << '\n';
}

}  // namespace hydro
