// eval.hpp - RMSE, Nash-Sutcliffe efficiency, and its normalization
// NNSE = 1/(2 - NSE), computed per gauge and averaged. evaluate() sweeps a
// trained model over every valid horizon-1 window of a split and produces a
// structured report per target.
//
// Metrics are computed on the transformed/scaled values the model was
// trained on (the scale of the published tables); physical-unit RMSE via the
// inverse transforms is carried alongside and emitted behind a flag.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hydro/model.hpp"
#include "hydro/preprocess.hpp"

namespace hydro {

struct GaugeSeriesPair {
  std::vector<double> observed;
  std::vector<double> modeled;
  std::string gauge_id;
};

double rmse(std::span<const double> pred, std::span<const double> obs);

// 1 - sum((obs - model)^2) / sum((obs - mean_obs)^2). Requires nonzero
// observed variance.
double nse(const GaugeSeriesPair& pair);

// 1/(2 - NSE): maps (-inf, 1] onto (0, 1], 0.5 at the mean predictor.
double nnse(const GaugeSeriesPair& pair);

// Per-target scaling back to physical units.
struct TargetTransform {
  ScalerParams scaler;
  bool cube_root = false;
};

double to_physical(double scaled, const TargetTransform& t);

struct GaugeMetrics {
  std::string gauge_id;
  double rmse = 0.0;
  double rmse_physical = 0.0;
  double nse = 0.0;
  double nnse = 0.0;
  double nse_physical = 0.0;
  double nnse_physical = 0.0;
  bool excluded = false;  // zero observed variance; left out of the means
};

struct TargetSplitMetrics {
  std::string target;
  std::string split;
  double rmse = 0.0;           // pooled over gauges and windows, scaled
  double rmse_physical = 0.0;  // pooled, inverse-transformed
  double nse_mean = 0.0;       // over included gauges
  double nnse_mean = 0.0;
  double nnse_mean_physical = 0.0;
  std::vector<GaugeMetrics> detail;
};

struct MetricsReport {
  std::string split;
  std::vector<TargetSplitMetrics> targets;
  double total_rmse = 0.0;  // pooled over every target, scaled
  double total_rmse_physical = 0.0;
};

// Pure aggregation over already-produced prediction series. modeled and
// observed are (n_windows x n_gauges) per target, on the scaled axis.
MetricsReport evaluate_series(const std::vector<Matrix>& modeled,
                              const std::vector<Matrix>& observed,
                              const std::vector<std::string>& target_names,
                              const std::vector<std::string>& gauge_ids,
                              const std::vector<TargetTransform>& transforms,
                              const std::string& split_label);

// Horizon-1 predictions over all valid windows of the split, then
// evaluate_series.
MetricsReport evaluate(const ModelParams& params, const AssembledData& data,
                       std::size_t l_seq,
                       const std::vector<TargetTransform>& transforms,
                       const std::string& split_label);

// metrics.csv: target,split,gauge_id,rmse,nse,nnse with gauge_id "ALL" for
// aggregates and a TOTAL row per split. physical_rmse appends a
// rmse_physical column.
void write_metrics_csv(const std::vector<MetricsReport>& reports,
                       const std::filesystem::path& path,
                       bool physical_rmse = false);

}  // namespace hydro
