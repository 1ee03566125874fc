// preprocess.hpp - Feature transforms (min-max, signed cube root), PCA of the
// static attribute table at an explained-variance threshold, and train/
// validation splitting by location or time. Fitted parameters are immutable
// and serialize to JSON so runs stay auditable and resumable.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hydro/numerics.hpp"

namespace hydro {

struct ScalerParams {
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;  // max == min; apply maps everything to 0
};

ScalerParams fit_min_max(std::span<const double> train_values);
ScalerParams fit_min_max(const Matrix& train_values);

double apply_min_max(double x, const ScalerParams& p);
double invert_min_max(double y, const ScalerParams& p);

// y = sign(x) * |x|^(1/3); cube() is its exact inverse.
double signed_cube_root(double x);
double cube(double y);

// Column-wise z-scoring used ahead of PCA. Zero-variance columns are dropped
// (their indices recorded) since they carry no information and would divide
// by zero.
struct Standardizer {
  std::vector<double> mean;     // per kept column
  std::vector<double> stddev;   // per kept column, population std
  std::vector<std::size_t> kept_columns;  // indices into the original table
  std::vector<std::string> dropped_names;
};

Standardizer fit_standardizer(const Matrix& values,
                              const std::vector<std::string>& column_names);
Matrix apply_standardizer(const Standardizer& s, const Matrix& rows);

struct PcaModel {
  std::vector<double> mean;  // column means of the fitted (standardized) table
  Matrix components;         // n_attributes x k, orthonormal columns
  std::vector<double> explained_variance_ratio;  // k entries, descending
  std::size_t k = 0;
};

// Principal components of the (already standardized) table. k is the
// smallest count whose cumulative explained variance reaches the threshold.
PcaModel fit_pca(const Matrix& values, double threshold);

// Projects rows: (rows - mean) * components -> n_rows x k scores.
Matrix apply_pca(const PcaModel& m, const Matrix& rows);

enum class SplitMode { location, time };

struct SplitAssignment {
  SplitMode mode = SplitMode::location;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
  std::uint64_t seed = 0;
};

// Seeded uniform shuffle of catchment indices; the first ceil(ratio*n) go to
// training.
SplitAssignment split_by_location(std::size_t n_catchments, double ratio,
                                  std::uint64_t seed);

// Contiguous prefix of ceil(ratio*n) days to training, suffix to validation.
SplitAssignment split_by_time(std::size_t n_days, double ratio);

nlohmann::json to_json(const ScalerParams& p);
ScalerParams scaler_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PcaModel& m);
PcaModel pca_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace hydro
