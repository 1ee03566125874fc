#include "hydro/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hydro {

ScalerParams fit_min_max(std::span<const double> train_values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : train_values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(lo <= hi))
    throw DegenerateInputError("fit_min_max: no finite values to fit");
  return ScalerParams{lo, hi, lo == hi};
}

ScalerParams fit_min_max(const Matrix& train_values) {
  return fit_min_max(std::span<const double>(train_values.values()));
}

double apply_min_max(double x, const ScalerParams& p) {
  if (p.degenerate) return 0.0;
  return (x - p.min) / (p.max - p.min);
}

double invert_min_max(double y, const ScalerParams& p) {
  if (p.degenerate) return p.min;
  return p.min + y * (p.max - p.min);
}

double signed_cube_root(double x) { return std::cbrt(x); }

double cube(double y) { return y * y * y; }

Standardizer fit_standardizer(const Matrix& values,
                              const std::vector<std::string>& column_names) {
  const std::size_t rows = values.rows();
  const std::size_t cols = values.cols();
  if (rows < 2)
    throw ContractError("fit_standardizer: need at least two rows");
  Standardizer s;
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += values(r, c);
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = values(r, c) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows);
    if (var == 0.0) {
      s.dropped_names.push_back(c < column_names.size() ? column_names[c]
                                                        : std::to_string(c));
      continue;
    }
    s.kept_columns.push_back(c);
    s.mean.push_back(mean);
    s.stddev.push_back(std::sqrt(var));
  }
  if (s.kept_columns.empty())
    throw DegenerateInputError("fit_standardizer: every column has zero variance");
  return s;
}

Matrix apply_standardizer(const Standardizer& s, const Matrix& rows) {
  Matrix out(rows.rows(), s.kept_columns.size());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t j = 0; j < s.kept_columns.size(); ++j) {
      out(r, j) = (rows(r, s.kept_columns[j]) - s.mean[j]) / s.stddev[j];
    }
  }
  return out;
}

PcaModel fit_pca(const Matrix& values, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw DomainError("fit_pca: threshold must be in (0,1]");
  const std::size_t rows = values.rows();
  const std::size_t cols = values.cols();
  if (rows < 2) throw ContractError("fit_pca: need at least two rows");

  PcaModel m;
  m.mean.resize(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) m.mean[c] += values(r, c);
    m.mean[c] /= static_cast<double>(rows);
  }

  // Sample covariance of the centered table.
  Matrix cov(cols, cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < cols; ++i) {
      const double di = values(r, i) - m.mean[i];
      for (std::size_t j = i; j < cols; ++j) {
        cov(i, j) += di * (values(r, j) - m.mean[j]);
      }
    }
  }
  const double denom = static_cast<double>(rows - 1);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = i; j < cols; ++j) {
      cov(i, j) /= denom;
      cov(j, i) = cov(i, j);
    }

  const EigenDecomposition eig = sym_eigen(cov);
  double total = 0.0;
  for (double ev : eig.eigenvalues) total += std::max(ev, 0.0);
  if (total <= 0.0)
    throw DegenerateInputError("fit_pca: table has zero total variance");

  std::size_t k = 0;
  double cum = 0.0;
  while (k < cols) {
    cum += std::max(eig.eigenvalues[k], 0.0) / total;
    ++k;
    if (cum >= threshold - 1e-12) break;
  }

  m.k = k;
  m.components = Matrix(cols, k);
  m.explained_variance_ratio.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    m.explained_variance_ratio[j] = std::max(eig.eigenvalues[j], 0.0) / total;
    for (std::size_t i = 0; i < cols; ++i)
      m.components(i, j) = eig.eigenvectors(i, j);
  }
  return m;
}

Matrix apply_pca(const PcaModel& m, const Matrix& rows) {
  if (rows.cols() != m.mean.size())
    throw ShapeError("apply_pca: expected " + std::to_string(m.mean.size()) +
                     " columns, got " + std::to_string(rows.cols()));
  Matrix centered(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c)
      centered(r, c) = rows(r, c) - m.mean[c];
  return matmul(centered, m.components);
}

namespace {

std::size_t ceil_ratio(std::size_t n, double ratio) {
  return static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n) - 1e-12));
}

}  // namespace

SplitAssignment split_by_location(std::size_t n_catchments, double ratio,
                                  std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw DomainError("split ratio must lie in (0,1)");
  if (n_catchments < 2)
    throw ContractError("split_by_location: need at least two catchments");
  std::vector<std::size_t> order(n_catchments);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = ceil_ratio(n_catchments, ratio);
  SplitAssignment split;
  split.mode = SplitMode::location;
  split.seed = seed;
  split.train_indices.assign(order.begin(), order.begin() + n_train);
  split.val_indices.assign(order.begin() + n_train, order.end());
  return split;
}

SplitAssignment split_by_time(std::size_t n_days, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw DomainError("split ratio must lie in (0,1)");
  if (n_days < 2) throw ContractError("split_by_time: need at least two days");
  const std::size_t n_train = ceil_ratio(n_days, ratio);
  SplitAssignment split;
  split.mode = SplitMode::time;
  split.seed = 0;
  split.train_indices.resize(n_train);
  std::iota(split.train_indices.begin(), split.train_indices.end(),
            std::size_t{0});
  split.val_indices.resize(n_days - n_train);
  std::iota(split.val_indices.begin(), split.val_indices.end(), n_train);
  return split;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != m.size())
    throw FormatError("matrix JSON has wrong value count");
  m.values() = values;
  return m;
}

nlohmann::json to_json(const ScalerParams& p) {
  return {{"min", p.min}, {"max", p.max}, {"degenerate", p.degenerate}};
}

ScalerParams scaler_from_json(const nlohmann::json& j) {
  return ScalerParams{j.at("min").get<double>(), j.at("max").get<double>(),
                      j.at("degenerate").get<bool>()};
}

nlohmann::json to_json(const PcaModel& m) {
  return {{"mean", m.mean},
          {"components", matrix_to_json(m.components)},
          {"explained_variance_ratio", m.explained_variance_ratio},
          {"k", m.k}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  m.mean = j.at("mean").get<std::vector<double>>();
  m.components = matrix_from_json(j.at("components"));
  m.explained_variance_ratio =
      j.at("explained_variance_ratio").get<std::vector<double>>();
  m.k = j.at("k").get<std::size_t>();
  return m;
}

nlohmann::json to_json(const Standardizer& s) {
  return {{"mean", s.mean},
          {"stddev", s.stddev},
          {"kept_columns", s.kept_columns},
          {"dropped_names", s.dropped_names}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
  s.kept_columns = j.at("kept_columns").get<std::vector<std::size_t>>();
  s.dropped_names = j.at("dropped_names").get<std::vector<std::string>>();
  return s;
}

}  // namespace hydro
