// dataset.hpp - Data model and ingestion for CAMELS-style archives: a static
// attribute table per catchment plus calendar-aligned daily series.
//
// On-disk layout (one directory per archive):
//   <root>/static.csv            first column gauge_id, one row per catchment
//   <root>/series/<feature>.csv  first column date (ISO-8601, contiguous
//                                daily), one column per gauge_id
// Missing values are empty cells or a NaN literal. Month names in static
// cells are converted with the ordinal month encoding.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hydro/numerics.hpp"

namespace hydro {

// Calendar date backed by std::chrono::sys_days.
struct Date {
  std::chrono::sys_days day{};

  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string to_string() const;
  Date plus_days(long n) const {
    return Date{day + std::chrono::days{n}};
  }
  auto operator<=>(const Date&) const = default;
};

// Row-major boolean grid used for missing-value masks.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const {
    return bits_[r * cols_ + c] != 0;
  }
  void set(std::size_t r, std::size_t c, bool value) {
    bits_[r * cols_ + c] = value ? 1 : 0;
  }
  bool any() const;
  std::size_t count() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct Catchment {
  std::string id;      // gauge identifier, unique within a Dataset
  std::string source;  // archive name
  std::size_t index;   // ordinal position within the Dataset
};

struct StaticTable {
  std::vector<std::string> attribute_names;
  Matrix values;  // n_catchments x n_attributes
  Mask missing;   // same shape
};

struct SeriesTensor {
  std::vector<std::string> feature_names;  // lexicographic order
  std::size_t n_days = 0;
  Date start_date{};
  std::vector<Matrix> values;  // per feature: n_days x n_catchments
  std::vector<Mask> missing;

  std::size_t feature_index(const std::string& name) const;  // LookupError
};

struct Dataset {
  std::vector<Catchment> catchments;
  StaticTable static_attrs;
  SeriesTensor series;

  std::size_t n_catchments() const { return catchments.size(); }
  std::size_t n_days() const { return series.n_days; }

  // Checks the cross-field invariants; throws ContractError on violation.
  void validate() const;
};

// One parsed series CSV, columns in file order.
struct SeriesFrame {
  std::vector<std::string> gauge_ids;
  std::vector<Date> dates;  // contiguous daily
  Matrix values;            // n_days x n_gauges
  Mask missing;
};

SeriesFrame load_series_csv(const std::filesystem::path& file);

// Reads the layout described above. When expected_features is non-empty the
// archive must contain exactly that feature set.
Dataset load_dataset(const std::filesystem::path& root,
                     const std::vector<std::string>& expected_features = {});

// Writes the identical layout; reloading gives bit-identical tensors.
void export_dataset(const Dataset& d, const std::filesystem::path& root);

// Concatenates catchments across archives, keeping exactly the static
// attributes every input shares (sorted lexicographically). Calendars and
// series feature sets must already agree.
Dataset intersect_static(const std::vector<Dataset>& datasets);

// Fills each missing static cell with the column mean over observed entries.
Dataset impute_static_means(Dataset d);

// Fills missing cells of one series feature with the global mean of all
// observed values of that feature across days and catchments.
Dataset impute_series_mean(Dataset d, const std::string& feature);

// Ordinal month encoding: Jan -> 0, Dec -> 1, evenly spaced.
double encode_month_ordinal(int month);

// Sample Pearson correlation; both inputs need length >= 2 and nonzero
// variance.
double pearson_correlation(std::span<const double> a, std::span<const double> b);

}  // namespace hydro
