#include "hydro/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace hydro {

namespace fs = std::filesystem;

Date Date::parse(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(iso);
  in >> y >> dash1 >> m >> dash2 >> d;
  // operator>> on unsigned eats a leading '-', so re-check the raw text.
  if (!in || dash1 != '-' || dash2 != '-' || iso.size() != 10 ||
      iso[4] != '-' || iso[7] != '-') {
    throw SchemaError("invalid ISO date: '" + iso + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw SchemaError("invalid calendar date: '" + iso + "'");
  return Date{std::chrono::sys_days{ymd}};
}

std::string Date::to_string() const {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

bool Mask::any() const {
  for (auto b : bits_)
    if (b) return true;
  return false;
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto b : bits_) n += b;
  return n;
}

std::size_t SeriesTensor::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return i;
  throw LookupError("unknown series feature: '" + name + "'");
}

void Dataset::validate() const {
  const std::size_t n = catchments.size();
  if (static_attrs.values.rows() != n)
    throw ContractError("static table row count does not match catchments");
  for (const Matrix& m : series.values) {
    if (m.cols() != n || m.rows() != series.n_days)
      throw ContractError("series tensor shape mismatch");
  }
  if (series.values.size() != series.feature_names.size() ||
      series.missing.size() != series.feature_names.size())
    throw ContractError("series feature bookkeeping mismatch");
  std::unordered_set<std::string> seen;
  for (const Catchment& c : catchments) {
    if (!seen.insert(c.id).second)
      throw SchemaError("duplicate catchment id: '" + c.id + "'");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field += ch;
    }
  }
  fields.push_back(field);
  return fields;
}

bool is_missing_literal(const std::string& s) {
  if (s.empty()) return true;
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower == "nan" || lower == "na";
}

const std::unordered_map<std::string, int>& month_name_table() {
  static const std::unordered_map<std::string, int> table = {
      {"jan", 1},  {"january", 1},   {"feb", 2},  {"february", 2},
      {"mar", 3},  {"march", 3},     {"apr", 4},  {"april", 4},
      {"may", 5},  {"jun", 6},       {"june", 6}, {"jul", 7},
      {"july", 7}, {"aug", 8},       {"august", 8},
      {"sep", 9},  {"september", 9}, {"oct", 10}, {"october", 10},
      {"nov", 11}, {"november", 11}, {"dec", 12}, {"december", 12}};
  return table;
}

// Parses a cell into (value, missing). Month names become their ordinal
// encoding, the only categorical form these archives carry.
std::pair<double, bool> parse_cell(const std::string& raw,
                                   const std::string& context) {
  if (is_missing_literal(raw)) return {0.0, true};
  std::string lower;
  for (char c : raw) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto& months = month_name_table();
  if (auto it = months.find(lower); it != months.end())
    return {encode_month_ordinal(it->second), false};
  double value = 0.0;
  const char* first = raw.data();
  const char* last = raw.data() + raw.size();
  while (first != last && *first == ' ') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw SchemaError("unparseable numeric cell '" + raw + "' in " + context);
  return {value, false};
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open file: " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

SeriesFrame load_series_csv(const fs::path& file) {
  const auto lines = read_lines(file);
  if (lines.size() < 2)
    throw SchemaError("series file has no data rows: " + file.string());
  const auto header = split_csv_line(lines[0]);
  if (header.empty() || header[0] != "date")
    throw SchemaError("series file must start with a date column: " +
                      file.string());

  SeriesFrame frame;
  frame.gauge_ids.assign(header.begin() + 1, header.end());
  {
    std::unordered_set<std::string> seen;
    for (const auto& id : frame.gauge_ids)
      if (!seen.insert(id).second)
        throw SchemaError("duplicate gauge column '" + id + "' in " +
                          file.string());
  }

  const std::size_t n_days = lines.size() - 1;
  const std::size_t n_gauges = frame.gauge_ids.size();
  frame.values = Matrix(n_days, n_gauges);
  frame.missing = Mask(n_days, n_gauges);
  frame.dates.reserve(n_days);
  for (std::size_t r = 0; r < n_days; ++r) {
    const auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != header.size())
      throw SchemaError("ragged row " + std::to_string(r + 2) + " in " +
                        file.string());
    const Date date = Date::parse(fields[0]);
    if (!frame.dates.empty() && date != frame.dates.back().plus_days(1))
      throw AlignmentError("date gap or disorder at row " +
                           std::to_string(r + 2) + " in " + file.string() +
                           " (" + fields[0] + " after " +
                           frame.dates.back().to_string() + ")");
    frame.dates.push_back(date);
    for (std::size_t k = 0; k < n_gauges; ++k) {
      const auto [value, miss] =
          parse_cell(fields[k + 1], file.filename().string() + " row " +
                                        std::to_string(r + 2));
      frame.values(r, k) = value;
      frame.missing.set(r, k, miss);
    }
  }
  return frame;
}

Dataset load_dataset(const fs::path& root,
                     const std::vector<std::string>& expected_features) {
  const fs::path static_path = root / "static.csv";
  if (!fs::exists(static_path))
    throw IngestionError("missing file: " + static_path.string());

  Dataset d;
  const std::string source = root.filename().empty()
                                 ? root.parent_path().filename().string()
                                 : root.filename().string();

  // Static table.
  {
    const auto lines = read_lines(static_path);
    if (lines.empty()) throw SchemaError("empty static.csv");
    auto header = split_csv_line(lines[0]);
    if (header.empty() || header[0] != "gauge_id")
      throw SchemaError("static.csv must start with a gauge_id column");
    d.static_attrs.attribute_names.assign(header.begin() + 1, header.end());
    const std::size_t n_attrs = d.static_attrs.attribute_names.size();
    const std::size_t n_rows = lines.size() - 1;
    d.static_attrs.values = Matrix(n_rows, n_attrs);
    d.static_attrs.missing = Mask(n_rows, n_attrs);
    std::unordered_set<std::string> seen_ids;
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto fields = split_csv_line(lines[r + 1]);
      if (fields.size() != header.size())
        throw SchemaError("static.csv row " + std::to_string(r + 2) +
                          " has " + std::to_string(fields.size()) +
                          " fields, expected " + std::to_string(header.size()));
      const std::string& id = fields[0];
      if (id.empty()) throw SchemaError("empty gauge_id in static.csv");
      if (!seen_ids.insert(id).second)
        throw SchemaError("duplicate catchment id: '" + id + "'");
      d.catchments.push_back(Catchment{id, source, r});
      for (std::size_t c = 0; c < n_attrs; ++c) {
        const auto [value, missing] =
            parse_cell(fields[c + 1], "static.csv row " + std::to_string(r + 2));
        d.static_attrs.values(r, c) = value;
        d.static_attrs.missing.set(r, c, missing);
      }
    }
  }

  // Series files, ordered lexicographically by feature name.
  const fs::path series_dir = root / "series";
  if (!fs::exists(series_dir))
    throw IngestionError("missing directory: " + series_dir.string());
  std::vector<std::string> features;
  for (const auto& entry : fs::directory_iterator(series_dir)) {
    if (entry.path().extension() == ".csv")
      features.push_back(entry.path().stem().string());
  }
  std::sort(features.begin(), features.end());
  if (features.empty())
    throw IngestionError("no series files under " + series_dir.string());
  if (!expected_features.empty()) {
    std::vector<std::string> expected = expected_features;
    std::sort(expected.begin(), expected.end());
    if (expected != features) {
      std::string msg = "series features do not match the manifest; found {";
      for (const auto& f : features) msg += f + ",";
      msg += "}";
      throw SchemaError(msg);
    }
  }

  d.series.feature_names = features;
  std::vector<Date> reference_dates;
  const std::size_t n = d.catchments.size();

  for (std::size_t fi = 0; fi < features.size(); ++fi) {
    const fs::path path = series_dir / (features[fi] + ".csv");
    const SeriesFrame frame = load_series_csv(path);

    // Columns may arrive in any order but the id set must match static.csv.
    std::vector<std::size_t> column_for_catchment(n);
    {
      std::unordered_map<std::string, std::size_t> position;
      for (std::size_t c = 0; c < frame.gauge_ids.size(); ++c)
        position.emplace(frame.gauge_ids[c], c);
      if (position.size() != n)
        throw SchemaError("series file " + path.string() + " has " +
                          std::to_string(position.size()) +
                          " gauge columns, expected " + std::to_string(n));
      for (std::size_t k = 0; k < n; ++k) {
        auto it = position.find(d.catchments[k].id);
        if (it == position.end())
          throw SchemaError("series file " + path.string() +
                            " lacks gauge column '" + d.catchments[k].id + "'");
        column_for_catchment[k] = it->second;
      }
    }

    const std::size_t n_days = frame.dates.size();
    Matrix values(n_days, n);
    Mask missing(n_days, n);
    for (std::size_t r = 0; r < n_days; ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        values(r, k) = frame.values(r, column_for_catchment[k]);
        missing.set(r, k, frame.missing(r, column_for_catchment[k]));
      }
    }

    if (fi == 0) {
      reference_dates = frame.dates;
      d.series.n_days = n_days;
      d.series.start_date = frame.dates.front();
    } else if (frame.dates.size() != reference_dates.size() ||
               frame.dates.front() != reference_dates.front()) {
      throw AlignmentError("feature '" + features[fi] +
                           "' calendar disagrees with '" + features[0] + "'");
    }
    d.series.values.push_back(std::move(values));
    d.series.missing.push_back(std::move(missing));
  }

  d.validate();
  return d;
}

void export_dataset(const Dataset& d, const fs::path& root) {
  fs::create_directories(root / "series");
  {
    std::ofstream out(root / "static.csv");
    if (!out) throw IngestionError("cannot write " + (root / "static.csv").string());
    out << "gauge_id";
    for (const auto& name : d.static_attrs.attribute_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < d.n_catchments(); ++r) {
      out << d.catchments[r].id;
      for (std::size_t c = 0; c < d.static_attrs.attribute_names.size(); ++c) {
        out << ',';
        if (!d.static_attrs.missing(r, c))
          out << format_double(d.static_attrs.values(r, c));
      }
      out << '\n';
    }
  }
  for (std::size_t fi = 0; fi < d.series.feature_names.size(); ++fi) {
    const fs::path path = root / "series" / (d.series.feature_names[fi] + ".csv");
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path.string());
    out << "date";
    for (const auto& c : d.catchments) out << ',' << c.id;
    out << '\n';
    const Matrix& values = d.series.values[fi];
    const Mask& missing = d.series.missing[fi];
    for (std::size_t r = 0; r < d.series.n_days; ++r) {
      out << d.series.start_date.plus_days(static_cast<long>(r)).to_string();
      for (std::size_t k = 0; k < d.n_catchments(); ++k) {
        out << ',';
        if (!missing(r, k)) out << format_double(values(r, k));
      }
      out << '\n';
    }
  }
}

Dataset intersect_static(const std::vector<Dataset>& datasets) {
  if (datasets.size() < 2)
    throw ContractError("intersect_static needs at least two datasets");

  const auto& first = datasets.front();
  for (const Dataset& d : datasets) {
    if (d.series.feature_names != first.series.feature_names)
      throw HarmonizationError("series feature sets differ between archives");
    if (d.series.n_days != first.series.n_days ||
        d.series.start_date != first.series.start_date)
      throw AlignmentError("archive calendars differ; cannot concatenate");
  }

  // Exact-name intersection, sorted lexicographically.
  std::set<std::string> shared(first.static_attrs.attribute_names.begin(),
                               first.static_attrs.attribute_names.end());
  for (std::size_t i = 1; i < datasets.size(); ++i) {
    std::set<std::string> names(datasets[i].static_attrs.attribute_names.begin(),
                                datasets[i].static_attrs.attribute_names.end());
    std::set<std::string> kept;
    std::set_intersection(shared.begin(), shared.end(), names.begin(),
                          names.end(), std::inserter(kept, kept.begin()));
    shared = std::move(kept);
  }
  if (shared.empty())
    throw HarmonizationError("no static attributes shared across archives");

  Dataset out;
  out.static_attrs.attribute_names.assign(shared.begin(), shared.end());
  const std::size_t n_attrs = out.static_attrs.attribute_names.size();

  std::size_t total = 0;
  for (const Dataset& d : datasets) total += d.n_catchments();
  out.static_attrs.values = Matrix(total, n_attrs);
  out.static_attrs.missing = Mask(total, n_attrs);

  out.series.feature_names = first.series.feature_names;
  out.series.n_days = first.series.n_days;
  out.series.start_date = first.series.start_date;
  for (std::size_t fi = 0; fi < first.series.feature_names.size(); ++fi) {
    out.series.values.emplace_back(first.series.n_days, total);
    out.series.missing.emplace_back(first.series.n_days, total);
  }

  std::size_t offset = 0;
  for (const Dataset& d : datasets) {
    std::vector<std::size_t> attr_src(n_attrs);
    for (std::size_t a = 0; a < n_attrs; ++a) {
      const auto& names = d.static_attrs.attribute_names;
      const auto it = std::find(names.begin(), names.end(),
                                out.static_attrs.attribute_names[a]);
      attr_src[a] = static_cast<std::size_t>(it - names.begin());
    }
    for (std::size_t r = 0; r < d.n_catchments(); ++r) {
      Catchment c = d.catchments[r];
      c.index = offset + r;
      out.catchments.push_back(std::move(c));
      for (std::size_t a = 0; a < n_attrs; ++a) {
        out.static_attrs.values(offset + r, a) =
            d.static_attrs.values(r, attr_src[a]);
        out.static_attrs.missing.set(offset + r, a,
                                     d.static_attrs.missing(r, attr_src[a]));
      }
    }
    for (std::size_t fi = 0; fi < out.series.feature_names.size(); ++fi) {
      const std::size_t src_fi =
          d.series.feature_index(out.series.feature_names[fi]);
      for (std::size_t t = 0; t < out.series.n_days; ++t) {
        for (std::size_t r = 0; r < d.n_catchments(); ++r) {
          out.series.values[fi](t, offset + r) = d.series.values[src_fi](t, r);
          out.series.missing[fi].set(t, offset + r,
                                     d.series.missing[src_fi](t, r));
        }
      }
    }
    offset += d.n_catchments();
  }

  out.validate();
  return out;
}

Dataset impute_static_means(Dataset d) {
  const std::size_t rows = d.static_attrs.values.rows();
  const std::size_t cols = d.static_attrs.values.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    std::size_t observed = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!d.static_attrs.missing(r, c)) {
        sum += d.static_attrs.values(r, c);
        ++observed;
      }
    }
    if (observed == 0)
      throw ImputationError("static attribute '" +
                            d.static_attrs.attribute_names[c] +
                            "' has no observed values");
    const double mean = sum / static_cast<double>(observed);
    for (std::size_t r = 0; r < rows; ++r) {
      if (d.static_attrs.missing(r, c)) {
        d.static_attrs.values(r, c) = mean;
        d.static_attrs.missing.set(r, c, false);
      }
    }
  }
  return d;
}

Dataset impute_series_mean(Dataset d, const std::string& feature) {
  const std::size_t fi = d.series.feature_index(feature);
  Matrix& values = d.series.values[fi];
  Mask& missing = d.series.missing[fi];
  double sum = 0.0;
  std::size_t observed = 0;
  for (std::size_t t = 0; t < values.rows(); ++t) {
    for (std::size_t k = 0; k < values.cols(); ++k) {
      if (!missing(t, k)) {
        sum += values(t, k);
        ++observed;
      }
    }
  }
  if (observed == 0)
    throw ImputationError("series feature '" + feature +
                          "' has no observed values");
  const double mean = sum / static_cast<double>(observed);
  for (std::size_t t = 0; t < values.rows(); ++t) {
    for (std::size_t k = 0; k < values.cols(); ++k) {
      if (missing(t, k)) {
        values(t, k) = mean;
        missing.set(t, k, false);
      }
    }
  }
  return d;
}

double encode_month_ordinal(int month) {
  if (month < 1 || month > 12)
    throw DomainError("month out of range: " + std::to_string(month));
  return static_cast<double>(month - 1) / 11.0;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("pearson_correlation: length mismatch");
  if (a.size() < 2)
    throw ContractError("pearson_correlation: need at least two samples");
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0)
    throw DegenerateInputError("pearson_correlation: zero variance input");
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace hydro
