#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "hydro/dataset.hpp"
#include "hydro/numerics.hpp"

using hydro::Dataset;
using hydro::Matrix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("hydro_test_" + tag + "_" +
                                        std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << content;
}

// 2 catchments, 10 days, 3 features.
void write_small_fixture(const fs::path& root) {
  write_file(root / "static.csv",
             "gauge_id,area,p_mean\n"
             "g1,10.5,2.25\n"
             "g2,7,3.5\n");
  for (const std::string feature : {"precipitation", "streamflow", "t_mean"}) {
    std::string body = "date,g1,g2\n";
    for (int day = 0; day < 10; ++day) {
      char line[64];
      std::snprintf(line, sizeof(line), "2000-01-%02d,%d.5,%d.25\n", day + 1,
                    day, day + 10);
      body += line;
    }
    write_file(root / "series" / (feature + ".csv"), body);
  }
}

Dataset tiny_dataset(std::vector<std::string> attrs, std::size_t n_catchments,
                     const std::string& prefix) {
  Dataset d;
  for (std::size_t i = 0; i < n_catchments; ++i)
    d.catchments.push_back({prefix + std::to_string(i), prefix, i});
  d.static_attrs.attribute_names = attrs;
  d.static_attrs.values = Matrix(n_catchments, attrs.size(), 1.0);
  d.static_attrs.missing = hydro::Mask(n_catchments, attrs.size());
  d.series.feature_names = {"precipitation"};
  d.series.n_days = 4;
  d.series.start_date = hydro::Date::parse("2001-06-01");
  d.series.values.emplace_back(4, n_catchments, 0.5);
  d.series.missing.emplace_back(4, n_catchments);
  return d;
}

}  // namespace

TEST_CASE("date parse and format round trip") {
  const auto d = hydro::Date::parse("1989-10-02");
  CHECK(d.to_string() == "1989-10-02");
  CHECK(d.plus_days(365).to_string() == "1990-10-02");
  CHECK_THROWS_AS(hydro::Date::parse("1989/10/02"), hydro::SchemaError);
  CHECK_THROWS_AS(hydro::Date::parse("1989-02-30"), hydro::SchemaError);
}

TEST_CASE("load_dataset reads the fixture layout") {
  TempDir dir("load");
  write_small_fixture(dir.path);
  const Dataset d = hydro::load_dataset(dir.path);
  CHECK(d.n_catchments() == 2);
  CHECK(d.n_days() == 10);
  CHECK(d.series.feature_names ==
        std::vector<std::string>{"precipitation", "streamflow", "t_mean"});
  CHECK(d.catchments[0].id == "g1");
  CHECK(d.static_attrs.values(1, 1) == doctest::Approx(3.5));
  CHECK(d.series.values[0](3, 0) == doctest::Approx(3.5));
  CHECK(d.series.start_date.to_string() == "2000-01-01");
}

TEST_CASE("load_dataset flags missing cells without filling them") {
  TempDir dir("missing");
  write_small_fixture(dir.path);
  write_file(dir.path / "series" / "streamflow.csv",
             "date,g1,g2\n"
             "2000-01-01,1,\n"
             "2000-01-02,3,NaN\n");
  write_file(dir.path / "series" / "precipitation.csv",
             "date,g1,g2\n"
             "2000-01-01,1,2\n"
             "2000-01-02,3,4\n");
  write_file(dir.path / "series" / "t_mean.csv",
             "date,g1,g2\n"
             "2000-01-01,1,2\n"
             "2000-01-02,3,4\n");
  const Dataset d = hydro::load_dataset(dir.path);
  const auto fi = d.series.feature_index("streamflow");
  CHECK(d.series.missing[fi](0, 1));
  CHECK(d.series.missing[fi](1, 1));
  CHECK_FALSE(d.series.missing[fi](0, 0));
}

TEST_CASE("load_dataset rejects a date gap") {
  TempDir dir("gap");
  write_small_fixture(dir.path);
  write_file(dir.path / "series" / "t_mean.csv",
             "date,g1,g2\n"
             "2000-01-01,1,2\n"
             "2000-01-03,3,4\n");  // gap
  CHECK_THROWS_AS(hydro::load_dataset(dir.path), hydro::AlignmentError);
}

TEST_CASE("load_dataset rejects misaligned feature calendars") {
  TempDir dir("misalign");
  write_small_fixture(dir.path);
  std::string body = "date,g1,g2\n";
  for (int day = 0; day < 10; ++day) {
    char line[64];
    std::snprintf(line, sizeof(line), "2000-02-%02d,1,2\n", day + 1);
    body += line;
  }
  write_file(dir.path / "series" / "t_mean.csv", body);
  CHECK_THROWS_AS(hydro::load_dataset(dir.path), hydro::AlignmentError);
}

TEST_CASE("load_dataset rejects duplicates and absent files") {
  TempDir dir("dup");
  write_small_fixture(dir.path);
  write_file(dir.path / "static.csv",
             "gauge_id,area,p_mean\n"
             "g1,10.5,2.25\n"
             "g1,7,3.5\n");
  CHECK_THROWS_AS(hydro::load_dataset(dir.path), hydro::SchemaError);

  TempDir dir2("absent");
  CHECK_THROWS_AS(hydro::load_dataset(dir2.path), hydro::IngestionError);
}

TEST_CASE("load_dataset honors an expected feature manifest") {
  TempDir dir("manifest");
  write_small_fixture(dir.path);
  CHECK_NOTHROW(hydro::load_dataset(
      dir.path, {"t_mean", "precipitation", "streamflow"}));
  CHECK_THROWS_AS(hydro::load_dataset(dir.path, {"precipitation"}),
                  hydro::SchemaError);
}

TEST_CASE("export then load is bit-identical") {
  TempDir dir("roundtrip");
  write_small_fixture(dir.path);
  Dataset d = hydro::load_dataset(dir.path);
  // Awkward but representable values must survive the text round trip.
  d.series.values[0](0, 0) = 0.1 + 0.2;
  d.series.values[0](5, 1) = -1.2345678901234567e-7;
  d.static_attrs.values(0, 0) = 1.0 / 3.0;
  // Missing cells must stay missing across the round trip.
  d.series.missing[1].set(4, 1, true);
  d.static_attrs.missing.set(1, 0, true);
  const fs::path out = dir.path / "exported";
  hydro::export_dataset(d, out);
  const Dataset back = hydro::load_dataset(out);
  for (std::size_t fi = 0; fi < d.series.values.size(); ++fi) {
    for (std::size_t t = 0; t < d.n_days(); ++t)
      for (std::size_t g = 0; g < d.n_catchments(); ++g) {
        CHECK(back.series.missing[fi](t, g) == d.series.missing[fi](t, g));
        if (!d.series.missing[fi](t, g))
          CHECK(back.series.values[fi](t, g) == d.series.values[fi](t, g));
      }
  }
  CHECK(back.static_attrs.missing(1, 0));
  CHECK(back.static_attrs.values(0, 0) == d.static_attrs.values(0, 0));
  CHECK(back.series.start_date == d.series.start_date);
}

TEST_CASE("intersect_static keeps the exact shared attribute set") {
  Dataset a = tiny_dataset({"a", "b", "c"}, 2, "A");
  Dataset b = tiny_dataset({"b", "c", "d"}, 3, "B");
  a.static_attrs.values(0, 1) = 42.0;  // attribute b of A0
  const Dataset merged = hydro::intersect_static({a, b});
  CHECK(merged.static_attrs.attribute_names ==
        std::vector<std::string>{"b", "c"});
  CHECK(merged.n_catchments() == 5);
  CHECK(merged.static_attrs.values(0, 0) == doctest::Approx(42.0));
  CHECK(merged.catchments[2].id == "B0");
  CHECK(merged.catchments[2].index == 2);
}

TEST_CASE("intersect_static identity case doubles catchments") {
  Dataset a = tiny_dataset({"x", "y"}, 2, "A");
  Dataset b = tiny_dataset({"x", "y"}, 2, "B");
  const Dataset merged = hydro::intersect_static({a, b});
  CHECK(merged.static_attrs.attribute_names ==
        std::vector<std::string>{"x", "y"});
  CHECK(merged.n_catchments() == 4);
}

TEST_CASE("intersect_static three archives with one shared attribute") {
  Dataset a = tiny_dataset({"p_mean", "q"}, 3, "A");
  Dataset b = tiny_dataset({"r", "p_mean"}, 2, "B");
  Dataset c = tiny_dataset({"p_mean"}, 1, "C");
  const Dataset merged = hydro::intersect_static({a, b, c});
  CHECK(merged.n_catchments() == 6);
  CHECK(merged.static_attrs.attribute_names ==
        std::vector<std::string>{"p_mean"});
}

TEST_CASE("intersect_static attribute set is order independent") {
  Dataset a = tiny_dataset({"a", "b", "c"}, 2, "A");
  Dataset b = tiny_dataset({"c", "b", "e"}, 2, "B");
  const auto ab = hydro::intersect_static({a, b});
  const auto ba = hydro::intersect_static({b, a});
  CHECK(ab.static_attrs.attribute_names == ba.static_attrs.attribute_names);
}

TEST_CASE("intersect_static with nothing shared fails") {
  Dataset a = tiny_dataset({"a"}, 1, "A");
  Dataset b = tiny_dataset({"b"}, 1, "B");
  CHECK_THROWS_AS(hydro::intersect_static({a, b}), hydro::HarmonizationError);
}

TEST_CASE("impute_static_means fills column means") {
  Dataset d = tiny_dataset({"attr"}, 3, "A");
  d.static_attrs.values(0, 0) = 1.0;
  d.static_attrs.values(1, 0) = 99.0;
  d.static_attrs.values(2, 0) = 3.0;
  d.static_attrs.missing.set(1, 0, true);
  const Dataset filled = hydro::impute_static_means(d);
  CHECK(filled.static_attrs.values(1, 0) == doctest::Approx(2.0));
  CHECK_FALSE(filled.static_attrs.missing.any());
  CHECK(filled.static_attrs.values(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("impute_static_means is the identity when nothing is missing") {
  Dataset d = tiny_dataset({"attr", "other"}, 3, "A");
  const Dataset filled = hydro::impute_static_means(d);
  CHECK(filled.static_attrs.values == d.static_attrs.values);
}

TEST_CASE("impute_static_means matches a loop oracle on random holes") {
  hydro::Rng rng(11);
  Dataset d = tiny_dataset({"a", "b", "c", "d", "e"}, 20, "A");
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      d.static_attrs.values(r, c) = rng.uniform(-5, 5);
      d.static_attrs.missing.set(r, c, rng.uniform() < 0.1);
    }
  // Guarantee at least one observed value per column.
  for (std::size_t c = 0; c < 5; ++c) d.static_attrs.missing.set(0, c, false);

  Matrix oracle = d.static_attrs.values;
  for (std::size_t c = 0; c < 5; ++c) {
    double sum = 0;
    int cnt = 0;
    for (std::size_t r = 0; r < 20; ++r)
      if (!d.static_attrs.missing(r, c)) {
        sum += oracle(r, c);
        ++cnt;
      }
    for (std::size_t r = 0; r < 20; ++r)
      if (d.static_attrs.missing(r, c)) oracle(r, c) = sum / cnt;
  }
  const Dataset filled = hydro::impute_static_means(d);
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(filled.static_attrs.values(r, c) ==
            doctest::Approx(oracle(r, c)).epsilon(1e-12));
}

TEST_CASE("impute_static_means fails on an all-missing column") {
  Dataset d = tiny_dataset({"attr"}, 2, "A");
  d.static_attrs.missing.set(0, 0, true);
  d.static_attrs.missing.set(1, 0, true);
  CHECK_THROWS_AS(hydro::impute_static_means(d), hydro::ImputationError);
}

TEST_CASE("impute_series_mean uses the global feature mean") {
  Dataset d = tiny_dataset({"attr"}, 2, "A");
  auto& values = d.series.values[0];
  auto& missing = d.series.missing[0];
  values(0, 0) = 1.0;
  values(1, 0) = 3.0;
  values(2, 0) = 1.0;
  values(3, 0) = 3.0;
  for (std::size_t t = 0; t < 4; ++t) missing.set(t, 1, true);
  const Dataset filled = hydro::impute_series_mean(d, "precipitation");
  for (std::size_t t = 0; t < 4; ++t)
    CHECK(filled.series.values[0](t, 1) == doctest::Approx(2.0));
  CHECK_FALSE(filled.series.missing[0].any());
}

TEST_CASE("impute_series_mean identity and lookup error") {
  Dataset d = tiny_dataset({"attr"}, 2, "A");
  const Dataset filled = hydro::impute_series_mean(d, "precipitation");
  CHECK(filled.series.values[0] == d.series.values[0]);
  CHECK_THROWS_AS(hydro::impute_series_mean(d, "nope"), hydro::LookupError);
}

TEST_CASE("impute_series_mean matches a flat-scan oracle") {
  hydro::Rng rng(13);
  Dataset d = tiny_dataset({"attr"}, 6, "A");
  auto& values = d.series.values[0];
  auto& missing = d.series.missing[0];
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 6; ++k) {
      values(t, k) = rng.uniform(0, 10);
      missing.set(t, k, rng.uniform() < 0.25);
    }
  missing.set(0, 0, false);
  double sum = 0;
  int cnt = 0;
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 6; ++k)
      if (!missing(t, k)) {
        sum += values(t, k);
        ++cnt;
      }
  const double mean = sum / cnt;
  const Dataset filled = hydro::impute_series_mean(d, "precipitation");
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t k = 0; k < 6; ++k) {
      const double expected = missing(t, k) ? mean : values(t, k);
      CHECK(filled.series.values[0](t, k) == doctest::Approx(expected));
    }
}

TEST_CASE("encode_month_ordinal endpoints and monotonicity") {
  CHECK(hydro::encode_month_ordinal(1) == doctest::Approx(0.0));
  CHECK(hydro::encode_month_ordinal(12) == doctest::Approx(1.0));
  CHECK(hydro::encode_month_ordinal(7) == doctest::Approx(6.0 / 11.0));
  for (int m = 1; m < 12; ++m)
    CHECK(hydro::encode_month_ordinal(m) < hydro::encode_month_ordinal(m + 1));
  CHECK_THROWS_AS(hydro::encode_month_ordinal(0), hydro::DomainError);
  CHECK_THROWS_AS(hydro::encode_month_ordinal(13), hydro::DomainError);
}

TEST_CASE("month names in static cells are ordinal encoded") {
  TempDir dir("months");
  write_small_fixture(dir.path);
  write_file(dir.path / "static.csv",
             "gauge_id,area,high_prec_month\n"
             "g1,10.5,January\n"
             "g2,7,dec\n");
  const Dataset d = hydro::load_dataset(dir.path);
  CHECK(d.static_attrs.values(0, 1) == doctest::Approx(0.0));
  CHECK(d.static_attrs.values(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("pearson_correlation contract cases") {
  const std::vector<double> a{1, 2, 3, 4};
  CHECK(hydro::pearson_correlation(a, a) == doctest::Approx(1.0));
  std::vector<double> neg;
  for (double v : a) neg.push_back(-v);
  CHECK(hydro::pearson_correlation(a, neg) == doctest::Approx(-1.0));
  const std::vector<double> b{1, 3, 2, 4};
  CHECK(hydro::pearson_correlation(a, b) == doctest::Approx(0.8));
  const std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(hydro::pearson_correlation(a, flat),
                  hydro::DegenerateInputError);
}
