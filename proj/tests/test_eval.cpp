#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hydro/eval.hpp"

using hydro::GaugeSeriesPair;
using hydro::Matrix;
using hydro::MetricsReport;
using hydro::Rng;
using hydro::TargetTransform;

namespace {

std::vector<TargetTransform> identity_transforms(std::size_t n) {
  // min 0 / max 1 scaler is the identity map.
  return std::vector<TargetTransform>(n, TargetTransform{{0.0, 1.0, false}, false});
}

}  // namespace

TEST_CASE("rmse basics") {
  const std::vector<double> obs{1, 2, 3};
  CHECK(hydro::rmse(obs, obs) == doctest::Approx(0.0));

  std::vector<double> shifted;
  for (double v : obs) shifted.push_back(v + 1.0);
  CHECK(hydro::rmse(shifted, obs) == doctest::Approx(1.0));

  const std::vector<double> pred{2, 2, 2};
  CHECK(hydro::rmse(pred, obs) == doctest::Approx(std::sqrt(2.0 / 3.0)));

  const std::vector<double> short_series{1, 2};
  CHECK_THROWS_AS(hydro::rmse(obs, short_series), hydro::ShapeError);
}

TEST_CASE("nse basics") {
  GaugeSeriesPair perfect{{1, 2, 3}, {1, 2, 3}, "g"};
  CHECK(hydro::nse(perfect) == doctest::Approx(1.0));

  GaugeSeriesPair mean_pred{{1, 2, 3}, {2, 2, 2}, "g"};
  CHECK(hydro::nse(mean_pred) == doctest::Approx(0.0));

  GaugeSeriesPair half{{1, 2, 3}, {1, 1, 3}, "g"};
  CHECK(hydro::nse(half) == doctest::Approx(0.5));

  GaugeSeriesPair flat{{2, 2, 2}, {1, 2, 3}, "g"};
  CHECK_THROWS_AS(hydro::nse(flat), hydro::DegenerateInputError);
}

TEST_CASE("nnse contracts") {
  GaugeSeriesPair perfect{{1, 2, 3}, {1, 2, 3}, "g"};
  CHECK(hydro::nnse(perfect) == doctest::Approx(1.0).epsilon(1e-12));

  GaugeSeriesPair mean_pred{{1, 2, 3}, {2, 2, 2}, "g"};
  CHECK(hydro::nnse(mean_pred) == doctest::Approx(0.5).epsilon(1e-12));

  // Catastrophic predictions: NSE -> -inf drives NNSE -> 0.
  GaugeSeriesPair awful{{1, 2, 3}, {1e9, -1e9, 1e9}, "g"};
  CHECK(hydro::nnse(awful) < 1e-6);
  CHECK(hydro::nnse(awful) > 0.0);
}

TEST_CASE("nnse is strictly increasing in nse") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    GaugeSeriesPair a{{}, {}, "a"}, b{{}, {}, "b"};
    for (int t = 0; t < 20; ++t) {
      const double obs = rng.uniform(-5, 5);
      a.observed.push_back(obs);
      b.observed.push_back(obs);
      a.modeled.push_back(obs + rng.uniform(-2, 2));
      b.modeled.push_back(obs + rng.uniform(-2, 2));
    }
    const double nse_a = hydro::nse(a);
    const double nse_b = hydro::nse(b);
    const double nnse_a = hydro::nnse(a);
    const double nnse_b = hydro::nnse(b);
    if (nse_a < nse_b) CHECK(nnse_a < nnse_b);
    if (nse_a > nse_b) CHECK(nnse_a > nnse_b);
    CHECK(nnse_a > 0.0);
    CHECK(nnse_a <= 1.0);
  }
}

TEST_CASE("evaluate_series with an oracle model is perfect") {
  Rng rng(2);
  Matrix obs(10, 3);
  for (auto& v : obs.values()) v = rng.uniform(0, 1);
  const MetricsReport report = hydro::evaluate_series(
      {obs}, {obs}, {"flow"}, {"g0", "g1", "g2"}, identity_transforms(1), "val");
  CHECK(report.targets[0].rmse == doctest::Approx(0.0));
  CHECK(report.targets[0].nnse_mean == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& gm : report.targets[0].detail)
    CHECK(gm.nnse == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate_series with per-gauge mean predictions scores 0.5") {
  Rng rng(3);
  Matrix obs(50, 2);
  for (auto& v : obs.values()) v = rng.uniform(0, 1);
  Matrix pred(50, 2);
  for (std::size_t g = 0; g < 2; ++g) {
    double mean = 0.0;
    for (std::size_t w = 0; w < 50; ++w) mean += obs(w, g);
    mean /= 50.0;
    for (std::size_t w = 0; w < 50; ++w) pred(w, g) = mean;
  }
  const MetricsReport report = hydro::evaluate_series(
      {pred}, {obs}, {"flow"}, {"g0", "g1"}, identity_transforms(1), "val");
  for (const auto& gm : report.targets[0].detail)
    CHECK(gm.nnse == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("evaluate_series matches a loop-based oracle") {
  Rng rng(4);
  const std::size_t windows = 30, gauges = 3;
  std::vector<Matrix> pred(2, Matrix(windows, gauges));
  std::vector<Matrix> obs(2, Matrix(windows, gauges));
  for (int j = 0; j < 2; ++j)
    for (auto m : {&pred[j], &obs[j]})
      for (auto& v : m->values()) v = rng.uniform(0, 2);

  const MetricsReport report = hydro::evaluate_series(
      pred, obs, {"a", "b"}, {"g0", "g1", "g2"}, identity_transforms(2), "train");

  for (int j = 0; j < 2; ++j) {
    double sse = 0.0;
    double nnse_sum = 0.0;
    for (std::size_t g = 0; g < gauges; ++g) {
      double gauge_sse = 0.0, mean = 0.0, variance = 0.0;
      for (std::size_t w = 0; w < windows; ++w) mean += obs[j](w, g);
      mean /= windows;
      for (std::size_t w = 0; w < windows; ++w) {
        const double r = obs[j](w, g) - pred[j](w, g);
        gauge_sse += r * r;
        variance += (obs[j](w, g) - mean) * (obs[j](w, g) - mean);
        sse += r * r;
      }
      const double gauge_nse = 1.0 - gauge_sse / variance;
      nnse_sum += 1.0 / (2.0 - gauge_nse);
      CHECK(std::abs(report.targets[j].detail[g].nse - gauge_nse) < 1e-12);
    }
    CHECK(std::abs(report.targets[j].rmse -
                   std::sqrt(sse / (windows * gauges))) < 1e-12);
    CHECK(std::abs(report.targets[j].nnse_mean - nnse_sum / gauges) < 1e-12);
  }
}

TEST_CASE("zero-variance gauges are excluded from the nnse mean") {
  Matrix obs(10, 2);
  Matrix pred(10, 2);
  Rng rng(5);
  for (std::size_t w = 0; w < 10; ++w) {
    obs(w, 0) = rng.uniform(0, 1);
    pred(w, 0) = obs(w, 0) * 0.9;
    obs(w, 1) = 3.0;  // flat gauge
    pred(w, 1) = rng.uniform(0, 1);
  }
  const MetricsReport report = hydro::evaluate_series(
      {pred}, {obs}, {"flow"}, {"live", "flat"}, identity_transforms(1), "val");
  CHECK(report.targets[0].detail[1].excluded);
  CHECK_FALSE(report.targets[0].detail[0].excluded);
  // Mean equals the single included gauge's value.
  CHECK(report.targets[0].nnse_mean ==
        doctest::Approx(report.targets[0].detail[0].nnse));
}

TEST_CASE("aggregate nnse equals the detail-table mean") {
  Rng rng(6);
  Matrix obs(25, 5), pred(25, 5);
  for (auto& v : obs.values()) v = rng.uniform(0, 1);
  for (std::size_t k = 0; k < pred.size(); ++k)
    pred.data()[k] = obs.data()[k] + rng.uniform(-0.2, 0.2);
  const MetricsReport report =
      hydro::evaluate_series({pred}, {obs}, {"flow"},
                             {"g0", "g1", "g2", "g3", "g4"},
                             identity_transforms(1), "val");
  double sum = 0.0;
  int count = 0;
  for (const auto& gm : report.targets[0].detail)
    if (!gm.excluded) {
      sum += gm.nnse;
      ++count;
    }
  CHECK(std::abs(report.targets[0].nnse_mean - sum / count) < 1e-12);
}

TEST_CASE("physical transforms invert cube root and scaling") {
  TargetTransform t;
  t.scaler = hydro::ScalerParams{1.0, 3.0, false};  // scaled = (x-1)/2
  t.cube_root = true;
  // physical = cube(invert_min_max(scaled)): scaled 0.5 -> 2 -> 8.
  CHECK(hydro::to_physical(0.5, t) == doctest::Approx(8.0));
  t.cube_root = false;
  CHECK(hydro::to_physical(0.5, t) == doctest::Approx(2.0));
}

TEST_CASE("evaluate runs the model over a split") {
  // Small end-to-end: random params over a random fixture, checked against
  // an independent window sweep.
  Rng rng(7);
  hydro::AssembledData data;
  Matrix series(20, 2);
  for (auto& v : series.values()) v = rng.uniform(0, 1);
  data.feature_series = {series};
  data.input_names = {"precipitation"};
  data.static_rows = Matrix(2, 0);
  data.space_enc = Matrix(2, 0);
  data.time_enc = Matrix(20, 0);
  Matrix target(20, 2);
  for (auto& v : target.values()) v = rng.uniform(0, 1);
  data.target_series = {target};
  data.target_names = {"streamflow"};
  data.gauge_ids = {"g0", "g1"};

  hydro::ModelShape shape{1, 3, 4, 1, 0.0};
  Rng init(8);
  const hydro::ModelParams params = hydro::init_params(shape, init);

  const MetricsReport report =
      hydro::evaluate(params, data, 5, identity_transforms(1), "val");

  hydro::Batcher batcher(data, 5);
  const std::size_t windows = batcher.count();
  Matrix pred(windows, 2), obs(windows, 2);
  for (std::size_t w = 0; w < windows; ++w) {
    const auto batch = batcher.at(w);
    const Matrix out = hydro::forward(batch, params, hydro::RunMode::eval, nullptr);
    for (std::size_t g = 0; g < 2; ++g) {
      pred(w, g) = out(g, 0);
      obs(w, g) = batch.targets(g, 0);
    }
  }
  const MetricsReport oracle = hydro::evaluate_series(
      {pred}, {obs}, {"streamflow"}, {"g0", "g1"}, identity_transforms(1), "val");
  CHECK(report.targets[0].rmse == doctest::Approx(oracle.targets[0].rmse));
  CHECK(report.targets[0].nnse_mean ==
        doctest::Approx(oracle.targets[0].nnse_mean).epsilon(1e-12));
}
