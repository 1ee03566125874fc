#include "hydro/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

namespace hydro {

double rmse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty())
    throw ShapeError("rmse: need equal nonzero lengths");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - obs[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double nse(const GaugeSeriesPair& pair) {
  if (pair.observed.size() != pair.modeled.size() || pair.observed.size() < 2)
    throw ContractError("nse: need matched series of length >= 2");
  double mean = 0.0;
  for (double v : pair.observed) mean += v;
  mean /= static_cast<double>(pair.observed.size());
  double sse = 0.0, variance = 0.0;
  for (std::size_t t = 0; t < pair.observed.size(); ++t) {
    const double r = pair.observed[t] - pair.modeled[t];
    const double d = pair.observed[t] - mean;
    sse += r * r;
    variance += d * d;
  }
  if (variance == 0.0)
    throw DegenerateInputError("nse: observed series has zero variance (gauge " +
                               pair.gauge_id + ")");
  return 1.0 - sse / variance;
}

double nnse(const GaugeSeriesPair& pair) { return 1.0 / (2.0 - nse(pair)); }

double to_physical(double scaled, const TargetTransform& t) {
  const double v = invert_min_max(scaled, t.scaler);
  return t.cube_root ? cube(v) : v;
}

MetricsReport evaluate_series(const std::vector<Matrix>& modeled,
                              const std::vector<Matrix>& observed,
                              const std::vector<std::string>& target_names,
                              const std::vector<std::string>& gauge_ids,
                              const std::vector<TargetTransform>& transforms,
                              const std::string& split_label) {
  if (modeled.size() != target_names.size() ||
      observed.size() != target_names.size() ||
      transforms.size() != target_names.size())
    throw ContractError("evaluate_series: per-target inputs disagree");
  if (gauge_ids.empty())
    throw ContractError("evaluate_series: empty gauge set");

  MetricsReport report;
  report.split = split_label;
  double total_sse = 0.0, total_sse_physical = 0.0;
  std::size_t total_count = 0;

  for (std::size_t j = 0; j < target_names.size(); ++j) {
    const Matrix& pred = modeled[j];
    const Matrix& obs = observed[j];
    if (pred.rows() != obs.rows() || pred.cols() != gauge_ids.size() ||
        obs.cols() != gauge_ids.size())
      throw ShapeError("evaluate_series: series shape mismatch for target " +
                       target_names[j]);
    const std::size_t windows = pred.rows();
    if (windows < 2)
      throw ContractError("evaluate_series: need at least two windows");

    TargetSplitMetrics row;
    row.target = target_names[j];
    row.split = split_label;

    double sse = 0.0, sse_physical = 0.0;
    double nse_sum = 0.0, nnse_sum = 0.0, nnse_phys_sum = 0.0;
    std::size_t included = 0;

    for (std::size_t g = 0; g < gauge_ids.size(); ++g) {
      GaugeSeriesPair pair;
      pair.gauge_id = gauge_ids[g];
      pair.observed.resize(windows);
      pair.modeled.resize(windows);
      GaugeSeriesPair physical = pair;
      for (std::size_t w = 0; w < windows; ++w) {
        pair.observed[w] = obs(w, g);
        pair.modeled[w] = pred(w, g);
        physical.observed[w] = to_physical(obs(w, g), transforms[j]);
        physical.modeled[w] = to_physical(pred(w, g), transforms[j]);
        const double d = pair.modeled[w] - pair.observed[w];
        sse += d * d;
        const double dp = physical.modeled[w] - physical.observed[w];
        sse_physical += dp * dp;
      }

      GaugeMetrics gm;
      gm.gauge_id = pair.gauge_id;
      gm.rmse = rmse(pair.modeled, pair.observed);
      gm.rmse_physical = rmse(physical.modeled, physical.observed);
      double mean = 0.0;
      for (double v : pair.observed) mean += v;
      mean /= static_cast<double>(windows);
      double variance = 0.0;
      for (double v : pair.observed) variance += (v - mean) * (v - mean);
      if (variance == 0.0) {
        gm.excluded = true;
        gm.nse = gm.nnse = std::numeric_limits<double>::quiet_NaN();
        gm.nse_physical = gm.nnse_physical = gm.nse;
      } else {
        gm.nse = nse(pair);
        gm.nnse = 1.0 / (2.0 - gm.nse);
        gm.nse_physical = nse(physical);
        gm.nnse_physical = 1.0 / (2.0 - gm.nse_physical);
        nse_sum += gm.nse;
        nnse_sum += gm.nnse;
        nnse_phys_sum += gm.nnse_physical;
        ++included;
      }
      row.detail.push_back(std::move(gm));
    }

    const double count = static_cast<double>(windows * gauge_ids.size());
    row.rmse = std::sqrt(sse / count);
    row.rmse_physical = std::sqrt(sse_physical / count);
    if (included > 0) {
      row.nse_mean = nse_sum / static_cast<double>(included);
      row.nnse_mean = nnse_sum / static_cast<double>(included);
      row.nnse_mean_physical = nnse_phys_sum / static_cast<double>(included);
    } else {
      row.nse_mean = row.nnse_mean = row.nnse_mean_physical =
          std::numeric_limits<double>::quiet_NaN();
    }
    total_sse += sse;
    total_sse_physical += sse_physical;
    total_count += windows * gauge_ids.size();
    report.targets.push_back(std::move(row));
  }

  report.total_rmse = std::sqrt(total_sse / static_cast<double>(total_count));
  report.total_rmse_physical =
      std::sqrt(total_sse_physical / static_cast<double>(total_count));
  return report;
}

MetricsReport evaluate(const ModelParams& params, const AssembledData& data,
                       std::size_t l_seq,
                       const std::vector<TargetTransform>& transforms,
                       const std::string& split_label) {
  if (data.n_gauges() == 0) throw ContractError("evaluate: empty split");
  Batcher batcher(data, l_seq);
  const std::size_t windows = batcher.count();
  const std::size_t gauges = data.n_gauges();
  const std::size_t n_targets = data.target_series.size();

  std::vector<Matrix> modeled(n_targets, Matrix(windows, gauges));
  std::vector<Matrix> observed(n_targets, Matrix(windows, gauges));
  for (std::size_t w = 0; w < windows; ++w) {
    const Batch batch = batcher.at(w);
    const Matrix pred = forward(batch, params, RunMode::eval, nullptr);
    for (std::size_t j = 0; j < n_targets; ++j)
      for (std::size_t g = 0; g < gauges; ++g) {
        modeled[j](w, g) = pred(g, j);
        observed[j](w, g) = batch.targets(g, j);
      }
  }
  return evaluate_series(modeled, observed, data.target_names, data.gauge_ids,
                         transforms, split_label);
}

namespace {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_metrics_csv(const std::vector<MetricsReport>& reports,
                       const std::filesystem::path& path, bool physical_rmse) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write metrics: " + path.string());
  out << "target,split,gauge_id,rmse,nse,nnse";
  if (physical_rmse) out << ",rmse_physical";
  out << '\n';
  for (const MetricsReport& report : reports) {
    for (const TargetSplitMetrics& row : report.targets) {
      for (const GaugeMetrics& gm : row.detail) {
        out << row.target << ',' << row.split << ',' << gm.gauge_id << ','
            << format_double(gm.rmse) << ',';
        if (!gm.excluded)
          out << format_double(gm.nse) << ',' << format_double(gm.nnse);
        else
          out << ',';  // zero-variance gauge: listed, metrics left blank
        if (physical_rmse) out << ',' << format_double(gm.rmse_physical);
        out << '\n';
      }
      out << row.target << ',' << row.split << ",ALL,"
          << format_double(row.rmse) << ',' << format_double(row.nse_mean)
          << ',' << format_double(row.nnse_mean);
      if (physical_rmse) out << ',' << format_double(row.rmse_physical);
      out << '\n';
    }
    out << "TOTAL," << report.split << ",ALL,"
        << format_double(report.total_rmse) << ",,";
    if (physical_rmse) out << ',' << format_double(report.total_rmse_physical);
    out << '\n';
  }
}

}  // namespace hydro
