#include "hydro/encodings.hpp"

#include <cmath>

namespace hydro {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

std::vector<double> linear_space(std::size_t n_catchments) {
  std::vector<double> out(n_catchments, 0.0);
  if (n_catchments > 1) {
    const double denom = static_cast<double>(n_catchments - 1);
    for (std::size_t i = 0; i < n_catchments; ++i)
      out[i] = static_cast<double>(i) / denom;
  }
  return out;
}

std::vector<double> linear_time(std::size_t n_days) {
  std::vector<double> out(n_days, 0.0);
  if (n_days > 1) {
    const double denom = static_cast<double>(n_days - 1);
    for (std::size_t t = 0; t < n_days; ++t)
      out[t] = static_cast<double>(t) / denom;
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> fourier_time(
    std::size_t n_days, double period) {
  if (!(period > 0.0)) throw DomainError("fourier_time: period must be positive");
  std::vector<double> sin_channel(n_days), cos_channel(n_days);
  for (std::size_t t = 0; t < n_days; ++t) {
    const double phase = kTwoPi * static_cast<double>(t) / period;
    sin_channel[t] = std::sin(phase);
    cos_channel[t] = std::cos(phase);
  }
  return {std::move(sin_channel), std::move(cos_channel)};
}

std::vector<double> legendre_time(std::size_t n_days, int degree) {
  if (degree < 2 || degree > 4)
    throw DomainError("legendre_time: degree must be 2, 3, or 4");
  if (n_days < 2)
    throw ContractError("legendre_time: need at least two days");
  std::vector<double> out(n_days);
  const double denom = static_cast<double>(n_days - 1);
  for (std::size_t t = 0; t < n_days; ++t) {
    const double u = 2.0 * static_cast<double>(t) / denom - 1.0;
    switch (degree) {
      case 2: out[t] = (3.0 * u * u - 1.0) / 2.0; break;
      case 3: out[t] = (5.0 * u * u * u - 3.0 * u) / 2.0; break;
      default: out[t] = (35.0 * u * u * u * u - 30.0 * u * u + 3.0) / 8.0; break;
    }
  }
  return out;
}

EncodingSet build_encoding_set(const EncodingConfig& cfg, std::size_t n_days,
                               std::size_t n_catchments) {
  if (cfg.tier < 1 || cfg.tier > 4)
    throw DomainError("encoding tier must be 1..4");

  std::vector<std::vector<double>> time_channels;
  std::vector<std::string> time_names;
  std::vector<std::vector<double>> space_channels;
  std::vector<std::string> space_names;

  if (cfg.tier >= 2) {
    space_channels.push_back(linear_space(n_catchments));
    space_names.push_back("linear_space");
    time_channels.push_back(linear_time(n_days));
    time_names.push_back("linear_time");
  }
  if (cfg.tier >= 3) {
    auto [s, c] = fourier_time(n_days, kAnnualPeriodDays);
    time_channels.push_back(std::move(s));
    time_names.push_back("fourier_annual_sin");
    time_channels.push_back(std::move(c));
    time_names.push_back("fourier_annual_cos");
  }
  if (cfg.tier >= 4) {
    for (const int period : {8, 16, 32, 64, 128}) {
      auto [s, c] = fourier_time(n_days, static_cast<double>(period));
      time_channels.push_back(std::move(s));
      time_names.push_back("fourier_" + std::to_string(period) + "_sin");
      time_channels.push_back(std::move(c));
      time_names.push_back("fourier_" + std::to_string(period) + "_cos");
    }
    for (const int degree : {2, 3, 4}) {
      time_channels.push_back(legendre_time(n_days, degree));
      time_names.push_back("legendre_" + std::to_string(degree));
    }
  }

  EncodingSet set;
  set.time_channel_names = std::move(time_names);
  set.space_channel_names = std::move(space_names);
  set.per_day = Matrix(n_days, time_channels.size());
  for (std::size_t c = 0; c < time_channels.size(); ++c)
    for (std::size_t t = 0; t < n_days; ++t)
      set.per_day(t, c) = time_channels[c][t];
  set.per_catchment = Matrix(n_catchments, space_channels.size());
  for (std::size_t c = 0; c < space_channels.size(); ++c)
    for (std::size_t i = 0; i < n_catchments; ++i)
      set.per_catchment(i, c) = space_channels[c][i];
  return set;
}

}  // namespace hydro
