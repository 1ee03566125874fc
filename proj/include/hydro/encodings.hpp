// encodings.hpp - Exogenous spatial/temporal encoding channels. Five
// families: linear space, linear time, annual Fourier, extra Fourier
// (periods 8..128 days), and Legendre polynomials of degree 2..4. Channels
// are functions of day index from the dataset start and of catchment index;
// every channel stays inside [-1, 1].

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hydro/numerics.hpp"

namespace hydro {

// One year, in days. Using 365.25 keeps the annual channel from drifting
// against the seasons over multi-decade series.
inline constexpr double kAnnualPeriodDays = 365.25;

struct EncodingSet {
  Matrix per_day;         // n_days x n_time_channels
  Matrix per_catchment;   // n_catchments x n_space_channels
  std::vector<std::string> time_channel_names;
  std::vector<std::string> space_channel_names;
};

// Cumulative configuration tiers:
//   1: raw series only (no encodings)
//   2: + linear space, linear time
//   3: + annual Fourier pair
//   4: + Fourier pairs for 8,16,32,64,128 days + Legendre degrees 2,3,4
struct EncodingConfig {
  int tier = 1;
  bool include_static = true;
};

// Catchment index i -> i/(n-1); a single catchment maps to 0.
std::vector<double> linear_space(std::size_t n_catchments);

// Day t -> t/(n-1); a single day maps to 0.
std::vector<double> linear_time(std::size_t n_days);

// Day t -> (sin(2*pi*t/period), cos(2*pi*t/period)).
std::pair<std::vector<double>, std::vector<double>> fourier_time(
    std::size_t n_days, double period);

// Day t mapped onto u = 2t/(n-1) - 1, then P_degree(u). Degrees 2..4 only.
std::vector<double> legendre_time(std::size_t n_days, int degree);

EncodingSet build_encoding_set(const EncodingConfig& cfg, std::size_t n_days,
                               std::size_t n_catchments);

}  // namespace hydro
