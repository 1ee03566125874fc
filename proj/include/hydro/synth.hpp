// synth.hpp - Deterministic synthetic hydrology generator built on the daily
// water balance: streamflow releases a fixed fraction of soil moisture and
// the store is driven by seasonal precipitation minus evapotranspiration.
// Groundwater terms are carried as fields but fixed at zero for now, so
// runoff equals streamflow.
//
// The static attribute table exposes the generating parameters themselves
// (an identity linear map), which makes static features informative for the
// encoding/static ablations by construction.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydro/dataset.hpp"

namespace hydro {

struct SynthCatchmentParams {
  double runoff_coefficient = 0.2;  // k in (0,1): fraction of SM released/day
  double rain_mean = 3.0;           // depth/day
  double rain_amplitude = 2.0;      // depth/day
  double rain_phase = 0.0;          // radians
  double et_mean = 1.5;             // depth/day
  double et_amplitude = 1.0;        // depth/day
  double noise_scale = 1.0;         // depth/day, std of the rain noise
  double initial_soil_moisture = 10.0;  // depth
  double temp_mean = 10.0;          // degrees
  double temp_amplitude = 8.0;      // degrees
  double temp_phase = 0.0;          // radians

  // The static attribute vector published for this catchment; k and the
  // amplitudes are recovered from it by the identity map.
  std::vector<double> static_attributes() const;
};

// Attribute names matching static_attributes(), in order.
const std::vector<std::string>& synth_static_attribute_names();

struct WaterBalanceState {
  double soil_moisture = 0.0;
  double gw_in = 0.0;   // fixed at 0 in v1
  double gw_out = 0.0;  // fixed at 0 in v1
};

struct CatchmentSeries {
  std::vector<double> precipitation;
  std::vector<double> t_mean;
  std::vector<double> streamflow;
  // Diagnostics used by the conservation checks; not exported to datasets.
  std::vector<double> evapotranspiration;
  std::vector<double> soil_moisture;  // n_days + 1 entries, SM_0 .. SM_n
  bool soil_moisture_clamped = false;
};

// Daily recursion, seeded and deterministic:
//   P_t  = max(0, rain_mean + rain_amplitude*sin(2*pi*t/365.25 + phase) + eps_t)
//   ET_t = max(0, et_mean + et_amplitude*sin(2*pi*t/365.25 + phase - pi/4))
//   Q_t  = k * SM_t
//   SM_{t+1} = max(0, SM_t + P_t - ET_t - Q_t)
// with eps_t ~ N(0, noise_scale) and T_mean an independent seasonal sinusoid.
CatchmentSeries generate_catchment(const SynthCatchmentParams& p,
                                   std::size_t n_days, std::uint64_t seed);

// Full archive: per-catchment parameters drawn from the seeded generator,
// series features precipitation / streamflow / t_mean, static table holding
// the generating attributes.
Dataset generate_dataset(std::size_t n_catchments, std::size_t n_days,
                         std::uint64_t seed);

}  // namespace hydro
