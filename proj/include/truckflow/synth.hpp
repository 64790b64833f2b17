#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "truckflow/ingest.hpp"

namespace truckflow {

// Zone generator magnitudes. The ratios come from the national descriptive
// means: employees/population = 277,258.9 / 710,678.5 ~ 0.39, employees per
// establishment = 277,258.9 / 17,041.9 ~ 16, payroll (thousand $) per
// employee = 15,610,480.7 / 277,258.9 ~ 56.3. The population log-sd 1.33
// reproduces the mean/median ratio 710,678.5 / 293,927 ~ exp(1.33^2 / 2).
struct ZoneGeneratorParams {
  double median_population = 295000.0;
  double population_log_sd = 1.33;
  double employees_per_person = 0.39;
  double employees_per_establishment = 16.0;
  double payroll_per_employee = 56.3;
  double attribute_log_sd = 0.2;
  double lat_min = 25.0, lat_max = 49.0;
  double lon_min = -124.0, lon_max = -67.0;
};

// Zone ids are "Z" plus a zero-padded number, so lexicographic order is
// numeric order. Attributes are rounded to whole units, minimum 1.
std::vector<ZoneAttributes> GenerateZones(std::size_t n, std::uint64_t seed,
                                          const ZoneGeneratorParams& p = {});

// T_ij = round(k * P_i^alpha * P_j^beta * d_ij^-gamma * exp(eps)),
// eps ~ Normal(0, sigma^2), d_ij in miles.
struct GravityParams {
  double k = 0.0032;  // close to the calibrated value for default zones
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 2.0;
  double sigma = 0.5;
  std::uint64_t seed = 0;
  // Rescale k so the median flow lands on target_median.
  bool calibrate = false;
  double target_median = 278.0;

  void Validate() const;
};

// Distances below this floor (coincident centroids) are clamped.
inline constexpr double kMinGravityDistanceMiles = 1.0;

// Flows for every ordered pair i != j in zone order; zero flows dropped.
// Each pair draws its noise from its own counter-derived stream.
std::vector<ODRecord> GenerateGravityFlows(const std::vector<ZoneAttributes>& zones,
                                           const GravityParams& params,
                                           double* k_used = nullptr);

// FNV-1a over the bytes of `text`.
std::uint64_t Fnv1a64(std::string_view text);

}  // namespace truckflow
