#include "truckflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "truckflow/error.hpp"
#include "truckflow/features.hpp"
#include "truckflow/rng.hpp"

namespace truckflow {
namespace {

std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ a) ^ (b * 0x9e3779b97f4a7c15ULL));
}

double Whole(double x) { return std::max(1.0, std::round(x)); }

double Median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double upper = v[n / 2];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
  return (lower + upper) / 2.0;
}

}  // namespace

std::vector<ZoneAttributes> GenerateZones(std::size_t n, std::uint64_t seed,
                                          const ZoneGeneratorParams& p) {
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "need at least 2 zones");
  }
  const std::size_t width = std::to_string(n).size();
  std::vector<ZoneAttributes> zones(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(StreamSeed(seed, 0x5a6f6e65, i));
    ZoneAttributes& z = zones[i];
    std::string number = std::to_string(i + 1);
    z.zone_id = "Z" + std::string(width - number.size(), '0') + number;
    z.centroid_lat = rng.Uniform(p.lat_min, p.lat_max);
    z.centroid_lon = rng.Uniform(p.lon_min, p.lon_max);
    const double pop = p.median_population * std::exp(p.population_log_sd * rng.Normal());
    const double emp = p.employees_per_person * pop *
                       std::exp(p.attribute_log_sd * rng.Normal());
    const double est = emp / p.employees_per_establishment *
                       std::exp(p.attribute_log_sd * rng.Normal());
    const double pay = p.payroll_per_employee * emp *
                       std::exp(p.attribute_log_sd * rng.Normal());
    z.population = Whole(pop);
    z.employees = Whole(emp);
    z.establishments = Whole(est);
    z.annual_payroll = Whole(pay);
  }
  return zones;
}

void GravityParams::Validate() const {
  if (!(k > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gravity k must be > 0");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "gravity gamma must be >= 0");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "gravity sigma must be >= 0");
  if (!std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Error(ErrorCode::kInvalidArgument, "gravity exponents must be finite");
  }
  if (calibrate && !(target_median > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target median must be > 0");
  }
}

std::vector<ODRecord> GenerateGravityFlows(const std::vector<ZoneAttributes>& zones,
                                           const GravityParams& params,
                                           double* k_used) {
  params.Validate();
  const std::size_t n = zones.size();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 zones");

  // Unscaled flow for every ordered pair, row-major over (i, j), i != j.
  std::vector<double> raw;
  raw.reserve(n * (n - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = std::max(
          kMinGravityDistanceMiles,
          GreatCircleDistance({zones[i].centroid_lat, zones[i].centroid_lon},
                              {zones[j].centroid_lat, zones[j].centroid_lon}));
      double eps = 0.0;
      if (params.sigma > 0.0) {
        Rng rng(StreamSeed(params.seed, i, j));
        eps = params.sigma * rng.Normal();
      }
      raw.push_back(std::pow(zones[i].population, params.alpha) *
                    std::pow(zones[j].population, params.beta) *
                    std::pow(d, -params.gamma) * std::exp(eps));
    }
  }

  // The median is positively homogeneous in k, so one rescale hits the
  // target exactly before rounding.
  double k = params.k;
  if (params.calibrate) k = params.target_median / Median(raw);

  std::vector<ODRecord> flows;
  flows.reserve(raw.size());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double t = std::round(k * raw[idx++]);
      if (t >= 1.0) {
        flows.push_back({zones[i].zone_id, zones[j].zone_id,
                         static_cast<std::int64_t>(t)});
      }
    }
  }
  if (flows.empty()) {
    throw Error(ErrorCode::kCalibration, "every gravity flow rounds to zero; raise k");
  }
  if (params.calibrate) {
    std::vector<double> kept;
    kept.reserve(flows.size());
    for (const auto& f : flows) kept.push_back(static_cast<double>(f.annual_total_trips));
    const double median = Median(kept);
    if (std::abs(median - params.target_median) > 0.1 * params.target_median) {
      throw Error(ErrorCode::kCalibration,
                  "calibrated median " + std::to_string(median) +
                      " is not within 10% of " + std::to_string(params.target_median));
    }
  }
  if (k_used) *k_used = k;
  return flows;
}

std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace truckflow
