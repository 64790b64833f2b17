#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "truckflow/ingest.hpp"

namespace truckflow {

inline constexpr double kEarthRadiusMiles = 3958.7613;

inline constexpr std::size_t kNumFeatures = 11;

// Model input columns, in matrix order.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "origin_zone_index", "destination_zone_index", "GCD",
    "orig_pop",          "dest_pop",               "log_orig_est",
    "log_dest_est",      "log_orig_emp",           "log_dest_emp",
    "log_orig_ap",       "log_dest_ap"};

inline constexpr std::string_view kTargetName = "log_truck_trips";

struct LatLon {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees
};

// Haversine distance in miles on a sphere of radius kEarthRadiusMiles.
double GreatCircleDistance(LatLon a, LatLon b);

// Natural log; throws a domain error for x <= 0.
double LogTransform(double x);

// Dense row-major table of model inputs plus the regression target.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> values;
  std::vector<double> target;
  std::vector<std::pair<std::string, std::string>> row_keys;

  std::size_t rows() const { return target.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t row, std::size_t col) const {
    return values[row * cols() + col];
  }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  std::vector<double> column(std::size_t col) const;

  // Rows in the given order. Keys are carried along when present.
  FeatureMatrix Subset(std::span<const std::size_t> indices) const;

  // Shape consistency and no NaN/inf anywhere; throws otherwise.
  void Validate() const;
};

// Builds the 11 model features and ln(trips) target from joined records.
// `zone_index` must cover every zone referenced by `records`.
FeatureMatrix BuildFeatureMatrix(
    const std::vector<AugmentedRecord>& records,
    const std::map<std::string, std::size_t>& zone_index);

// Dataset file: origin_zone,destination_zone,<features...>,log_truck_trips
void WriteFeatureMatrix(const std::filesystem::path& path,
                        const FeatureMatrix& matrix);
std::string FormatFeatureMatrix(const FeatureMatrix& matrix);
FeatureMatrix ReadFeatureMatrix(const std::filesystem::path& path);
FeatureMatrix ParseFeatureMatrix(const std::string& text,
                                 const std::string& source);

struct StatsSummary {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

StatsSummary DescriptiveStats(std::span<const double> column);

struct NamedStats {
  std::string variable;
  StatsSummary stats;
};

// Stats over the dataset's features (zone indices skipped) and target.
std::vector<NamedStats> DatasetStats(const FeatureMatrix& matrix);

// Full descriptive table from joined records: raw and log variants of every
// variable, in the usual reporting order.
std::vector<NamedStats> RawStats(const std::vector<AugmentedRecord>& records);

std::string FormatStats(const std::vector<NamedStats>& stats);

}  // namespace truckflow
