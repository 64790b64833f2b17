#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace truckflow {

struct ODRecord {
  std::string origin_zone;
  std::string destination_zone;
  std::int64_t annual_total_trips = 0;

  bool operator==(const ODRecord&) const = default;
};

struct ZoneAttributes {
  std::string zone_id;
  double centroid_lat = 0.0;
  double centroid_lon = 0.0;
  double population = 0.0;
  double establishments = 0.0;
  double employees = 0.0;
  double annual_payroll = 0.0;  // thousands of dollars

  bool operator==(const ZoneAttributes&) const = default;
};

struct CountyRow {
  std::string county_id;
  std::string zone_id;
  double population = 0.0;
  double establishments = 0.0;
  double employees = 0.0;
  double annual_payroll = 0.0;
};

// One OD record with both zones' attributes resolved.
struct AugmentedRecord {
  ODRecord record;
  ZoneAttributes origin;
  ZoneAttributes destination;
};

struct FilterReport {
  std::size_t input = 0;
  std::size_t removed_excluded = 0;
  std::size_t removed_zero = 0;
  std::size_t removed_intrazonal = 0;
  std::size_t retained = 0;
};

struct FilterOptions {
  std::set<std::string> excluded_zones;
  bool exclude_intrazonal = false;
};

struct AggregationReport {
  std::size_t skipped_rows = 0;  // counties referencing unknown zones
  std::vector<std::string> skipped_counties;
  std::vector<std::string> empty_zones;  // zones with no member county
};

// CSV loaders. Columns are located by header name.
std::vector<ODRecord> LoadOdFlows(const std::filesystem::path& path);
std::vector<ODRecord> ParseOdFlows(const std::string& text,
                                   const std::string& source);

// When `require_attributes` is false only zone_id and the centroid columns
// are needed; attributes are then left at zero for a later county join.
std::vector<ZoneAttributes> LoadZones(const std::filesystem::path& path,
                                      bool require_attributes = true);
std::vector<ZoneAttributes> ParseZones(const std::string& text,
                                       const std::string& source,
                                       bool require_attributes = true);

std::vector<CountyRow> LoadCounties(const std::filesystem::path& path);
std::vector<CountyRow> ParseCounties(const std::string& text,
                                     const std::string& source);

// county_id -> zone_id, header `county_id,zone_id`.
std::map<std::string, std::string> LoadCrosswalk(
    const std::filesystem::path& path);

// One zone id per line; blank lines and `#` comments ignored.
std::set<std::string> LoadExclusions(const std::filesystem::path& path);
std::set<std::string> ParseExclusions(const std::string& text);

void WriteOdFlows(const std::filesystem::path& path,
                  const std::vector<ODRecord>& records);
std::string FormatOdFlows(const std::vector<ODRecord>& records);
void WriteZones(const std::filesystem::path& path,
                const std::vector<ZoneAttributes>& zones);
std::string FormatZones(const std::vector<ZoneAttributes>& zones);

std::vector<ODRecord> FilterRecords(const std::vector<ODRecord>& records,
                                    const FilterOptions& options,
                                    FilterReport* report = nullptr);

// Sums county attributes into the zones of `zones` (centroids are copied
// from there). Zones without counties are dropped and listed in the report.
std::vector<ZoneAttributes> AggregateCounties(
    const std::vector<CountyRow>& rows,
    const std::vector<ZoneAttributes>& zones,
    AggregationReport* report = nullptr);

std::vector<AugmentedRecord> JoinDataset(
    const std::vector<ODRecord>& records,
    const std::vector<ZoneAttributes>& zones);

// Dense index per zone id, assigned in lexicographic order.
std::map<std::string, std::size_t> ZoneIndex(
    const std::vector<ZoneAttributes>& zones);

}  // namespace truckflow
