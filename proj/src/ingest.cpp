#include "truckflow/ingest.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"

namespace truckflow {
namespace {

std::string Location(const csv::Table& table, std::size_t row) {
  return table.source + ":" + std::to_string(table.line_numbers[row]);
}

const std::string& Identifier(const csv::Table& table, std::size_t row,
                              std::size_t column) {
  const std::string& id = table.rows[row][column];
  if (!csv::IsValidIdentifier(id)) {
    throw Error(ErrorCode::kParse, Location(table, row) + ": invalid " +
                                       table.header[column] + " '" + id +
                                       "' (allowed: [A-Za-z0-9_-])");
  }
  return id;
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    const std::size_t a = std::hash<std::string>{}(p.first);
    return a ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ULL +
                (a << 6) + (a >> 2));
  }
};

}  // namespace

std::vector<ODRecord> ParseOdFlows(const std::string& text,
                                   const std::string& source) {
  const csv::Table table = csv::ReadString(text, source);
  const std::size_t c_origin = table.Column("origin_zone");
  const std::size_t c_dest = table.Column("destination_zone");
  const std::size_t c_trips = table.Column("annual_total_trips");

  std::vector<ODRecord> records;
  records.reserve(table.rows.size());
  std::unordered_set<std::pair<std::string, std::string>, PairHash> seen;
  seen.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ODRecord rec;
    rec.origin_zone = Identifier(table, r, c_origin);
    rec.destination_zone = Identifier(table, r, c_dest);
    rec.annual_total_trips = csv::ParseInteger(table.rows[r][c_trips], table,
                                               r, "annual_total_trips");
    if (rec.annual_total_trips < 0) {
      throw Error(ErrorCode::kParse, Location(table, r) +
                                         ": negative annual_total_trips " +
                                         table.rows[r][c_trips]);
    }
    if (!seen.emplace(rec.origin_zone, rec.destination_zone).second) {
      throw Error(ErrorCode::kDuplicate,
                  Location(table, r) + ": duplicate OD pair (" +
                      rec.origin_zone + "," + rec.destination_zone + ")");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ODRecord> LoadOdFlows(const std::filesystem::path& path) {
  return ParseOdFlows(csv::ReadText(path), path.string());
}

std::vector<ZoneAttributes> ParseZones(const std::string& text,
                                       const std::string& source,
                                       bool require_attributes) {
  const csv::Table table = csv::ReadString(text, source);
  const std::size_t c_id = table.Column("zone_id");
  const std::size_t c_lat = table.Column("centroid_lat");
  const std::size_t c_lon = table.Column("centroid_lon");
  const char* const kAttrs[] = {"population", "establishments", "employees",
                                "annual_payroll"};
  std::size_t c_attr[4] = {};
  bool have_attrs = true;
  for (int i = 0; i < 4; ++i) {
    if (require_attributes || table.HasColumn(kAttrs[i])) {
      c_attr[i] = table.Column(kAttrs[i]);
    } else {
      have_attrs = false;
    }
  }

  std::vector<ZoneAttributes> zones;
  zones.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ZoneAttributes z;
    z.zone_id = Identifier(table, r, c_id);
    if (!seen.insert(z.zone_id).second) {
      throw Error(ErrorCode::kDuplicate,
                  Location(table, r) + ": duplicate zone_id " + z.zone_id);
    }
    z.centroid_lat = csv::ParseDouble(row[c_lat], table, r, "centroid_lat");
    z.centroid_lon = csv::ParseDouble(row[c_lon], table, r, "centroid_lon");
    if (z.centroid_lat < -90.0 || z.centroid_lat > 90.0 ||
        z.centroid_lon < -180.0 || z.centroid_lon > 180.0) {
      throw Error(ErrorCode::kDomain, Location(table, r) +
                                          ": centroid out of range for zone " +
                                          z.zone_id);
    }
    if (have_attrs) {
      z.population = csv::ParseDouble(row[c_attr[0]], table, r, kAttrs[0]);
      z.establishments = csv::ParseDouble(row[c_attr[1]], table, r, kAttrs[1]);
      z.employees = csv::ParseDouble(row[c_attr[2]], table, r, kAttrs[2]);
      z.annual_payroll = csv::ParseDouble(row[c_attr[3]], table, r, kAttrs[3]);
    }
    zones.push_back(std::move(z));
  }
  return zones;
}

std::vector<ZoneAttributes> LoadZones(const std::filesystem::path& path,
                                      bool require_attributes) {
  return ParseZones(csv::ReadText(path), path.string(), require_attributes);
}

std::vector<CountyRow> ParseCounties(const std::string& text,
                                     const std::string& source) {
  const csv::Table table = csv::ReadString(text, source);
  const std::size_t c_county = table.Column("county_id");
  const std::size_t c_zone = table.Column("zone_id");
  const std::size_t c_pop = table.Column("population");
  const std::size_t c_est = table.Column("establishments");
  const std::size_t c_emp = table.Column("employees");
  const std::size_t c_ap = table.Column("annual_payroll");

  std::vector<CountyRow> rows;
  rows.reserve(table.rows.size());
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    CountyRow c;
    c.county_id = Identifier(table, r, c_county);
    if (!seen.insert(c.county_id).second) {
      throw Error(ErrorCode::kDuplicate,
                  Location(table, r) + ": duplicate county_id " + c.county_id);
    }
    // An empty zone_id is allowed when a crosswalk supplies the mapping.
    c.zone_id = row[c_zone].empty() ? std::string() : Identifier(table, r, c_zone);
    c.population = csv::ParseDouble(row[c_pop], table, r, "population");
    c.establishments = csv::ParseDouble(row[c_est], table, r, "establishments");
    c.employees = csv::ParseDouble(row[c_emp], table, r, "employees");
    c.annual_payroll = csv::ParseDouble(row[c_ap], table, r, "annual_payroll");
    rows.push_back(std::move(c));
  }
  return rows;
}

std::vector<CountyRow> LoadCounties(const std::filesystem::path& path) {
  return ParseCounties(csv::ReadText(path), path.string());
}

std::map<std::string, std::string> LoadCrosswalk(
    const std::filesystem::path& path) {
  const csv::Table table = csv::ReadFile(path);
  const std::size_t c_county = table.Column("county_id");
  const std::size_t c_zone = table.Column("zone_id");
  std::map<std::string, std::string> mapping;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& county = Identifier(table, r, c_county);
    const std::string& zone = Identifier(table, r, c_zone);
    if (!mapping.emplace(county, zone).second) {
      throw Error(ErrorCode::kDuplicate,
                  Location(table, r) + ": county " + county +
                      " mapped to more than one zone");
    }
  }
  return mapping;
}

std::set<std::string> ParseExclusions(const std::string& text) {
  std::set<std::string> zones;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = csv::Trim(view);
    if (!view.empty()) zones.emplace(view);
  }
  return zones;
}

std::set<std::string> LoadExclusions(const std::filesystem::path& path) {
  return ParseExclusions(csv::ReadText(path));
}

std::string FormatOdFlows(const std::vector<ODRecord>& records) {
  std::string out = "origin_zone,destination_zone,annual_total_trips\n";
  for (const auto& r : records) {
    out += r.origin_zone;
    out += ',';
    out += r.destination_zone;
    out += ',';
    out += std::to_string(r.annual_total_trips);
    out += '\n';
  }
  return out;
}

void WriteOdFlows(const std::filesystem::path& path,
                  const std::vector<ODRecord>& records) {
  csv::WriteText(path, FormatOdFlows(records));
}

std::string FormatZones(const std::vector<ZoneAttributes>& zones) {
  std::string out =
      "zone_id,centroid_lat,centroid_lon,population,establishments,employees,"
      "annual_payroll\n";
  for (const auto& z : zones) {
    out += z.zone_id;
    for (double v : {z.centroid_lat, z.centroid_lon, z.population,
                     z.establishments, z.employees, z.annual_payroll}) {
      out += ',';
      out += csv::FormatDouble(v);
    }
    out += '\n';
  }
  return out;
}

void WriteZones(const std::filesystem::path& path,
                const std::vector<ZoneAttributes>& zones) {
  csv::WriteText(path, FormatZones(zones));
}

std::vector<ODRecord> FilterRecords(const std::vector<ODRecord>& records,
                                    const FilterOptions& options,
                                    FilterReport* report) {
  FilterReport local;
  local.input = records.size();
  std::vector<ODRecord> kept;
  kept.reserve(records.size());
  for (const auto& r : records) {
    if (options.excluded_zones.contains(r.origin_zone) ||
        options.excluded_zones.contains(r.destination_zone)) {
      ++local.removed_excluded;
    } else if (r.annual_total_trips <= 0) {
      ++local.removed_zero;
    } else if (options.exclude_intrazonal &&
               r.origin_zone == r.destination_zone) {
      ++local.removed_intrazonal;
    } else {
      kept.push_back(r);
    }
  }
  local.retained = kept.size();
  if (report) *report = local;
  return kept;
}

std::vector<ZoneAttributes> AggregateCounties(
    const std::vector<CountyRow>& rows,
    const std::vector<ZoneAttributes>& zones, AggregationReport* report) {
  AggregationReport local;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < zones.size(); ++i) slot[zones[i].zone_id] = i;

  std::vector<ZoneAttributes> sums(zones.size());
  std::vector<bool> has_county(zones.size(), false);
  for (std::size_t i = 0; i < zones.size(); ++i) {
    sums[i].zone_id = zones[i].zone_id;
    sums[i].centroid_lat = zones[i].centroid_lat;
    sums[i].centroid_lon = zones[i].centroid_lon;
  }
  for (const auto& c : rows) {
    const auto it = slot.find(c.zone_id);
    if (it == slot.end()) {
      ++local.skipped_rows;
      local.skipped_counties.push_back(c.county_id);
      continue;
    }
    ZoneAttributes& z = sums[it->second];
    z.population += c.population;
    z.establishments += c.establishments;
    z.employees += c.employees;
    z.annual_payroll += c.annual_payroll;
    has_county[it->second] = true;
  }

  std::vector<ZoneAttributes> out;
  out.reserve(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (has_county[i]) {
      out.push_back(std::move(sums[i]));
    } else {
      local.empty_zones.push_back(zones[i].zone_id);
    }
  }
  if (report) *report = std::move(local);
  return out;
}

std::vector<AugmentedRecord> JoinDataset(
    const std::vector<ODRecord>& records,
    const std::vector<ZoneAttributes>& zones) {
  std::unordered_map<std::string, const ZoneAttributes*> by_id;
  for (const auto& z : zones) by_id.emplace(z.zone_id, &z);

  std::set<std::string> missing;
  std::vector<AugmentedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto o = by_id.find(r.origin_zone);
    const auto d = by_id.find(r.destination_zone);
    if (o == by_id.end()) missing.insert(r.origin_zone);
    if (d == by_id.end()) missing.insert(r.destination_zone);
    if (o == by_id.end() || d == by_id.end()) continue;
    out.push_back(AugmentedRecord{r, *o->second, *d->second});
  }
  if (!missing.empty()) {
    std::string message = std::to_string(missing.size()) +
                          " zone identifier(s) not found in zone table:";
    std::size_t listed = 0;
    for (const auto& id : missing) {
      if (listed++ == 20) {
        message += " ...";
        break;
      }
      message += ' ';
      message += id;
    }
    throw Error(ErrorCode::kSchema, message);
  }
  return out;
}

std::map<std::string, std::size_t> ZoneIndex(
    const std::vector<ZoneAttributes>& zones) {
  std::vector<std::string> ids;
  ids.reserve(zones.size());
  for (const auto& z : zones) ids.push_back(z.zone_id);
  std::sort(ids.begin(), ids.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

}  // namespace truckflow
