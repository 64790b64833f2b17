#include "truckflow/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"

namespace truckflow {

double GreatCircleDistance(LatLon a, LatLon b) {
  for (const LatLon& p : {a, b}) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 &&
          p.lon <= 180.0)) {
      throw Error(ErrorCode::kDomain,
                  "coordinate out of range: (" + csv::FormatDouble(p.lat) +
                      ", " + csv::FormatDouble(p.lon) + ")");
    }
  }
  constexpr double kRad = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kRad;
  const double phi2 = b.lat * kRad;
  const double dphi = (b.lat - a.lat) * kRad;
  const double dlambda = (b.lon - a.lon) * kRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusMiles * std::asin(std::sqrt(h));
}

double LogTransform(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::kDomain,
                "log transform requires a positive value, got " +
                    csv::FormatDouble(x));
  }
  return std::log(x);
}

std::vector<double> FeatureMatrix::column(std::size_t col) const {
  std::vector<double> out(rows());
  for (std::size_t i = 0; i < rows(); ++i) out[i] = at(i, col);
  return out;
}

FeatureMatrix FeatureMatrix::Subset(std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.values.reserve(indices.size() * cols());
  out.target.reserve(indices.size());
  const bool keyed = row_keys.size() == rows();
  for (std::size_t idx : indices) {
    const auto r = row(idx);
    out.values.insert(out.values.end(), r.begin(), r.end());
    out.target.push_back(target[idx]);
    if (keyed) out.row_keys.push_back(row_keys[idx]);
  }
  return out;
}

void FeatureMatrix::Validate() const {
  if (values.size() != rows() * cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature matrix shape mismatch: " +
                    std::to_string(values.size()) + " values for " +
                    std::to_string(rows()) + "x" + std::to_string(cols()));
  }
  if (!row_keys.empty() && row_keys.size() != rows()) {
    throw Error(ErrorCode::kInvalidArgument, "row key count mismatch");
  }
  for (std::size_t i = 0; i < rows(); ++i) {
    if (!std::isfinite(target[i])) {
      throw Error(ErrorCode::kDomain,
                  "non-finite target at row " + std::to_string(i));
    }
    for (std::size_t j = 0; j < cols(); ++j) {
      if (!std::isfinite(at(i, j))) {
        throw Error(ErrorCode::kDomain, "non-finite value at row " +
                                            std::to_string(i) + ", column " +
                                            feature_names[j]);
      }
    }
  }
}

namespace {

double Positive(double value, std::size_t row, std::string_view column) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::kDomain,
                "row " + std::to_string(row) + ", column " +
                    std::string(column) + ": value must be positive, got " +
                    csv::FormatDouble(value));
  }
  return value;
}

std::size_t IndexOf(const std::map<std::string, std::size_t>& zone_index,
                    const std::string& id) {
  const auto it = zone_index.find(id);
  if (it == zone_index.end()) {
    throw Error(ErrorCode::kSchema, "zone " + id + " missing from zone index");
  }
  return it->second;
}

}  // namespace

FeatureMatrix BuildFeatureMatrix(
    const std::vector<AugmentedRecord>& records,
    const std::map<std::string, std::size_t>& zone_index) {
  FeatureMatrix m;
  m.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());
  m.values.reserve(records.size() * kNumFeatures);
  m.target.reserve(records.size());
  m.row_keys.reserve(records.size());

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const auto& o = rec.origin;
    const auto& d = rec.destination;
    const double trips = static_cast<double>(rec.record.annual_total_trips);
    const double row[kNumFeatures] = {
        static_cast<double>(IndexOf(zone_index, o.zone_id)),
        static_cast<double>(IndexOf(zone_index, d.zone_id)),
        GreatCircleDistance({o.centroid_lat, o.centroid_lon},
                            {d.centroid_lat, d.centroid_lon}),
        Positive(o.population, i, "orig_pop"),
        Positive(d.population, i, "dest_pop"),
        std::log(Positive(o.establishments, i, "orig_est")),
        std::log(Positive(d.establishments, i, "dest_est")),
        std::log(Positive(o.employees, i, "orig_emp")),
        std::log(Positive(d.employees, i, "dest_emp")),
        std::log(Positive(o.annual_payroll, i, "orig_ap")),
        std::log(Positive(d.annual_payroll, i, "dest_ap")),
    };
    m.values.insert(m.values.end(), std::begin(row), std::end(row));
    m.target.push_back(std::log(Positive(trips, i, "annual_total_trips")));
    m.row_keys.emplace_back(rec.record.origin_zone,
                            rec.record.destination_zone);
  }
  return m;
}

std::string FormatFeatureMatrix(const FeatureMatrix& matrix) {
  std::string out = "origin_zone,destination_zone";
  for (const auto& name : matrix.feature_names) {
    out += ',';
    out += name;
  }
  out += ',';
  out += kTargetName;
  out += '\n';
  const bool keyed = matrix.row_keys.size() == matrix.rows();
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (keyed) {
      out += matrix.row_keys[i].first;
      out += ',';
      out += matrix.row_keys[i].second;
    } else {
      out += "row" + std::to_string(i) + ",row" + std::to_string(i);
    }
    for (double v : matrix.row(i)) {
      out += ',';
      out += csv::FormatDouble(v);
    }
    out += ',';
    out += csv::FormatDouble(matrix.target[i]);
    out += '\n';
  }
  return out;
}

void WriteFeatureMatrix(const std::filesystem::path& path,
                        const FeatureMatrix& matrix) {
  csv::WriteText(path, FormatFeatureMatrix(matrix));
}

FeatureMatrix ParseFeatureMatrix(const std::string& text,
                                 const std::string& source) {
  const csv::Table table = csv::ReadString(text, source);
  const std::size_t c_origin = table.Column("origin_zone");
  const std::size_t c_dest = table.Column("destination_zone");
  const std::size_t c_target = table.Column(kTargetName);

  FeatureMatrix m;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == c_origin || c == c_dest || c == c_target) continue;
    feature_cols.push_back(c);
    m.feature_names.push_back(table.header[c]);
  }
  m.values.reserve(table.rows.size() * feature_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    m.row_keys.emplace_back(row[c_origin], row[c_dest]);
    for (std::size_t c : feature_cols) {
      m.values.push_back(csv::ParseDouble(row[c], table, r, table.header[c]));
    }
    m.target.push_back(csv::ParseDouble(row[c_target], table, r, kTargetName));
  }
  return m;
}

FeatureMatrix ReadFeatureMatrix(const std::filesystem::path& path) {
  return ParseFeatureMatrix(csv::ReadText(path), path.string());
}

StatsSummary DescriptiveStats(std::span<const double> column) {
  if (column.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "descriptive statistics of an empty column");
  }
  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double sum = 0.0;
  for (double v : sorted) sum += v;
  StatsSummary s;
  s.mean = sum / static_cast<double>(n);
  s.median = n % 2 == 1 ? sorted[n / 2]
                        : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  s.min = sorted.front();
  s.max = sorted.back();
  // Summation error cannot push the mean outside the data range.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

std::vector<NamedStats> DatasetStats(const FeatureMatrix& matrix) {
  std::vector<NamedStats> out;
  out.push_back({std::string(kTargetName), DescriptiveStats(matrix.target)});
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    const auto& name = matrix.feature_names[c];
    if (name == kFeatureNames[0] || name == kFeatureNames[1]) continue;
    const auto col = matrix.column(c);
    out.push_back({name, DescriptiveStats(col)});
  }
  return out;
}

std::vector<NamedStats> RawStats(const std::vector<AugmentedRecord>& records) {
  const std::size_t n = records.size();
  std::vector<double> trips(n), gcd(n), opop(n), dpop(n), oest(n), dest(n),
      oemp(n), demp(n), oap(n), dap(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    trips[i] = static_cast<double>(r.record.annual_total_trips);
    gcd[i] = GreatCircleDistance({r.origin.centroid_lat, r.origin.centroid_lon},
                                 {r.destination.centroid_lat,
                                  r.destination.centroid_lon});
    opop[i] = r.origin.population;
    dpop[i] = r.destination.population;
    oest[i] = r.origin.establishments;
    dest[i] = r.destination.establishments;
    oemp[i] = r.origin.employees;
    demp[i] = r.destination.employees;
    oap[i] = r.origin.annual_payroll;
    dap[i] = r.destination.annual_payroll;
  }
  auto logged = [](const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), LogTransform);
    return out;
  };
  return {
      {"annual_total_trips", DescriptiveStats(trips)},
      {"log_truck_trips", DescriptiveStats(logged(trips))},
      {"GCD", DescriptiveStats(gcd)},
      {"orig_pop", DescriptiveStats(opop)},
      {"dest_pop", DescriptiveStats(dpop)},
      {"orig_est", DescriptiveStats(oest)},
      {"log_orig_est", DescriptiveStats(logged(oest))},
      {"dest_est", DescriptiveStats(dest)},
      {"log_dest_est", DescriptiveStats(logged(dest))},
      {"orig_emp", DescriptiveStats(oemp)},
      {"log_orig_emp", DescriptiveStats(logged(oemp))},
      {"dest_emp", DescriptiveStats(demp)},
      {"log_dest_emp", DescriptiveStats(logged(demp))},
      {"orig_ap", DescriptiveStats(oap)},
      {"log_orig_ap", DescriptiveStats(logged(oap))},
      {"dest_ap", DescriptiveStats(dap)},
      {"log_dest_ap", DescriptiveStats(logged(dap))},
  };
}

std::string FormatStats(const std::vector<NamedStats>& stats) {
  std::string out = "variable,mean,median,min,max\n";
  for (const auto& s : stats) {
    out += s.variable;
    for (double v : {s.stats.mean, s.stats.median, s.stats.min, s.stats.max}) {
      out += ',';
      out += csv::FormatDouble(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace truckflow
