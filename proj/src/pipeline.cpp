#include "truckflow/pipeline.hpp"

#include <algorithm>
#include <map>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"
#include "truckflow/rng.hpp"

namespace truckflow {

IngestResult RunIngest(const IngestOptions& options) {
  IngestResult result;
  std::vector<ODRecord> flows = LoadOdFlows(options.flows);

  if (options.counties) {
    std::vector<CountyRow> counties = LoadCounties(*options.counties);
    if (options.crosswalk) {
      const auto mapping = LoadCrosswalk(*options.crosswalk);
      for (auto& c : counties) {
        const auto it = mapping.find(c.county_id);
        c.zone_id = it == mapping.end() ? std::string() : it->second;
      }
    }
    const auto centroids = LoadZones(options.zones, /*require_attributes=*/false);
    result.zones = AggregateCounties(counties, centroids, &result.aggregation);
  } else {
    result.zones = LoadZones(options.zones);
  }

  FilterOptions filter;
  filter.exclude_intrazonal = options.exclude_intrazonal;
  if (options.exclusions) filter.excluded_zones = LoadExclusions(*options.exclusions);
  flows = FilterRecords(flows, filter, &result.filter);
  result.records = JoinDataset(flows, result.zones);
  return result;
}

FeatureMatrix IngestToMatrix(const IngestResult& result) {
  return BuildFeatureMatrix(result.records, ZoneIndex(result.zones));
}

std::string FormatShapTable(const ShapTable& table) {
  std::string out = "origin_zone,destination_zone,base_value";
  for (const auto& name : table.feature_names) out += ",phi_" + name;
  out += ",prediction\n";
  for (std::size_t i = 0; i < table.explanations.size(); ++i) {
    const auto& e = table.explanations[i];
    out += table.row_keys[i].first + "," + table.row_keys[i].second + "," +
           csv::FormatDouble(e.base_value);
    for (double v : e.phi) out += "," + csv::FormatDouble(v);
    out += "," + csv::FormatDouble(e.prediction) + "\n";
  }
  return out;
}

ShapTable ParseShapTable(const std::string& text, const std::string& source) {
  const csv::Table t = csv::ReadString(text, source);
  const std::size_t c_o = t.Column("origin_zone");
  const std::size_t c_d = t.Column("destination_zone");
  const std::size_t c_base = t.Column("base_value");
  const std::size_t c_pred = t.Column("prediction");
  ShapTable table;
  std::vector<std::size_t> phi_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c].rfind("phi_", 0) == 0) {
      phi_cols.push_back(c);
      table.feature_names.push_back(t.header[c].substr(4));
    }
  }
  if (phi_cols.empty()) {
    throw Error(ErrorCode::kSchema, source + ": no phi_<feature> columns");
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    table.row_keys.emplace_back(row[c_o], row[c_d]);
    ShapExplanation e;
    e.base_value = csv::ParseDouble(row[c_base], t, r, "base_value");
    e.prediction = csv::ParseDouble(row[c_pred], t, r, "prediction");
    for (std::size_t c : phi_cols) e.phi.push_back(csv::ParseDouble(row[c], t, r, t.header[c]));
    table.explanations.push_back(std::move(e));
  }
  return table;
}

ShapTable ReadShapTable(const std::filesystem::path& path) {
  return ParseShapTable(csv::ReadText(path), path.string());
}

std::size_t FeatureIndex(const std::vector<std::string>& names,
                         const std::string& name) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    std::string known;
    for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::kInvalidArgument,
                "unknown feature '" + name + "' (known: " + known + ")");
  }
  return static_cast<std::size_t>(it - names.begin());
}

InteractionTable ComputeInteractionTable(const GBTModel& model,
                                         const FeatureMatrix& data,
                                         const std::string& feature_a,
                                         const std::string& feature_b) {
  const std::size_t a = FeatureIndex(model.feature_names, feature_a);
  const std::size_t b = FeatureIndex(model.feature_names, feature_b);
  if (a == b) {
    throw Error(ErrorCode::kInvalidArgument, "interaction pair needs two different features");
  }
  InteractionTable out;
  out.feature_a = feature_a;
  out.feature_b = feature_b;
  out.row_keys = data.row_keys;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    out.values_a.push_back(data.at(i, a));
    out.values_b.push_back(data.at(i, b));
    out.interaction.push_back(ShapInteractionPair(model, data.row(i), a, b));
  }
  return out;
}

std::string FormatInteractionTable(const InteractionTable& table) {
  std::string out = "origin_zone,destination_zone,value_" + table.feature_a +
                    ",value_" + table.feature_b + ",interaction\n";
  for (std::size_t i = 0; i < table.interaction.size(); ++i) {
    out += table.row_keys[i].first + "," + table.row_keys[i].second + "," +
           csv::FormatDouble(table.values_a[i]) + "," +
           csv::FormatDouble(table.values_b[i]) + "," +
           csv::FormatDouble(table.interaction[i]) + "\n";
  }
  return out;
}

InteractionTable ReadInteractionTable(const std::filesystem::path& path) {
  const csv::Table t = csv::ReadFile(path);
  if (t.header.size() != 5 || t.header[2].rfind("value_", 0) != 0 ||
      t.header[3].rfind("value_", 0) != 0 || t.header[4] != "interaction") {
    throw Error(ErrorCode::kSchema,
                path.string() + ": expected origin_zone,destination_zone,"
                                "value_<a>,value_<b>,interaction");
  }
  InteractionTable out;
  out.feature_a = t.header[2].substr(6);
  out.feature_b = t.header[3].substr(6);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    out.row_keys.emplace_back(row[0], row[1]);
    out.values_a.push_back(csv::ParseDouble(row[2], t, r, t.header[2]));
    out.values_b.push_back(csv::ParseDouble(row[3], t, r, t.header[3]));
    out.interaction.push_back(csv::ParseDouble(row[4], t, r, "interaction"));
  }
  return out;
}

std::filesystem::path InteractionPath(const std::filesystem::path& shap_path,
                                      const std::string& a, const std::string& b) {
  auto out = shap_path;
  out.replace_filename(shap_path.stem().string() + "_interaction_" + a + "_" + b +
                       ".csv");
  return out;
}

FeatureMatrix AlignRows(const FeatureMatrix& data, const ShapTable& table) {
  std::map<std::pair<std::string, std::string>, std::size_t> by_key;
  for (std::size_t i = 0; i < data.row_keys.size(); ++i) by_key.emplace(data.row_keys[i], i);
  std::vector<std::size_t> rows;
  rows.reserve(table.row_keys.size());
  for (const auto& key : table.row_keys) {
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw Error(ErrorCode::kSchema, "row (" + key.first + "," + key.second +
                                          ") is missing from the dataset");
    }
    rows.push_back(it->second);
  }
  FeatureMatrix out = data.Subset(rows);
  if (out.feature_names != table.feature_names) {
    throw Error(ErrorCode::kSchema, "dataset features do not match SHAP columns");
  }
  return out;
}

FeatureMatrix SampleRows(const FeatureMatrix& data, std::size_t count,
                         std::uint64_t seed) {
  if (count >= data.rows()) return data;
  Rng rng(SplitMix64(seed ^ 0x73616d706c65ULL));
  return data.Subset(rng.SampleWithoutReplacement(data.rows(), count));
}

}  // namespace truckflow
