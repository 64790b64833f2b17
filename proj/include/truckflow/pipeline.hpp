#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "truckflow/features.hpp"
#include "truckflow/gbt.hpp"
#include "truckflow/ingest.hpp"
#include "truckflow/shap.hpp"

namespace truckflow {

// File-level steps shared by the C API and the command-line tool.

struct IngestOptions {
  std::filesystem::path flows;
  std::filesystem::path zones;
  std::optional<std::filesystem::path> counties;
  std::optional<std::filesystem::path> crosswalk;  // overrides counties' zone_id
  std::optional<std::filesystem::path> exclusions;
  bool exclude_intrazonal = false;
};

struct IngestResult {
  std::vector<AugmentedRecord> records;
  std::vector<ZoneAttributes> zones;
  FilterReport filter;
  AggregationReport aggregation;
};

IngestResult RunIngest(const IngestOptions& options);

// Dataset rows plus the ingest dense zone index.
FeatureMatrix IngestToMatrix(const IngestResult& result);

// shap_values.csv: origin_zone,destination_zone,base_value,phi_<name>...,prediction
struct ShapTable {
  std::vector<std::string> feature_names;
  std::vector<std::pair<std::string, std::string>> row_keys;
  std::vector<ShapExplanation> explanations;
};

std::string FormatShapTable(const ShapTable& table);
ShapTable ParseShapTable(const std::string& text, const std::string& source);
ShapTable ReadShapTable(const std::filesystem::path& path);

// Interaction file for one pair:
// origin_zone,destination_zone,value_<a>,value_<b>,interaction
struct InteractionTable {
  std::string feature_a;
  std::string feature_b;
  std::vector<std::pair<std::string, std::string>> row_keys;
  std::vector<double> values_a;
  std::vector<double> values_b;
  std::vector<double> interaction;
};

InteractionTable ComputeInteractionTable(const GBTModel& model,
                                         const FeatureMatrix& data,
                                         const std::string& feature_a,
                                         const std::string& feature_b);
std::string FormatInteractionTable(const InteractionTable& table);
InteractionTable ReadInteractionTable(const std::filesystem::path& path);

// "<stem>_interaction_<a>_<b>.csv" next to the SHAP output.
std::filesystem::path InteractionPath(const std::filesystem::path& shap_path,
                                      const std::string& a, const std::string& b);

std::size_t FeatureIndex(const std::vector<std::string>& names,
                         const std::string& name);

// Rows of `data` matching the table's keys, in table order.
FeatureMatrix AlignRows(const FeatureMatrix& data, const ShapTable& table);

// Seeded sample of at most `count` rows, returned in ascending row order.
FeatureMatrix SampleRows(const FeatureMatrix& data, std::size_t count,
                         std::uint64_t seed);

}  // namespace truckflow
