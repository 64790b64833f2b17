// JSON model file: numbers carry 17 significant digits so a save/load cycle
// reproduces every double bit for bit.

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"
#include "truckflow/gbt.hpp"

namespace truckflow {
namespace {

constexpr int kFormatVersion = 1;

std::string Num(double v) {
  if (v == 0.0) return "0";
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string Quote(const std::string& s) {
  return nlohmann::json(s).dump();
}

using nlohmann::json;

[[noreturn]] void Malformed(const std::string& source, const std::string& path,
                            const std::string& what) {
  throw Error(ErrorCode::kParse, source + ": " + path + ": " + what);
}

const json& Field(const json& object, const char* key,
                  const std::string& source, const std::string& path) {
  if (!object.is_object()) Malformed(source, path, "expected an object");
  const auto it = object.find(key);
  if (it == object.end()) {
    Malformed(source, path, std::string("missing field '") + key + "'");
  }
  return *it;
}

double Number(const json& object, const char* key, const std::string& source,
              const std::string& path) {
  const json& v = Field(object, key, source, path);
  if (!v.is_number()) {
    Malformed(source, path + "." + key, "expected a number");
  }
  return v.get<double>();
}

std::int64_t Integer(const json& object, const char* key,
                     const std::string& source, const std::string& path) {
  const json& v = Field(object, key, source, path);
  if (!v.is_number_integer()) {
    Malformed(source, path + "." + key, "expected an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace

std::string SerializeModel(const GBTModel& model) {
  const Hyperparams& p = model.params;
  std::string out;
  out += "{\n  \"format_version\": " + std::to_string(kFormatVersion) + ",\n";
  out += "  \"base_score\": " + Num(model.base_score) + ",\n";
  out += "  \"params\": {\"max_depth\": " + std::to_string(p.max_depth) +
         ", \"min_child_weight\": " + Num(p.min_child_weight) +
         ", \"eta\": " + Num(p.eta) + ", \"subsample\": " + Num(p.subsample) +
         ", \"colsample_bytree\": " + Num(p.colsample_bytree) +
         ", \"rounds\": " + std::to_string(p.rounds) +
         ", \"lambda\": " + Num(p.lambda) + ", \"gamma\": " + Num(p.gamma) +
         ", \"seed\": " + std::to_string(p.seed) +
         ", \"early_stopping_rounds\": " +
         std::to_string(p.early_stopping_rounds) + "},\n";
  out += "  \"feature_names\": [";
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    if (i) out += ", ";
    out += Quote(model.feature_names[i]);
  }
  out += "],\n  \"trees\": [";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    out += t ? ",\n    {\"nodes\": [" : "\n    {\"nodes\": [";
    const auto& nodes = model.trees[t].nodes;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      if (i) out += ", ";
      if (n.is_leaf()) {
        out += "{\"leaf\": " + Num(n.value) + ", \"cover\": " + Num(n.cover) + "}";
      } else {
        out += "{\"feature\": " + std::to_string(n.feature) +
               ", \"threshold\": " + Num(n.threshold) +
               ", \"left\": " + std::to_string(n.left) +
               ", \"right\": " + std::to_string(n.right) +
               ", \"cover\": " + Num(n.cover) + "}";
      }
    }
    out += "]}";
  }
  out += model.trees.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

GBTModel DeserializeModel(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, source + ": malformed JSON at byte " +
                                       std::to_string(e.byte) + ": " + e.what());
  }

  GBTModel model;
  const auto version = Integer(doc, "format_version", source, "$");
  if (version != kFormatVersion) {
    Malformed(source, "$.format_version",
              "unsupported version " + std::to_string(version));
  }
  model.base_score = Number(doc, "base_score", source, "$");

  const json& p = Field(doc, "params", source, "$");
  model.params.max_depth = static_cast<int>(Integer(p, "max_depth", source, "$.params"));
  model.params.min_child_weight = Number(p, "min_child_weight", source, "$.params");
  model.params.eta = Number(p, "eta", source, "$.params");
  model.params.subsample = Number(p, "subsample", source, "$.params");
  model.params.colsample_bytree = Number(p, "colsample_bytree", source, "$.params");
  model.params.rounds = static_cast<int>(Integer(p, "rounds", source, "$.params"));
  model.params.lambda = Number(p, "lambda", source, "$.params");
  model.params.gamma = Number(p, "gamma", source, "$.params");
  {
    const json& seed = Field(p, "seed", source, "$.params");
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      Malformed(source, "$.params.seed", "expected a non-negative integer");
    }
    model.params.seed = seed.get<std::uint64_t>();
  }
  if (p.contains("early_stopping_rounds")) {
    model.params.early_stopping_rounds =
        static_cast<int>(Integer(p, "early_stopping_rounds", source, "$.params"));
  }

  const json& names = Field(doc, "feature_names", source, "$");
  if (!names.is_array()) Malformed(source, "$.feature_names", "expected an array");
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!names[i].is_string()) {
      Malformed(source, "$.feature_names[" + std::to_string(i) + "]",
                "expected a string");
    }
    model.feature_names.push_back(names[i].get<std::string>());
  }

  const json& trees = Field(doc, "trees", source, "$");
  if (!trees.is_array()) Malformed(source, "$.trees", "expected an array");
  model.trees.reserve(trees.size());
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const std::string tpath = "$.trees[" + std::to_string(t) + "]";
    const json& nodes = Field(trees[t], "nodes", source, tpath);
    if (!nodes.is_array()) Malformed(source, tpath + ".nodes", "expected an array");
    Tree tree;
    tree.nodes.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string npath = tpath + ".nodes[" + std::to_string(i) + "]";
      const json& jn = nodes[i];
      TreeNode n;
      n.cover = Number(jn, "cover", source, npath);
      if (jn.is_object() && jn.contains("leaf")) {
        n.value = Number(jn, "leaf", source, npath);
      } else {
        n.feature = static_cast<int>(Integer(jn, "feature", source, npath));
        if (n.feature < 0) Malformed(source, npath + ".feature", "negative index");
        n.threshold = Number(jn, "threshold", source, npath);
        n.left = static_cast<int>(Integer(jn, "left", source, npath));
        n.right = static_cast<int>(Integer(jn, "right", source, npath));
      }
      tree.nodes.push_back(n);
    }
    model.trees.push_back(std::move(tree));
  }

  try {
    model.params.Validate();
    model.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kModel, source + ": " + e.what());
  }
  return model;
}

void SaveModel(const GBTModel& model, const std::filesystem::path& path) {
  csv::WriteText(path, SerializeModel(model));
}

GBTModel LoadModel(const std::filesystem::path& path) {
  return DeserializeModel(csv::ReadText(path), path.string());
}

}  // namespace truckflow
