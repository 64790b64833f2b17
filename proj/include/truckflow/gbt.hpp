#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "truckflow/features.hpp"

namespace truckflow {

// Boosting hyperparameters. Defaults are the tuned truck-flow values; the
// remaining ones (rounds, lambda, gamma) follow common boosting defaults.
struct Hyperparams {
  int max_depth = 10;
  double min_child_weight = 6.0;
  double eta = 0.01;
  double subsample = 0.8;
  double colsample_bytree = 1.0;
  int rounds = 500;
  double lambda = 1.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  // Stop when validation RMSE has not improved for this many rounds (0: off).
  int early_stopping_rounds = 0;

  void Validate() const;
  bool operator==(const Hyperparams&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by eta
  double cover = 0.0;  // hessian sum of the full training set at this node

  bool is_leaf() const { return feature < 0; }
};

// Node 0 is the root. Rows with x[feature] < threshold go left.
struct Tree {
  std::vector<TreeNode> nodes;

  double Predict(std::span<const double> row) const;
  int LeafIndex(std::span<const double> row) const;
  int Depth() const;
};

struct GBTModel {
  double base_score = 0.0;
  std::vector<Tree> trees;
  Hyperparams params;
  std::vector<std::string> feature_names;

  std::size_t num_features() const { return feature_names.size(); }

  // Throws on NaN or a row of the wrong width.
  double Predict(std::span<const double> row) const;
  std::vector<double> PredictBatch(const FeatureMatrix& matrix) const;

  // Structural checks: child indices, covers, finite values, feature range.
  void Validate() const;
};

struct TrainingLog {
  std::vector<double> train_rmse;  // after each round, on the full train set
  std::vector<double> valid_rmse;  // empty without a validation set
  std::size_t best_rounds = 0;
};

// -G / (H + lambda)
double LeafWeight(double grad_sum, double hess_sum, double lambda);

// Second-order objective reduction of a split, minus gamma.
double SplitGain(double grad_left, double hess_left, double grad_right,
                 double hess_right, double lambda, double gamma);

// One feature's rows within a node, sorted by ascending value.
struct SortedColumn {
  std::size_t feature = 0;
  std::span<const double> values;
  std::span<const double> grad;
  std::span<const double> hess;
};

struct SplitDecision {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exact greedy search over midpoints between consecutive distinct values.
// Both children need hess sum >= min_child_weight and the gain must be > 0.
// Ties go to the lowest feature index, then the lowest threshold.
std::optional<SplitDecision> BestSplit(std::span<const SortedColumn> columns,
                                       const Hyperparams& params);

GBTModel Train(const FeatureMatrix& train, const Hyperparams& params,
               TrainingLog* log = nullptr,
               const FeatureMatrix* validation = nullptr);

std::string SerializeModel(const GBTModel& model);
GBTModel DeserializeModel(const std::string& text,
                          const std::string& source = "<model>");
void SaveModel(const GBTModel& model, const std::filesystem::path& path);
GBTModel LoadModel(const std::filesystem::path& path);

}  // namespace truckflow
