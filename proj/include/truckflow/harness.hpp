#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "truckflow/features.hpp"
#include "truckflow/gbt.hpp"

namespace truckflow {

struct SplitSpec {
  double train_fraction = 0.70;
  std::uint64_t seed = 0;
};

struct Partition {
  std::vector<std::size_t> train;  // ascending row indices
  std::vector<std::size_t> test;
};

// Seeded shuffle; the first ceil(fraction * n) shuffled rows (clamped to
// [1, n-1]) form the training part.
Partition SplitIndices(std::size_t n, const SplitSpec& spec);
std::pair<FeatureMatrix, FeatureMatrix> TrainTestSplit(const FeatureMatrix& m,
                                                       const SplitSpec& spec);

struct MetricsReport {
  double rmsle = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

// RMSE between log-scale predictions and log-scale targets.
double Rmsle(std::span<const double> pred_log, std::span<const double> actual_log);
// sqrt(mean((ln(1+exp(p)) - ln(1+exp(a)))^2)): the "+1" convention applied
// to the back-transformed counts.
double RmslePlusOne(std::span<const double> pred_log,
                    std::span<const double> actual_log);
double RSquared(std::span<const double> pred, std::span<const double> actual);

MetricsReport Evaluate(const GBTModel& model, const FeatureMatrix& data,
                       bool rmsle_plus_one = false);

// Fold id per row; fold sizes differ by at most one.
std::vector<std::size_t> FoldAssignment(std::size_t n, std::size_t k,
                                        std::uint64_t seed);

struct CvResult {
  std::vector<MetricsReport> folds;
  double mean_rmsle = 0.0;
  double std_rmsle = 0.0;  // sample standard deviation
  double mean_r_squared = 0.0;
  double std_r_squared = 0.0;
};

CvResult KFoldCv(const FeatureMatrix& data, std::size_t k,
                 const Hyperparams& params, std::uint64_t seed,
                 bool rmsle_plus_one = false);

// Candidate values per hyperparameter name. Names: max_depth,
// min_child_weight, eta, subsample, colsample_bytree, rounds, lambda, gamma.
struct GridAxis {
  std::string name;
  std::vector<double> values;
};
using Grid = std::vector<GridAxis>;

// Rows `name,v1,v2,...`.
Grid ParseGrid(const std::string& text, const std::string& source);
Grid LoadGrid(const std::filesystem::path& path);

// Cartesian product in row-major order (first axis varies slowest).
std::vector<Hyperparams> ExpandGrid(const Grid& grid, const Hyperparams& base);

struct GridRow {
  Hyperparams params;
  CvResult cv;
};

struct GridSearchResult {
  std::vector<GridRow> table;
  std::size_t best = 0;  // first minimizer of mean CV RMSLE
};

GridSearchResult GridSearch(const FeatureMatrix& data, const Grid& grid,
                            const Hyperparams& base, std::size_t k,
                            std::uint64_t seed, bool rmsle_plus_one = false);

std::string FormatMetrics(const MetricsReport& report);
std::string FormatCv(const CvResult& cv);
std::string FormatGridSearch(const GridSearchResult& result);

}  // namespace truckflow
