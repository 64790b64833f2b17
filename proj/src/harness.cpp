#include "truckflow/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"
#include "truckflow/rng.hpp"

namespace truckflow {

Partition SplitIndices(std::size_t n, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "splitting needs at least 2 rows");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.Shuffle(std::span<std::size_t>(order));
  // The small slack absorbs representation error such as 0.7 * 10.
  auto cut = static_cast<std::size_t>(
      std::ceil(spec.train_fraction * static_cast<double>(n) - 1e-9));
  cut = std::clamp<std::size_t>(cut, 1, n - 1);
  Partition p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

std::pair<FeatureMatrix, FeatureMatrix> TrainTestSplit(const FeatureMatrix& m,
                                                       const SplitSpec& spec) {
  const Partition p = SplitIndices(m.rows(), spec);
  return {m.Subset(p.train), m.Subset(p.test)};
}

namespace {

void CheckLengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "metric inputs must be non-empty and of equal length");
  }
}

}  // namespace

double Rmsle(std::span<const double> pred_log, std::span<const double> actual_log) {
  CheckLengths(pred_log, actual_log);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_log.size(); ++i) {
    const double d = pred_log[i] - actual_log[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred_log.size()));
}

double RmslePlusOne(std::span<const double> pred_log,
                    std::span<const double> actual_log) {
  CheckLengths(pred_log, actual_log);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred_log.size(); ++i) {
    const double d = std::log1p(std::exp(pred_log[i])) -
                     std::log1p(std::exp(actual_log[i]));
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred_log.size()));
}

double RSquared(std::span<const double> pred, std::span<const double> actual) {
  CheckLengths(pred, actual);
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (pred[i] - actual[i]) * (pred[i] - actual[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  if (!(ss_tot > 0.0)) {
    throw Error(ErrorCode::kDomain, "R-squared undefined: target has zero variance");
  }
  return 1.0 - ss_res / ss_tot;
}

MetricsReport Evaluate(const GBTModel& model, const FeatureMatrix& data,
                       bool rmsle_plus_one) {
  const std::vector<double> pred = model.PredictBatch(data);
  MetricsReport r;
  r.n = data.rows();
  r.rmsle = rmsle_plus_one ? RmslePlusOne(pred, data.target) : Rmsle(pred, data.target);
  r.r_squared = RSquared(pred, data.target);
  return r;
}

std::vector<std::size_t> FoldAssignment(std::size_t n, std::size_t k,
                                        std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k must be at least 2");
  if (n < k) {
    throw Error(ErrorCode::kInvalidArgument,
                "cross-validation needs n >= k (n = " + std::to_string(n) +
                    ", k = " + std::to_string(k) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.Shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold(n);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold[order[pos++]] = f;
  }
  return fold;
}

namespace {

std::pair<double, double> MeanStd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

CvResult KFoldCv(const FeatureMatrix& data, std::size_t k,
                 const Hyperparams& params, std::uint64_t seed,
                 bool rmsle_plus_one) {
  const std::vector<std::size_t> fold = FoldAssignment(data.rows(), k, seed);
  CvResult result;
  std::vector<double> rmsle, r2;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, valid_rows;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      (fold[i] == f ? valid_rows : train_rows).push_back(i);
    }
    const GBTModel model = Train(data.Subset(train_rows), params);
    const MetricsReport report =
        Evaluate(model, data.Subset(valid_rows), rmsle_plus_one);
    rmsle.push_back(report.rmsle);
    r2.push_back(report.r_squared);
    result.folds.push_back(report);
  }
  std::tie(result.mean_rmsle, result.std_rmsle) = MeanStd(rmsle);
  std::tie(result.mean_r_squared, result.std_r_squared) = MeanStd(r2);
  return result;
}

namespace {

void SetParam(Hyperparams& p, const std::string& name, double value) {
  auto as_int = [&]() {
    if (value != std::floor(value)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "grid value for " + name + " must be an integer");
    }
    return static_cast<int>(value);
  };
  if (name == "max_depth") p.max_depth = as_int();
  else if (name == "min_child_weight") p.min_child_weight = value;
  else if (name == "eta") p.eta = value;
  else if (name == "subsample") p.subsample = value;
  else if (name == "colsample_bytree") p.colsample_bytree = value;
  else if (name == "rounds") p.rounds = as_int();
  else if (name == "lambda") p.lambda = value;
  else if (name == "gamma") p.gamma = value;
  else throw Error(ErrorCode::kInvalidArgument, "unknown grid parameter '" + name + "'");
}

}  // namespace

Grid ParseGrid(const std::string& text, const std::string& source) {
  Grid grid;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    start = end + 1;
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (csv::Trim(line).empty()) continue;
    auto cells = csv::Split(line, ',');
    GridAxis axis;
    axis.name = cells.front();
    const csv::Table where{source, {}, {}, {line_number}};
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) continue;
      axis.values.push_back(csv::ParseDouble(cells[c], where, 0, axis.name));
    }
    if (axis.values.empty()) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_number) +
                                         ": no values for " + axis.name);
    }
    Hyperparams probe;
    SetParam(probe, axis.name, axis.values.front());
    for (const auto& other : grid) {
      if (other.name == axis.name) {
        throw Error(ErrorCode::kDuplicate, source + ": parameter " + axis.name +
                                               " listed twice");
      }
    }
    grid.push_back(std::move(axis));
  }
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, source + ": empty grid");
  return grid;
}

Grid LoadGrid(const std::filesystem::path& path) {
  return ParseGrid(csv::ReadText(path), path.string());
}

std::vector<Hyperparams> ExpandGrid(const Grid& grid, const Hyperparams& base) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid");
  std::vector<Hyperparams> out{base};
  for (const GridAxis& axis : grid) {
    std::vector<Hyperparams> next;
    next.reserve(out.size() * axis.values.size());
    for (const Hyperparams& p : out) {
      for (double v : axis.values) {
        Hyperparams q = p;
        SetParam(q, axis.name, v);
        q.Validate();
        next.push_back(q);
      }
    }
    out = std::move(next);
  }
  return out;
}

GridSearchResult GridSearch(const FeatureMatrix& data, const Grid& grid,
                            const Hyperparams& base, std::size_t k,
                            std::uint64_t seed, bool rmsle_plus_one) {
  GridSearchResult result;
  for (const Hyperparams& p : ExpandGrid(grid, base)) {
    result.table.push_back({p, KFoldCv(data, k, p, seed, rmsle_plus_one)});
  }
  for (std::size_t i = 1; i < result.table.size(); ++i) {
    if (result.table[i].cv.mean_rmsle < result.table[result.best].cv.mean_rmsle) {
      result.best = i;
    }
  }
  return result;
}

std::string FormatMetrics(const MetricsReport& report) {
  return "n,rmsle,r_squared\n" + std::to_string(report.n) + "," +
         csv::FormatDouble(report.rmsle) + "," +
         csv::FormatDouble(report.r_squared) + "\n";
}

std::string FormatCv(const CvResult& cv) {
  std::string out = "fold,n,rmsle,r_squared\n";
  for (std::size_t f = 0; f < cv.folds.size(); ++f) {
    out += std::to_string(f) + "," + std::to_string(cv.folds[f].n) + "," +
           csv::FormatDouble(cv.folds[f].rmsle) + "," +
           csv::FormatDouble(cv.folds[f].r_squared) + "\n";
  }
  out += "mean,," + csv::FormatDouble(cv.mean_rmsle) + "," +
         csv::FormatDouble(cv.mean_r_squared) + "\n";
  out += "std,," + csv::FormatDouble(cv.std_rmsle) + "," +
         csv::FormatDouble(cv.std_r_squared) + "\n";
  return out;
}

std::string FormatGridSearch(const GridSearchResult& result) {
  std::string out =
      "config,max_depth,min_child_weight,eta,subsample,colsample_bytree,rounds,"
      "lambda,gamma,mean_rmsle,std_rmsle,mean_r_squared,best\n";
  for (std::size_t i = 0; i < result.table.size(); ++i) {
    const Hyperparams& p = result.table[i].params;
    const CvResult& cv = result.table[i].cv;
    out += std::to_string(i) + "," + std::to_string(p.max_depth) + "," +
           csv::FormatDouble(p.min_child_weight) + "," + csv::FormatDouble(p.eta) +
           "," + csv::FormatDouble(p.subsample) + "," +
           csv::FormatDouble(p.colsample_bytree) + "," + std::to_string(p.rounds) +
           "," + csv::FormatDouble(p.lambda) + "," + csv::FormatDouble(p.gamma) +
           "," + csv::FormatDouble(cv.mean_rmsle) + "," +
           csv::FormatDouble(cv.std_rmsle) + "," +
           csv::FormatDouble(cv.mean_r_squared) + "," +
           (i == result.best ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace truckflow
