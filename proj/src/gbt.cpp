#include "truckflow/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"
#include "truckflow/rng.hpp"

namespace truckflow {

void Hyperparams::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "invalid hyperparameter: " + what);
  };
  if (max_depth < 1) fail("max_depth must be >= 1");
  if (!(min_child_weight >= 0.0)) fail("min_child_weight must be >= 0");
  if (!(eta > 0.0 && eta <= 1.0)) fail("eta must be in (0, 1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail("subsample must be in (0, 1]");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) {
    fail("colsample_bytree must be in (0, 1]");
  }
  if (rounds < 1) fail("rounds must be >= 1");
  if (!(lambda >= 0.0)) fail("lambda must be >= 0");
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (early_stopping_rounds < 0) fail("early_stopping_rounds must be >= 0");
}

int Tree::LeafIndex(std::span<const double> row) const {
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const TreeNode& n = nodes[idx];
    idx = row[n.feature] < n.threshold ? n.left : n.right;
  }
  return idx;
}

double Tree::Predict(std::span<const double> row) const {
  return nodes[LeafIndex(row)].value;
}

int Tree::Depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes[i].is_leaf()) {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

double GBTModel::Predict(std::span<const double> row) const {
  if (row.size() != num_features()) {
    throw Error(ErrorCode::kInvalidArgument,
                "row has " + std::to_string(row.size()) +
                    " features, model expects " +
                    std::to_string(num_features()));
  }
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (std::isnan(row[j])) {
      throw Error(ErrorCode::kDomain, "NaN in feature " + feature_names[j]);
    }
  }
  double sum = base_score;
  for (const Tree& t : trees) sum += t.Predict(row);
  return sum;
}

std::vector<double> GBTModel::PredictBatch(const FeatureMatrix& matrix) const {
  std::vector<double> out(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) out[i] = Predict(matrix.row(i));
  return out;
}

void GBTModel::Validate() const {
  if (!std::isfinite(base_score)) {
    throw Error(ErrorCode::kModel, "base_score is not finite");
  }
  for (std::size_t t = 0; t < trees.size(); ++t) {
    const auto& nodes = trees[t].nodes;
    const std::string where = "tree " + std::to_string(t);
    if (nodes.empty()) throw Error(ErrorCode::kModel, where + " has no nodes");
    std::vector<int> parents(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const TreeNode& n = nodes[i];
      const std::string at = where + ", node " + std::to_string(i);
      if (!(n.cover > 0.0) || !std::isfinite(n.cover)) {
        throw Error(ErrorCode::kModel, at + ": cover must be positive");
      }
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) {
          throw Error(ErrorCode::kModel, at + ": leaf value not finite");
        }
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= num_features()) {
        throw Error(ErrorCode::kModel, at + ": feature index out of range");
      }
      if (!std::isfinite(n.threshold)) {
        throw Error(ErrorCode::kModel, at + ": threshold not finite");
      }
      for (int child : {n.left, n.right}) {
        if (child <= static_cast<int>(i) ||
            child >= static_cast<int>(nodes.size())) {
          throw Error(ErrorCode::kModel, at + ": invalid child index");
        }
        if (++parents[child] > 1) {
          throw Error(ErrorCode::kModel, at + ": node shared by two parents");
        }
      }
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (parents[i] != 1) {
        throw Error(ErrorCode::kModel, where + ": unreachable node " +
                                           std::to_string(i));
      }
    }
  }
}

double LeafWeight(double grad_sum, double hess_sum, double lambda) {
  const double w = -grad_sum / (hess_sum + lambda);
  return w == 0.0 ? 0.0 : w;
}

constexpr double kGainTieTolerance = 1e-10;

double SplitGain(double grad_left, double hess_left, double grad_right,
                 double hess_right, double lambda, double gamma) {
  const double g = grad_left + grad_right;
  const double h = hess_left + hess_right;
  return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                grad_right * grad_right / (hess_right + lambda) -
                g * g / (h + lambda)) -
         gamma;
}

std::optional<SplitDecision> BestSplit(std::span<const SortedColumn> columns,
                                       const Hyperparams& params) {
  std::optional<SplitDecision> best;
  for (const SortedColumn& col : columns) {
    const std::size_t n = col.values.size();
    if (n < 2) continue;
    double grad_total = 0.0;
    double hess_total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      grad_total += col.grad[k];
      hess_total += col.hess[k];
    }
    double grad_left = 0.0;
    double hess_left = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      grad_left += col.grad[k];
      hess_left += col.hess[k];
      const double lo = col.values[k];
      const double hi = col.values[k + 1];
      if (!(lo < hi)) continue;
      const double hess_right = hess_total - hess_left;
      if (hess_left < params.min_child_weight ||
          hess_right < params.min_child_weight) {
        continue;
      }
      const double gain =
          SplitGain(grad_left, hess_left, grad_total - grad_left, hess_right,
                    params.lambda, params.gamma);
      if (!(gain > 0.0)) continue;
      // Equal gains reached through different summation orders differ in
      // the last bits; treat them as ties so the earlier candidate stays.
      if (best && !(gain > best->gain + kGainTieTolerance * std::max(1.0, best->gain))) {
        continue;
      }
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold > lo)) threshold = hi;
      best = SplitDecision{col.feature, threshold, gain};
    }
  }
  return best;
}

namespace {

using RowList = std::vector<std::uint32_t>;

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, const Hyperparams& params,
              std::span<const double> grad)
      : data_(data), params_(params), grad_(grad) {}

  // `sorted[k]` lists the sampled rows ordered by feature `features[k]`.
  Tree Build(std::vector<RowList> sorted,
             const std::vector<std::size_t>& features) {
    features_ = &features;
    tree_ = Tree{};
    goes_left_.assign(data_.rows(), 0);
    Grow(std::move(sorted), 0);
    return std::move(tree_);
  }

 private:
  int Grow(std::vector<RowList> sorted, int depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    // Node totals in ascending row order.
    RowList rows = sorted.front();
    std::sort(rows.begin(), rows.end());
    double grad_sum = 0.0;
    for (auto r : rows) grad_sum += grad_[r];
    const double hess_sum = static_cast<double>(rows.size());

    std::optional<SplitDecision> split;
    if (depth < params_.max_depth && rows.size() >= 2) {
      split = FindSplit(sorted);
    }
    if (!split) {
      const double w = params_.eta * LeafWeight(grad_sum, hess_sum, params_.lambda);
      tree_.nodes[id].value = w == 0.0 ? 0.0 : w;
      return id;
    }

    for (auto r : rows) {
      goes_left_[r] = data_.at(r, split->feature) < split->threshold;
    }
    std::vector<RowList> left(sorted.size()), right(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      left[k].reserve(sorted[k].size());
      right[k].reserve(sorted[k].size());
      for (auto r : sorted[k]) (goes_left_[r] ? left[k] : right[k]).push_back(r);
    }
    sorted.clear();
    sorted.shrink_to_fit();

    const int l = Grow(std::move(left), depth + 1);
    const int r = Grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  std::optional<SplitDecision> FindSplit(const std::vector<RowList>& sorted) {
    const std::size_t n = sorted.front().size();
    values_.resize(sorted.size() * n);
    grads_.resize(sorted.size() * n);
    hess_.assign(sorted.size() * n, 1.0);
    std::vector<SortedColumn> columns(sorted.size());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const std::size_t f = (*features_)[k];
      double* v = values_.data() + k * n;
      double* g = grads_.data() + k * n;
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = data_.at(sorted[k][i], f);
        g[i] = grad_[sorted[k][i]];
      }
      columns[k] = SortedColumn{f, {v, n}, {g, n}, {hess_.data() + k * n, n}};
    }
    return BestSplit(columns, params_);
  }

  const FeatureMatrix& data_;
  const Hyperparams& params_;
  std::span<const double> grad_;
  const std::vector<std::size_t>* features_ = nullptr;
  Tree tree_;
  std::vector<char> goes_left_;
  std::vector<double> values_, grads_, hess_;
};

double Rmse(std::span<const double> pred, std::span<const double> target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pred.size()));
}

// Routes every row and recomputes node covers (hessian = 1 per row).
void RecomputeCovers(Tree& tree, const FeatureMatrix& data) {
  for (auto& n : tree.nodes) n.cover = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto row = data.row(i);
    int idx = 0;
    while (true) {
      TreeNode& n = tree.nodes[idx];
      n.cover += 1.0;
      if (n.is_leaf()) break;
      idx = row[n.feature] < n.threshold ? n.left : n.right;
    }
  }
}

}  // namespace

GBTModel Train(const FeatureMatrix& train, const Hyperparams& params,
               TrainingLog* log, const FeatureMatrix* validation) {
  params.Validate();
  train.Validate();
  const std::size_t n = train.rows();
  const std::size_t m = train.cols();
  if (n < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "training needs at least 2 rows, got " + std::to_string(n));
  }
  if (m == 0) throw Error(ErrorCode::kInvalidArgument, "no feature columns");
  if (validation) {
    validation->Validate();
    if (validation->cols() != m) {
      throw Error(ErrorCode::kInvalidArgument,
                  "validation set has a different column count");
    }
  }

  GBTModel model;
  model.params = params;
  model.feature_names = train.feature_names;
  const bool constant = std::all_of(train.target.begin(), train.target.end(),
                                    [&](double y) { return y == train.target[0]; });
  if (constant) {
    model.base_score = train.target[0];
  } else {
    double sum = 0.0;
    for (double y : train.target) sum += y;
    model.base_score = sum / static_cast<double>(n);
  }

  // Global presort per feature; ties keep row order.
  std::vector<RowList> order(m, RowList(n));
  for (std::size_t f = 0; f < m; ++f) {
    std::iota(order[f].begin(), order[f].end(), 0u);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return train.at(a, f) < train.at(b, f);
                     });
  }

  std::vector<double> pred(n, model.base_score);
  std::vector<double> grad(n);
  std::vector<double> valid_pred;
  if (validation) valid_pred.assign(validation->rows(), model.base_score);

  const std::size_t row_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
  const std::size_t col_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(params.colsample_bytree *
                                  static_cast<double>(m)));

  Rng rng(params.seed);
  TreeBuilder builder(train, params, grad);
  std::vector<char> in_sample(n);
  double best_valid = INFINITY;
  std::size_t best_rounds = 0;
  TrainingLog local_log;

  for (int round = 0; round < params.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - train.target[i];

    std::fill(in_sample.begin(), in_sample.end(), 0);
    if (row_count == n) {
      std::fill(in_sample.begin(), in_sample.end(), 1);
    } else {
      for (auto r : rng.SampleWithoutReplacement(n, row_count)) in_sample[r] = 1;
    }
    std::vector<std::size_t> features;
    if (col_count == m) {
      features.resize(m);
      std::iota(features.begin(), features.end(), 0);
    } else {
      features = rng.SampleWithoutReplacement(m, col_count);
    }

    std::vector<RowList> sorted(features.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
      sorted[k].reserve(row_count);
      for (auto r : order[features[k]]) {
        if (in_sample[r]) sorted[k].push_back(r);
      }
    }
    Tree tree = builder.Build(std::move(sorted), features);
    RecomputeCovers(tree, train);

    for (std::size_t i = 0; i < n; ++i) pred[i] += tree.Predict(train.row(i));
    model.trees.push_back(std::move(tree));
    local_log.train_rmse.push_back(Rmse(pred, train.target));

    if (validation) {
      const Tree& added = model.trees.back();
      for (std::size_t i = 0; i < validation->rows(); ++i) {
        valid_pred[i] += added.Predict(validation->row(i));
      }
      const double score = Rmse(valid_pred, validation->target);
      local_log.valid_rmse.push_back(score);
      if (score < best_valid) {
        best_valid = score;
        best_rounds = model.trees.size();
      } else if (params.early_stopping_rounds > 0 &&
                 model.trees.size() - best_rounds >=
                     static_cast<std::size_t>(params.early_stopping_rounds)) {
        break;
      }
    }
  }
  if (validation && params.early_stopping_rounds > 0) {
    model.trees.resize(best_rounds);
  }
  local_log.best_rounds = model.trees.size();
  if (log) *log = std::move(local_log);
  return model;
}

}  // namespace truckflow
