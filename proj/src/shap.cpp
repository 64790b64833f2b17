#include "truckflow/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "truckflow/error.hpp"

namespace truckflow {
namespace {

void CheckInstance(const GBTModel& model, std::span<const double> instance) {
  if (instance.size() != model.num_features()) {
    throw Error(ErrorCode::kInvalidArgument,
                "instance has " + std::to_string(instance.size()) +
                    " features, model expects " +
                    std::to_string(model.num_features()));
  }
  for (double v : instance) {
    if (std::isnan(v)) throw Error(ErrorCode::kDomain, "NaN in instance");
  }
}

double ConditionalExpectation(const Tree& tree, int idx,
                              std::span<const double> x, std::uint64_t subset) {
  const TreeNode& n = tree.nodes[idx];
  if (n.is_leaf()) return n.value;
  if (subset >> n.feature & 1u) {
    return ConditionalExpectation(tree, x[n.feature] < n.threshold ? n.left : n.right,
                                  x, subset);
  }
  const TreeNode& l = tree.nodes[n.left];
  const TreeNode& r = tree.nodes[n.right];
  if (!(n.cover > 0.0) || !(l.cover > 0.0) || !(r.cover > 0.0)) {
    throw Error(ErrorCode::kModel, "tree node with non-positive cover");
  }
  return (l.cover * ConditionalExpectation(tree, n.left, x, subset) +
          r.cover * ConditionalExpectation(tree, n.right, x, subset)) /
         n.cover;
}

// 1 / (n * C(n-1, k)) = k! (n-k-1)! / n!, for n up to `limit`.
class WeightTable {
 public:
  // half_pair selects the interaction weights k!(n-k-2)! / (2 (n-1)!).
  double Shapley(std::size_t n, std::size_t k) {
    Grow(n);
    return shapley_[n][k];
  }
  double Pair(std::size_t n, std::size_t k) {
    Grow(n);
    return pair_[n][k];
  }

 private:
  static double Binomial(std::size_t n, std::size_t k) {
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
      c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return c;
  }
  void Grow(std::size_t n) {
    while (shapley_.size() <= n) {
      const std::size_t d = shapley_.size();
      std::vector<double> s(d + 1, 0.0), p(d + 1, 0.0);
      for (std::size_t k = 0; d >= 1 && k + 1 <= d; ++k) {
        s[k] = 1.0 / (static_cast<double>(d) * Binomial(d - 1, k));
      }
      for (std::size_t k = 0; d >= 2 && k + 2 <= d; ++k) {
        p[k] = 1.0 / (2.0 * static_cast<double>(d - 1) * Binomial(d - 2, k));
      }
      shapley_.push_back(std::move(s));
      pair_.push_back(std::move(p));
    }
  }
  std::vector<std::vector<double>> shapley_;
  std::vector<std::vector<double>> pair_;
};

WeightTable& Weights() {
  thread_local WeightTable table;
  return table;
}

struct PathElement {
  int feature;
  double one;   // product of "instance follows this branch" indicators
  double zero;  // product of cover fractions along this branch
};

// Coefficients of prod (zero_e + one_e z) over the path.
void PathPolynomial(std::span<const PathElement> path, std::vector<double>& c) {
  c.assign(path.size() + 1, 0.0);
  c[0] = 1.0;
  for (std::size_t e = 0; e < path.size(); ++e) {
    for (std::size_t k = e + 1; k > 0; --k) {
      c[k] = c[k] * path[e].zero + c[k - 1] * path[e].one;
    }
    c[0] *= path[e].zero;
  }
}

// q = p / (zero + one z). `one` is 0 or 1 and 0 < zero <= 1, which keeps the
// top-down recurrence from amplifying rounding error.
void DivideFactor(std::span<const double> p, const PathElement& f,
                  std::vector<double>& q) {
  const std::size_t deg = p.size() - 1;
  q.assign(deg, 0.0);
  if (f.one == 0.0) {
    for (std::size_t k = 0; k < deg; ++k) q[k] = p[k] / f.zero;
    return;
  }
  q[deg - 1] = p[deg] / f.one;
  for (std::size_t k = deg - 1; k > 0; --k) {
    q[k - 1] = (p[k] - f.zero * q[k]) / f.one;
  }
}

void CheckTreeFeatures(const Tree& tree) {
  std::vector<int> used;
  for (const auto& n : tree.nodes) {
    if (!n.is_leaf()) used.push_back(n.feature);
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  if (used.size() > kMaxTreeFeatures) {
    throw Error(ErrorCode::kGuard,
                "tree uses " + std::to_string(used.size()) +
                    " distinct features; limit is " +
                    std::to_string(kMaxTreeFeatures));
  }
}

// Depth-first walk that hands every leaf's merged path to a visitor.
class PathWalker {
 public:
  PathWalker(const Tree& tree, std::span<const double> x) : tree_(tree), x_(x) {}

  template <typename Visitor>
  void Walk(Visitor&& visit) {
    path_.clear();
    Recurse(0, visit);
  }

 private:
  template <typename Visitor>
  void Recurse(int idx, Visitor& visit) {
    const TreeNode& n = tree_.nodes[idx];
    if (n.is_leaf()) {
      visit(std::span<const PathElement>(path_), n.value);
      return;
    }
    if (!(n.cover > 0.0)) {
      throw Error(ErrorCode::kModel, "tree node with non-positive cover");
    }
    const int hot = x_[n.feature] < n.threshold ? n.left : n.right;
    for (int child : {n.left, n.right}) {
      const double one = child == hot ? 1.0 : 0.0;
      const double zero = tree_.nodes[child].cover / n.cover;
      auto it = std::find_if(path_.begin(), path_.end(), [&](const PathElement& e) {
        return e.feature == n.feature;
      });
      if (it != path_.end()) {
        const std::size_t pos = static_cast<std::size_t>(it - path_.begin());
        const PathElement saved = *it;
        path_[pos].one *= one;
        path_[pos].zero *= zero;
        Recurse(child, visit);
        path_[pos] = saved;
      } else {
        path_.push_back({n.feature, one, zero});
        Recurse(child, visit);
        path_.pop_back();
      }
    }
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::vector<PathElement> path_;
};

}  // namespace

double TreeConditionalExpectation(const Tree& tree,
                                  std::span<const double> instance,
                                  std::uint64_t subset) {
  return ConditionalExpectation(tree, 0, instance, subset);
}

double TreeExpectedValue(const Tree& tree) {
  double sum = 0.0;
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) sum += n.cover * n.value;
  }
  if (!(tree.nodes[0].cover > 0.0)) {
    throw Error(ErrorCode::kModel, "tree root with non-positive cover");
  }
  return sum / tree.nodes[0].cover;
}

namespace {

std::vector<double> CoalitionValues(const GBTModel& model,
                                    std::span<const double> x) {
  const std::size_t m = model.num_features();
  if (m > kMaxExactFeatures) {
    throw Error(ErrorCode::kGuard,
                "exact enumeration supports at most " +
                    std::to_string(kMaxExactFeatures) + " features, model has " +
                    std::to_string(m) + "; use the fast explainer");
  }
  std::vector<double> v(std::size_t{1} << m);
  for (std::uint64_t s = 0; s < v.size(); ++s) {
    double sum = model.base_score;
    for (const Tree& t : model.trees) sum += TreeConditionalExpectation(t, x, s);
    v[s] = sum;
  }
  return v;
}

}  // namespace

ShapExplanation ShapExact(const GBTModel& model, std::span<const double> instance) {
  CheckInstance(model, instance);
  const std::size_t m = model.num_features();
  const std::vector<double> v = CoalitionValues(model, instance);
  ShapExplanation out;
  out.base_value = v.front();
  out.prediction = v.back();
  out.phi.assign(m, 0.0);
  auto& w = Weights();
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double phi = 0.0;
    for (std::uint64_t s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(std::popcount(s));
      phi += w.Shapley(m, size) * (v[s | bit] - v[s]);
    }
    out.phi[i] = phi;
  }
  return out;
}

InteractionMatrix ShapInteractionsExact(const GBTModel& model,
                                        std::span<const double> instance) {
  CheckInstance(model, instance);
  const std::size_t m = model.num_features();
  const std::vector<double> v = CoalitionValues(model, instance);
  const ShapExplanation phi = ShapExact(model, instance);
  InteractionMatrix out{m, std::vector<double>(m * m, 0.0)};
  auto& w = Weights();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const std::uint64_t bi = std::uint64_t{1} << i;
      const std::uint64_t bj = std::uint64_t{1} << j;
      double sum = 0.0;
      for (std::uint64_t s = 0; s < v.size(); ++s) {
        if (s & (bi | bj)) continue;
        const auto size = static_cast<std::size_t>(std::popcount(s));
        sum += w.Pair(m, size) * (v[s | bi | bj] - v[s | bi] - v[s | bj] + v[s]);
      }
      out.at(i, j) = sum;
      out.at(j, i) = sum;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) off += out.at(i, j);
    }
    out.at(i, i) = phi.phi[i] - off;
  }
  return out;
}

ShapExplanation ShapFast(const GBTModel& model, std::span<const double> instance) {
  CheckInstance(model, instance);
  ShapExplanation out;
  out.phi.assign(model.num_features(), 0.0);
  out.base_value = model.base_score;
  out.prediction = model.base_score;
  auto& w = Weights();
  std::vector<double> poly, quotient;
  for (const Tree& tree : model.trees) {
    CheckTreeFeatures(tree);
    out.base_value += TreeExpectedValue(tree);
    out.prediction += tree.Predict(instance);
    PathWalker(tree, instance).Walk([&](std::span<const PathElement> path,
                                        double value) {
      if (path.empty() || value == 0.0) return;
      const std::size_t d = path.size();
      PathPolynomial(path, poly);
      for (const PathElement& e : path) {
        const double scale = e.one - e.zero;
        if (scale == 0.0) continue;
        DivideFactor(poly, e, quotient);
        double sum = 0.0;
        for (std::size_t k = 0; k < d; ++k) sum += w.Shapley(d, k) * quotient[k];
        out.phi[e.feature] += value * scale * sum;
      }
    });
  }
  return out;
}

namespace {

// Adds every leaf's contribution to the off-diagonal entries.
void AccumulatePairs(const Tree& tree, std::span<const double> x,
                     InteractionMatrix& out) {
  auto& w = Weights();
  std::vector<double> poly, q1, q2;
  PathWalker(tree, x).Walk([&](std::span<const PathElement> path, double value) {
    const std::size_t d = path.size();
    if (d < 2 || value == 0.0) return;
    PathPolynomial(path, poly);
    for (std::size_t a = 0; a < d; ++a) {
      const double sa = path[a].one - path[a].zero;
      if (sa == 0.0) continue;
      DivideFactor(poly, path[a], q1);
      for (std::size_t b = a + 1; b < d; ++b) {
        const double sb = path[b].one - path[b].zero;
        if (sb == 0.0) continue;
        DivideFactor(q1, path[b], q2);
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < d; ++k) sum += w.Pair(d, k) * q2[k];
        const double c = value * sa * sb * sum;
        out.at(static_cast<std::size_t>(path[a].feature),
               static_cast<std::size_t>(path[b].feature)) += c;
      }
    }
  });
}

}  // namespace

InteractionMatrix ShapInteractions(const GBTModel& model,
                                   std::span<const double> instance) {
  const ShapExplanation phi = ShapFast(model, instance);
  const std::size_t m = model.num_features();
  InteractionMatrix upper{m, std::vector<double>(m * m, 0.0)};
  for (const Tree& tree : model.trees) AccumulatePairs(tree, instance, upper);

  InteractionMatrix out{m, std::vector<double>(m * m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      // Path order is arbitrary, so a pair may land in either triangle.
      const double v = upper.at(i, j) + upper.at(j, i);
      out.at(i, j) = v;
      out.at(j, i) = v;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) off += out.at(i, j);
    }
    out.at(i, i) = phi.phi[i] - off;
  }
  return out;
}

double ShapInteractionPair(const GBTModel& model,
                           std::span<const double> instance, std::size_t a,
                           std::size_t b) {
  CheckInstance(model, instance);
  if (a >= model.num_features() || b >= model.num_features() || a == b) {
    throw Error(ErrorCode::kInvalidArgument,
                "interaction pair needs two distinct valid feature indices");
  }
  auto& w = Weights();
  std::vector<double> poly, q1, q2;
  double total = 0.0;
  for (const Tree& tree : model.trees) {
    CheckTreeFeatures(tree);
    PathWalker(tree, instance).Walk([&](std::span<const PathElement> path,
                                        double value) {
      const std::size_t d = path.size();
      if (d < 2 || value == 0.0) return;
      const auto ia = std::find_if(path.begin(), path.end(), [&](const PathElement& e) {
        return e.feature == static_cast<int>(a);
      });
      const auto ib = std::find_if(path.begin(), path.end(), [&](const PathElement& e) {
        return e.feature == static_cast<int>(b);
      });
      if (ia == path.end() || ib == path.end()) return;
      const double sa = ia->one - ia->zero;
      const double sb = ib->one - ib->zero;
      if (sa == 0.0 || sb == 0.0) return;
      PathPolynomial(path, poly);
      DivideFactor(poly, *ia, q1);
      DivideFactor(q1, *ib, q2);
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < d; ++k) sum += w.Pair(d, k) * q2[k];
      total += value * sa * sb * sum;
    });
  }
  return total;
}

std::vector<ShapExplanation> ExplainBatch(const GBTModel& model,
                                          const FeatureMatrix& matrix) {
  std::vector<ShapExplanation> out;
  out.reserve(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out.push_back(ShapFast(model, matrix.row(i)));
  }
  return out;
}

double PearsonCorrelation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

GlobalImportance ComputeGlobalImportance(
    const std::vector<ShapExplanation>& explanations,
    const FeatureMatrix& sample, SignReference sign) {
  if (explanations.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "global importance of an empty sample");
  }
  if (explanations.size() != sample.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                "explanations and sample rows differ in count");
  }
  const std::size_t m = sample.cols();
  const std::size_t n = explanations.size();
  GlobalImportance out(m);
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      phi[i] = explanations[i].phi[j];
      total += std::abs(phi[i]);
    }
    const std::vector<double> values = sample.column(j);
    out[j].feature = j;
    out[j].name = sample.feature_names[j];
    out[j].mean_abs_phi = total / static_cast<double>(n);
    out[j].correlation = sign == SignReference::kTarget
                             ? PearsonCorrelation(values, sample.target)
                             : PearsonCorrelation(values, phi);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FeatureImportance& a, const FeatureImportance& b) {
                     return a.mean_abs_phi > b.mean_abs_phi;
                   });
  return out;
}

GlobalImportance ComputeGlobalImportance(const GBTModel& model,
                                         const FeatureMatrix& sample) {
  return ComputeGlobalImportance(ExplainBatch(model, sample), sample);
}

std::optional<double> ZeroCrossingThreshold(
    std::vector<std::pair<double, double>> points, std::size_t window) {
  const std::size_t n = points.size();
  if (n < 10) return std::nullopt;
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Centered average; the half-width shrinks symmetrically near the ends.
  const std::size_t half = std::max<std::size_t>(window, 1) / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + points[i].second;
  std::vector<double> smooth(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t h = std::min({half, k, n - 1 - k});
    smooth[k] = (prefix[k + h + 1] - prefix[k - h]) / static_cast<double>(2 * h + 1);
    if (std::abs(smooth[k]) < 1e-12 * (std::abs(prefix[k + h + 1]) + std::abs(prefix[k - h]))) {
      smooth[k] = 0.0;  // cancellation residue
    }
  }

  // First sign change between nonzero values; zeros in between are the root.
  std::optional<std::size_t> last_nonzero;
  for (std::size_t k = 0; k < n; ++k) {
    if (smooth[k] == 0.0) continue;
    if (last_nonzero) {
      const std::size_t p = *last_nonzero;
      if ((smooth[p] > 0.0) != (smooth[k] > 0.0)) {
        if (k == p + 1) {
          const double x0 = points[p].first, x1 = points[k].first;
          const double y0 = smooth[p], y1 = smooth[k];
          return x0 + (x1 - x0) * (y0 / (y0 - y1));
        }
        double sum = 0.0;
        for (std::size_t z = p + 1; z < k; ++z) sum += points[z].first;
        return sum / static_cast<double>(k - p - 1);
      }
    }
    last_nonzero = k;
  }
  return std::nullopt;
}

}  // namespace truckflow
