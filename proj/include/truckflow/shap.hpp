#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "truckflow/features.hpp"
#include "truckflow/gbt.hpp"

namespace truckflow {

// Attributions use the path-dependent value function: a feature outside the
// coalition is marginalized by the cover-weighted average of both branches.
// For a coalition S, v(S) = base_score + sum over trees of v_T(S).

struct ShapExplanation {
  double base_value = 0.0;   // v(empty set)
  std::vector<double> phi;   // one entry per model feature
  double prediction = 0.0;   // v(all features)
};

// Symmetric M x M matrix; rows sum to the corresponding phi.
struct InteractionMatrix {
  std::size_t size = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * size + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * size + j]; }
};

struct FeatureImportance {
  std::size_t feature = 0;
  std::string name;
  double mean_abs_phi = 0.0;
  double correlation = 0.0;  // Pearson; 0 when either side has no variance
};

// Ordered by descending mean |phi|; ties keep feature order.
using GlobalImportance = std::vector<FeatureImportance>;

inline constexpr std::size_t kMaxExactFeatures = 20;
inline constexpr std::size_t kMaxTreeFeatures = 25;

// v_T(S) with S given as a bit mask over feature indices (features < 64).
double TreeConditionalExpectation(const Tree& tree,
                                  std::span<const double> instance,
                                  std::uint64_t subset);

// v_T(empty set): cover-weighted mean of the leaves.
double TreeExpectedValue(const Tree& tree);

// Brute force over all 2^M coalitions. M <= kMaxExactFeatures.
ShapExplanation ShapExact(const GBTModel& model, std::span<const double> instance);
InteractionMatrix ShapInteractionsExact(const GBTModel& model,
                                        std::span<const double> instance);

// Exact values computed tree by tree: each root-to-leaf path is a product
// game over the distinct features it tests, whose Shapley values follow from
// polynomial coefficients of the path. Requires every tree to use at most
// kMaxTreeFeatures distinct features.
ShapExplanation ShapFast(const GBTModel& model, std::span<const double> instance);
InteractionMatrix ShapInteractions(const GBTModel& model,
                                   std::span<const double> instance);
// Single off-diagonal entry Phi_ab (a != b).
double ShapInteractionPair(const GBTModel& model,
                           std::span<const double> instance, std::size_t a,
                           std::size_t b);

std::vector<ShapExplanation> ExplainBatch(const GBTModel& model,
                                          const FeatureMatrix& matrix);

// Sign reference: either each feature's own phi (default) or the target.
enum class SignReference { kAttribution, kTarget };

GlobalImportance ComputeGlobalImportance(
    const std::vector<ShapExplanation>& explanations,
    const FeatureMatrix& sample,
    SignReference sign = SignReference::kAttribution);
GlobalImportance ComputeGlobalImportance(const GBTModel& model,
                                         const FeatureMatrix& sample);

double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kDefaultSmoothingWindow = 51;

// Feature value where the smoothed dependence curve changes sign. Points are
// (feature value, phi). Returns nullopt with fewer than 10 points or no
// sign change.
std::optional<double> ZeroCrossingThreshold(
    std::vector<std::pair<double, double>> points,
    std::size_t window = kDefaultSmoothingWindow);

}  // namespace truckflow
