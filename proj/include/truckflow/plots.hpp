#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "truckflow/features.hpp"
#include "truckflow/shap.hpp"

namespace truckflow::plots {

// Every chart is a fixed 800x600 canvas with a 10-unit margin. Elements carry
// a class (bar, point, zero-line, threshold) so output can be inspected.
inline constexpr double kWidth = 800.0;
inline constexpr double kHeight = 600.0;
inline constexpr double kMargin = 10.0;
inline constexpr double kLabelWidth = 150.0;

// Fill for positive (and zero) vs negative correlation; also the endpoints
// of the low-to-high value color ramp.
inline constexpr const char* kPositiveColor = "#ff0051";
inline constexpr const char* kNegativeColor = "#008bfb";

// Blue at t = 0 to red at t = 1, as "#rrggbb".
std::string RampColor(double t);

// Per-feature min-max normalization; constant columns map to 0.5.
std::vector<double> Normalize(std::span<const double> values);

// Horizontal bars in importance order, length proportional to mean |phi|.
std::string PlotImportance(const GlobalImportance& importance);

// One row per feature in importance order; x = phi, color = feature value.
std::string PlotBeeswarm(const std::vector<ShapExplanation>& explanations,
                         const FeatureMatrix& sample);

// Feature value vs phi with a zero line and the detected crossing.
std::string PlotDependence(std::size_t feature,
                           const std::vector<ShapExplanation>& explanations,
                           const FeatureMatrix& sample,
                           std::size_t window = kDefaultSmoothingWindow);

// Value of feature a vs Phi_ab, colored by the value of feature b.
std::string PlotInteraction(const std::string& name_a, const std::string& name_b,
                            std::span<const double> values_a,
                            std::span<const double> values_b,
                            std::span<const double> interaction);

}  // namespace truckflow::plots
