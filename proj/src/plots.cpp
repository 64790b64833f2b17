#include "truckflow/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"

namespace truckflow::plots {
namespace {

std::string Fixed(double v) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.2f", v);
  std::string s = buffer;
  return s == "-0.00" ? "0.00" : s;
}

std::string Escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg() {
    body_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Fixed(kWidth) +
            "\" height=\"" + Fixed(kHeight) + "\" viewBox=\"0 0 " + Fixed(kWidth) +
            " " + Fixed(kHeight) + "\">\n";
    Rect("background", 0, 0, kWidth, kHeight, "#ffffff");
  }

  void Rect(const char* cls, double x, double y, double w, double h,
            const std::string& fill, const std::string& extra = {}) {
    body_ += "<rect class=\"" + std::string(cls) + "\" x=\"" + Fixed(x) +
             "\" y=\"" + Fixed(y) + "\" width=\"" + Fixed(w) + "\" height=\"" +
             Fixed(h) + "\" fill=\"" + fill + "\"" + extra + "/>\n";
  }
  void Circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle class=\"point\" cx=\"" + Fixed(cx) + "\" cy=\"" + Fixed(cy) +
             "\" r=\"" + Fixed(r) + "\" fill=\"" + fill + "\"/>\n";
  }
  void Line(const char* cls, double x1, double y1, double x2, double y2,
            const std::string& stroke, const std::string& extra = {}) {
    body_ += "<line class=\"" + std::string(cls) + "\" x1=\"" + Fixed(x1) +
             "\" y1=\"" + Fixed(y1) + "\" x2=\"" + Fixed(x2) + "\" y2=\"" +
             Fixed(y2) + "\" stroke=\"" + stroke + "\"" + extra + "/>\n";
  }
  void Text(double x, double y, const std::string& text, const char* anchor = "start",
            int size = 12) {
    body_ += "<text x=\"" + Fixed(x) + "\" y=\"" + Fixed(y) +
             "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) +
             "\" text-anchor=\"" + anchor + "\">" + Escape(text) + "</text>\n";
  }
  std::string Finish() { return body_ + "</svg>\n"; }

 private:
  std::string body_;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;

  static Range Of(std::span<const double> v, bool include_zero) {
    Range r{INFINITY, -INFINITY};
    for (double x : v) {
      r.lo = std::min(r.lo, x);
      r.hi = std::max(r.hi, x);
    }
    if (v.empty()) r = {0.0, 0.0};
    if (include_zero) {
      r.lo = std::min(r.lo, 0.0);
      r.hi = std::max(r.hi, 0.0);
    }
    if (r.hi - r.lo <= 0.0) {
      r.lo -= 1.0;
      r.hi += 1.0;
    }
    const double pad = 0.05 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
  }
  double Map(double v, double out_lo, double out_hi) const {
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

// Scatter frame: plot box left/right/top/bottom.
struct Frame {
  double left = kMargin + 60.0;
  double right = kWidth - kMargin;
  double top = kMargin + 30.0;
  double bottom = kHeight - kMargin - 40.0;
};

void Axes(Svg& svg, const Frame& f, const Range& x, const Range& y,
          const std::string& x_label, const std::string& y_label) {
  svg.Line("axis", f.left, f.bottom, f.right, f.bottom, "#333333");
  svg.Line("axis", f.left, f.top, f.left, f.bottom, "#333333");
  for (int t = 0; t <= 4; ++t) {
    const double vx = x.lo + (x.hi - x.lo) * t / 4.0;
    const double px = x.Map(vx, f.left, f.right);
    svg.Text(px, f.bottom + 16.0, csv::FormatDouble(std::round(vx * 1000.0) / 1000.0),
             "middle", 10);
    const double vy = y.lo + (y.hi - y.lo) * t / 4.0;
    const double py = y.Map(vy, f.bottom, f.top);
    svg.Text(f.left - 4.0, py + 3.0,
             csv::FormatDouble(std::round(vy * 1000.0) / 1000.0), "end", 10);
  }
  svg.Text((f.left + f.right) / 2.0, kHeight - kMargin - 4.0, x_label, "middle");
  svg.Text(kMargin, f.top - 10.0, y_label);
}

std::vector<double> PhiColumn(const std::vector<ShapExplanation>& explanations,
                              std::size_t feature) {
  std::vector<double> out;
  out.reserve(explanations.size());
  for (const auto& e : explanations) out.push_back(e.phi.at(feature));
  return out;
}

// Deterministic vertical offset in [-0.5, 0.5) from the golden-ratio sequence.
double Jitter(std::size_t i) {
  constexpr double kGolden = 0.6180339887498949;
  const double v = static_cast<double>(i + 1) * kGolden;
  return v - std::floor(v) - 0.5;
}

}  // namespace

std::string RampColor(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto mix = [t](int a, int b) {
    return static_cast<int>(std::lround(a + (b - a) * t));
  };
  char buffer[8];
  std::snprintf(buffer, sizeof(buffer), "#%02x%02x%02x", mix(0x00, 0xff),
                mix(0x8b, 0x00), mix(0xfb, 0x51));
  return buffer;
}

std::vector<double> Normalize(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.5);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (!(span > 0.0)) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - *lo) / span;
  }
  return out;
}

std::string PlotImportance(const GlobalImportance& importance) {
  if (importance.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "importance plot needs at least one feature");
  }
  Svg svg;
  svg.Text(kWidth / 2.0, kMargin + 14.0, "mean |SHAP value|", "middle", 14);
  const double x0 = kMargin + kLabelWidth;
  const double x1 = kWidth - kMargin;
  const double top = kMargin + 30.0;
  const double row = (kHeight - kMargin - top) / static_cast<double>(importance.size());
  double max_value = 0.0;
  for (const auto& f : importance) max_value = std::max(max_value, f.mean_abs_phi);
  for (std::size_t i = 0; i < importance.size(); ++i) {
    const auto& f = importance[i];
    const double width = max_value > 0.0 ? f.mean_abs_phi / max_value * (x1 - x0) : 0.0;
    const double y = top + row * static_cast<double>(i);
    svg.Rect("bar", x0, y + 0.15 * row, width, 0.7 * row,
             f.correlation >= 0.0 ? kPositiveColor : kNegativeColor,
             " data-feature=\"" + Escape(f.name) + "\" data-value=\"" +
                 csv::FormatDouble(f.mean_abs_phi) + "\"");
    svg.Text(x0 - 6.0, y + 0.5 * row + 4.0, f.name, "end");
  }
  return svg.Finish();
}

std::string PlotBeeswarm(const std::vector<ShapExplanation>& explanations,
                         const FeatureMatrix& sample) {
  if (explanations.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "beeswarm plot needs at least one explanation");
  }
  const GlobalImportance order = ComputeGlobalImportance(explanations, sample);
  std::vector<double> all_phi;
  for (const auto& e : explanations) all_phi.insert(all_phi.end(), e.phi.begin(), e.phi.end());
  const Range xr = Range::Of(all_phi, true);

  Svg svg;
  const double x0 = kMargin + kLabelWidth;
  const double x1 = kWidth - kMargin;
  const double top = kMargin + 30.0;
  const double bottom = kHeight - kMargin - 30.0;
  const double row = (bottom - top) / static_cast<double>(order.size());
  svg.Text((x0 + x1) / 2.0, kMargin + 14.0, "SHAP value (impact on model output)",
           "middle", 14);
  const double zero_x = xr.Map(0.0, x0, x1);
  svg.Line("zero-line", zero_x, top, zero_x, bottom, "#999999");
  svg.Text(x0, kHeight - kMargin - 8.0, "feature value: low", "start", 10);
  svg.Text(x1, kHeight - kMargin - 8.0, "high", "end", 10);

  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t f = order[r].feature;
    const double center = top + row * (static_cast<double>(r) + 0.5);
    svg.Text(x0 - 6.0, center + 4.0, order[r].name, "end");
    const std::vector<double> t = Normalize(sample.column(f));
    for (std::size_t i = 0; i < explanations.size(); ++i) {
      svg.Circle(xr.Map(explanations[i].phi[f], x0, x1),
                 center + 0.8 * row * Jitter(i), 2.5, RampColor(t[i]));
    }
  }
  return svg.Finish();
}

std::string PlotDependence(std::size_t feature,
                           const std::vector<ShapExplanation>& explanations,
                           const FeatureMatrix& sample, std::size_t window) {
  if (feature >= sample.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "dependence plot: feature index out of range");
  }
  const std::vector<double> x = sample.column(feature);
  const std::vector<double> phi = PhiColumn(explanations, feature);
  const Range xr = Range::Of(x, false);
  const Range yr = Range::Of(phi, true);
  const std::string& name = sample.feature_names[feature];

  Svg svg;
  Frame f;
  Axes(svg, f, xr, yr, name, "SHAP value for " + name);
  const double zero_y = yr.Map(0.0, f.bottom, f.top);
  svg.Line("zero-line", f.left, zero_y, f.right, zero_y, "#999999");
  for (std::size_t i = 0; i < x.size(); ++i) {
    svg.Circle(xr.Map(x[i], f.left, f.right), yr.Map(phi[i], f.bottom, f.top), 2.5,
               kNegativeColor);
  }
  std::vector<std::pair<double, double>> points;
  for (std::size_t i = 0; i < x.size(); ++i) points.emplace_back(x[i], phi[i]);
  if (const auto threshold = ZeroCrossingThreshold(std::move(points), window)) {
    const double px = xr.Map(*threshold, f.left, f.right);
    svg.Line("threshold", px, f.top, px, f.bottom, kPositiveColor,
             " stroke-dasharray=\"4 3\" data-value=\"" + csv::FormatDouble(*threshold) +
                 "\"");
    svg.Text(px + 4.0, f.top + 12.0, "sign change at " + csv::FormatDouble(
                                         std::round(*threshold * 100.0) / 100.0));
  }
  return svg.Finish();
}

std::string PlotInteraction(const std::string& name_a, const std::string& name_b,
                            std::span<const double> values_a,
                            std::span<const double> values_b,
                            std::span<const double> interaction) {
  if (values_a.size() != interaction.size() || values_b.size() != interaction.size()) {
    throw Error(ErrorCode::kInvalidArgument, "interaction plot: column lengths differ");
  }
  const Range xr = Range::Of(values_a, false);
  const Range yr = Range::Of(interaction, true);
  const std::vector<double> t = Normalize(values_b);

  Svg svg;
  Frame f;
  Axes(svg, f, xr, yr, name_a, "SHAP interaction value " + name_a + " x " + name_b);
  const double zero_y = yr.Map(0.0, f.bottom, f.top);
  svg.Line("zero-line", f.left, zero_y, f.right, zero_y, "#999999");
  for (std::size_t i = 0; i < interaction.size(); ++i) {
    svg.Circle(xr.Map(values_a[i], f.left, f.right),
               yr.Map(interaction[i], f.bottom, f.top), 2.5, RampColor(t[i]));
  }
  svg.Text(f.right, f.top - 10.0, "color: " + name_b + " (low blue, high red)", "end", 10);
  return svg.Finish();
}

}  // namespace truckflow::plots
