#include <expat.h>
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "test_support.hpp"
#include "truckflow/error.hpp"
#include "truckflow/plots.hpp"
#include "truckflow/shap.hpp"

namespace truckflow::plots {
namespace {

struct Element {
  std::string name;
  std::map<std::string, std::string> attrs;
  int depth = 0;

  double Num(const std::string& key) const { return std::stod(attrs.at(key)); }
};

struct ParsedSvg {
  bool ok = false;
  std::string error;
  std::vector<Element> elements;

  std::vector<Element> OfClass(const std::string& cls) const {
    std::vector<Element> out;
    for (const auto& e : elements) {
      const auto it = e.attrs.find("class");
      if (it != e.attrs.end() && it->second == cls) out.push_back(e);
    }
    return out;
  }
};

ParsedSvg Parse(const std::string& svg) {
  struct State {
    ParsedSvg result;
    int depth = 0;
  } state;
  XML_Parser parser = XML_ParserCreate("UTF-8");
  XML_SetUserData(parser, &state);
  XML_SetElementHandler(
      parser,
      [](void* data, const XML_Char* name, const XML_Char** attrs) {
        auto* s = static_cast<State*>(data);
        Element e{name, {}, s->depth++};
        for (int i = 0; attrs[i]; i += 2) e.attrs[attrs[i]] = attrs[i + 1];
        s->result.elements.push_back(std::move(e));
      },
      [](void* data, const XML_Char*) { --static_cast<State*>(data)->depth; });
  state.result.ok =
      XML_Parse(parser, svg.data(), static_cast<int>(svg.size()), 1) == XML_STATUS_OK;
  if (!state.result.ok) state.result.error = XML_ErrorString(XML_GetErrorCode(parser));
  XML_ParserFree(parser);
  return state.result;
}

void ExpectWellFormed(const std::string& svg) {
  const auto p = Parse(svg);
  ASSERT_TRUE(p.ok) << p.error;
  int roots = 0;
  for (const auto& e : p.elements) roots += e.depth == 0;
  EXPECT_EQ(roots, 1);
  EXPECT_EQ(p.elements[0].name, "svg");
  EXPECT_EQ(p.elements[0].attrs.at("width"), "800.00");
  EXPECT_EQ(p.elements[0].attrs.at("height"), "600.00");
}

GlobalImportance Importance(std::vector<std::pair<std::string, double>> items) {
  GlobalImportance out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.push_back({i, items[i].first, items[i].second, i % 2 ? -0.5 : 0.5});
  }
  return out;
}

FeatureMatrix Sample(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * cols), t(rows);
  for (auto& x : v) x = rng.Uniform(0, 10);
  for (auto& x : t) x = rng.Uniform(0, 1);
  return testing::MatrixOf(cols, v, t);
}

std::vector<ShapExplanation> Explanations(const FeatureMatrix& m, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ShapExplanation> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    ShapExplanation e;
    for (std::size_t c = 0; c < m.cols(); ++c) e.phi.push_back(rng.Uniform(-1, 1) * (c + 1));
    out.push_back(e);
  }
  return out;
}

TEST(RampColor, EndpointsAreDocumentedColors) {
  EXPECT_EQ(RampColor(0), kNegativeColor);
  EXPECT_EQ(RampColor(1), kPositiveColor);
  EXPECT_EQ(RampColor(-3), kNegativeColor);
}

TEST(Normalize, ConstantColumnIsHalf) {
  const std::vector<double> c{4, 4, 4};
  EXPECT_EQ(Normalize(c), std::vector<double>(3, 0.5));
  const std::vector<double> v{2, 4, 6};
  EXPECT_EQ(Normalize(v), (std::vector<double>{0, 0.5, 1}));
}

TEST(PlotImportance, SingleBarSpansWidth) {
  const auto svg = PlotImportance(Importance({{"GCD", 3.0}}));
  ExpectWellFormed(svg);
  const auto bars = Parse(svg).OfClass("bar");
  ASSERT_EQ(bars.size(), 1u);
  EXPECT_EQ(bars[0].Num("width"), kWidth - 2 * kMargin - kLabelWidth);
  EXPECT_EQ(bars[0].attrs.at("fill"), kPositiveColor);
}

TEST(PlotImportance, BarLengthsProportional) {
  const auto svg = PlotImportance(Importance({{"a", 2.0}, {"b", 1.0}}));
  const auto bars = Parse(svg).OfClass("bar");
  ASSERT_EQ(bars.size(), 2u);
  EXPECT_NEAR(bars[0].Num("width"), 2 * bars[1].Num("width"), 1.0);
  EXPECT_LT(bars[0].Num("y"), bars[1].Num("y"));
  EXPECT_EQ(bars[1].attrs.at("fill"), kNegativeColor);
  EXPECT_EQ(bars[0].attrs.at("data-feature"), "a");
}

TEST(PlotImportance, EscapesNamesAndRejectsEmpty) {
  ExpectWellFormed(PlotImportance(Importance({{"a<b&\"c\"", 1.0}})));
  EXPECT_THROW(PlotImportance({}), Error);
}

TEST(PlotBeeswarm, OneInstanceOnePointPerFeatureAtPhi) {
  const auto m = Sample(1, 4, 1);
  ShapExplanation e;
  e.phi = {0.5, -1.0, 2.0, 0.25};
  const auto svg = PlotBeeswarm({e}, m);
  ExpectWellFormed(svg);
  const auto p = Parse(svg);
  const auto points = p.OfClass("point");
  ASSERT_EQ(points.size(), 4u);
  const double zero = p.OfClass("zero-line")[0].Num("x1");
  // Rows follow importance: 2.0, -1.0, 0.5, 0.25.
  const std::vector<double> phi{2.0, -1.0, 0.5, 0.25};
  const double scale = (points[0].Num("cx") - zero) / phi[0];
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(points[i].Num("cx"), zero + scale * phi[i], 0.02);
    if (i > 0) {
      EXPECT_GT(points[i].Num("cy"), points[i - 1].Num("cy"));
    }
  }
}

TEST(PlotBeeswarm, PointCountAndConstantFeatureColor) {
  auto m = Sample(37, 5, 2);
  for (std::size_t r = 0; r < m.rows(); ++r) m.values[r * 5 + 2] = 1.0;
  const auto ex = Explanations(m, 3);
  const auto svg = PlotBeeswarm(ex, m);
  ExpectWellFormed(svg);
  const auto points = Parse(svg).OfClass("point");
  EXPECT_EQ(points.size(), 37u * 5u);
  // Feature 2 has the third-largest phi scale, so it sits in row 2 (0-based)
  // once ranked by mean |phi| (scales 5, 4, 3, 2, 1 by construction).
  std::set<std::string> colors;
  for (std::size_t i = 2 * 37; i < 3 * 37; ++i) colors.insert(points[i].attrs.at("fill"));
  EXPECT_EQ(colors, std::set<std::string>{RampColor(0.5)});
}

TEST(PlotBeeswarm, DeterministicBytes) {
  const auto m = Sample(50, 3, 4);
  const auto ex = Explanations(m, 5);
  EXPECT_EQ(PlotBeeswarm(ex, m), PlotBeeswarm(ex, m));
}

TEST(PlotDependence, LinearPhiAnnotatesFive) {
  std::vector<double> values, target;
  std::vector<ShapExplanation> ex;
  for (int i = 0; i <= 100; ++i) {
    values.push_back(i * 0.1);
    target.push_back(0);
    ShapExplanation e;
    e.phi = {i * 0.1 - 5.0};
    ex.push_back(e);
  }
  const auto m = testing::MatrixOf(1, values, target);
  const auto svg = PlotDependence(0, ex, m, 5);
  ExpectWellFormed(svg);
  const auto p = Parse(svg);
  const auto th = p.OfClass("threshold");
  ASSERT_EQ(th.size(), 1u);
  EXPECT_NEAR(th[0].Num("data-value"), 5.0, 0.1);
  EXPECT_EQ(p.OfClass("point").size(), 101u);
  EXPECT_EQ(p.OfClass("zero-line").size(), 1u);
}

TEST(PlotDependence, NoCrossingNoAnnotation) {
  const auto m = Sample(30, 2, 6);
  auto ex = Explanations(m, 7);
  for (auto& e : ex) e.phi[1] = std::abs(e.phi[1]) + 0.1;
  const auto p = Parse(PlotDependence(1, ex, m));
  EXPECT_TRUE(p.OfClass("threshold").empty());
  EXPECT_THROW(PlotDependence(9, ex, m), Error);
}

TEST(PlotInteraction, PointPerInstance) {
  Rng rng(8);
  std::vector<double> a(42), b(42), phi(42);
  for (std::size_t i = 0; i < 42; ++i) {
    a[i] = rng.Uniform(0, 5);
    b[i] = rng.Uniform(0, 5);
    phi[i] = rng.Normal();
  }
  const auto svg = PlotInteraction("GCD", "orig_pop", a, b, phi);
  ExpectWellFormed(svg);
  EXPECT_EQ(Parse(svg).OfClass("point").size(), 42u);
  EXPECT_EQ(svg, PlotInteraction("GCD", "orig_pop", a, b, phi));
  phi.pop_back();
  EXPECT_THROW(PlotInteraction("a", "b", a, b, phi), Error);
}

}  // namespace
}  // namespace truckflow::plots
