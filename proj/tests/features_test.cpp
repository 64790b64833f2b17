#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "truckflow/error.hpp"
#include "truckflow/features.hpp"
#include "truckflow/ingest.hpp"

namespace truckflow {
namespace {

using testing::DataPath;
using testing::TempDir;

// Central angle from the dot and cross products of unit vectors; shares no
// code or formula with the haversine implementation.
double VectorDistance(LatLon a, LatLon b) {
  const double d2r = std::numbers::pi / 180.0;
  const auto unit = [&](LatLon p) {
    return std::array<double, 3>{std::cos(p.lat * d2r) * std::cos(p.lon * d2r),
                                 std::cos(p.lat * d2r) * std::sin(p.lon * d2r),
                                 std::sin(p.lat * d2r)};
  };
  const auto u = unit(a), v = unit(b);
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  const double cx = u[1] * v[2] - u[2] * v[1];
  const double cy = u[2] * v[0] - u[0] * v[2];
  const double cz = u[0] * v[1] - u[1] * v[0];
  return 3958.7613 * std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

LatLon RandomPoint(Rng& rng) { return {rng.Uniform(-90, 90), rng.Uniform(-180, 180)}; }

TEST(GreatCircleDistance, SamePointIsZero) {
  EXPECT_EQ(GreatCircleDistance({12.5, -40.25}, {12.5, -40.25}), 0.0);
}

TEST(GreatCircleDistance, Antipodal) {
  EXPECT_NEAR(GreatCircleDistance({0, 0}, {0, 180}), std::numbers::pi * 3958.7613, 1e-3);
  EXPECT_NEAR(GreatCircleDistance({0, 0}, {0, 180}), 12436.8154, 1e-3);
}

TEST(GreatCircleDistance, ChicagoPhiladelphia) {
  const LatLon chicago{41.8781, -87.6298}, philadelphia{39.9526, -75.1652};
  const double oracle = VectorDistance(chicago, philadelphia);
  EXPECT_NEAR(oracle, 663.627, 1e-3);
  EXPECT_NEAR(GreatCircleDistance(chicago, philadelphia), oracle, 1e-6);
}

TEST(GreatCircleDistance, MatchesVectorOracleOnRandomPairs) {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const auto a = RandomPoint(rng), b = RandomPoint(rng);
    EXPECT_NEAR(GreatCircleDistance(a, b), VectorDistance(a, b), 1e-6);
  }
}

TEST(GreatCircleDistance, SymmetricAndTriangle) {
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const auto a = RandomPoint(rng), b = RandomPoint(rng), c = RandomPoint(rng);
    EXPECT_EQ(GreatCircleDistance(a, b), GreatCircleDistance(b, a));
    const double ab = GreatCircleDistance(a, b), bc = GreatCircleDistance(b, c),
                 ac = GreatCircleDistance(a, c);
    EXPECT_LE(ac, (ab + bc) * (1 + 1e-9) + 1e-9);
  }
}

TEST(GreatCircleDistance, RejectsOutOfRange) {
  EXPECT_THROW(GreatCircleDistance({90.5, 0}, {0, 0}), Error);
  EXPECT_THROW(GreatCircleDistance({0, 0}, {0, -180.5}), Error);
  EXPECT_THROW(GreatCircleDistance({std::nan(""), 0}, {0, 0}), Error);
}

TEST(LogTransform, KnownValues) {
  EXPECT_EQ(LogTransform(1), 0.0);
  EXPECT_NEAR(LogTransform(30), 3.401, 5e-4);
  EXPECT_EQ(std::round(LogTransform(30) * 10) / 10, 3.4);
  EXPECT_NEAR(LogTransform(466407788), 19.96, 5e-3);
  EXPECT_NEAR(LogTransform(83), 4.419, 5e-4);
}

TEST(LogTransform, RejectsNonPositive) {
  EXPECT_THROW(LogTransform(0), Error);
  EXPECT_THROW(LogTransform(-3), Error);
}

TEST(LogTransform, ExpInverts) {
  Rng rng(4);
  for (int i = 0; i < 5000; ++i) {
    const double x = std::pow(10.0, rng.Uniform(-6, 12));
    EXPECT_NEAR(std::exp(LogTransform(x)) / x, 1.0, 1e-12);
  }
}

TEST(BuildFeatureMatrix, SingleRecordTripsOne) {
  const auto zones = LoadZones(DataPath("zones_small.csv"));
  const auto rec = JoinDataset({{"A", "B", 1}}, zones);
  const auto m = BuildFeatureMatrix(rec, ZoneIndex(zones));
  ASSERT_EQ(m.rows(), 1u);
  EXPECT_EQ(m.target[0], 0.0);
  EXPECT_EQ(m.at(0, 2), GreatCircleDistance({41.8781, -87.6298}, {39.9526, -75.1652}));
}

TEST(BuildFeatureMatrix, ThreeRowFixtureByHand) {
  const auto zones = LoadZones(DataPath("zones_small.csv"));
  const auto rec = JoinDataset({{"A", "B", 30}, {"B", "A", 83}, {"A", "C", 100}}, zones);
  const auto m = BuildFeatureMatrix(rec, ZoneIndex(zones));
  ASSERT_EQ(m.cols(), 11u);
  for (std::size_t c = 0; c < 11; ++c) EXPECT_EQ(m.feature_names[c], kFeatureNames[c]);
  const LatLon a{41.8781, -87.6298}, b{39.9526, -75.1652}, c{29.7604, -95.3698};
  const std::vector<std::vector<double>> expected{
      {0, 1, VectorDistance(a, b), 2700000, 1600000, std::log(83.0), std::log(400.0),
       std::log(1e6), std::log(7e5), std::log(5e7), std::log(3e7)},
      {1, 0, VectorDistance(b, a), 1600000, 2700000, std::log(400.0), std::log(83.0),
       std::log(7e5), std::log(1e6), std::log(3e7), std::log(5e7)},
      {0, 2, VectorDistance(a, c), 2700000, 2300000, std::log(83.0), std::log(900.0),
       std::log(1e6), std::log(1.1e6), std::log(5e7), std::log(6e7)}};
  const std::vector<double> target{std::log(30.0), std::log(83.0), std::log(100.0)};
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(m.target[r], target[r]);
    for (std::size_t col = 0; col < 11; ++col) {
      EXPECT_NEAR(m.at(r, col), expected[r][col], 1e-9 * std::max(1.0, expected[r][col]))
          << r << "," << col;
    }
  }
  EXPECT_EQ(m.at(0, 5), 4.4188406077965983);
  EXPECT_EQ(m.row_keys[1], (std::pair<std::string, std::string>{"B", "A"}));
}

TEST(BuildFeatureMatrix, NonPositiveAttributeIsDomainError) {
  auto zones = LoadZones(DataPath("zones_small.csv"));
  zones[1].employees = 0;
  const auto rec = JoinDataset({{"A", "B", 3}}, zones);
  try {
    BuildFeatureMatrix(rec, ZoneIndex(zones));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomain);
    EXPECT_NE(std::string(e.what()).find("dest_emp"), std::string::npos) << e.what();
  }
}

TEST(BuildFeatureMatrix, FuzzedInputsHaveNoNan) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ZoneAttributes> zones;
    for (int i = 0; i < 8; ++i) {
      zones.push_back({"Z" + std::to_string(i), rng.Uniform(-90, 90), rng.Uniform(-180, 180),
                       rng.Uniform(1, 1e7), 1 + std::floor(rng.Uniform(0, 1e4)),
                       rng.Uniform(1e-3, 1e6), rng.Uniform(1e-3, 1e9)});
    }
    std::vector<ODRecord> flows;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        flows.push_back({zones[i].zone_id, zones[j].zone_id,
                         1 + static_cast<std::int64_t>(rng.Below(1000000))});
    const auto m = BuildFeatureMatrix(JoinDataset(flows, zones), ZoneIndex(zones));
    for (double v : m.values) EXPECT_TRUE(std::isfinite(v));
    for (double v : m.target) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(FeatureMatrix, CsvRoundTrip) {
  const auto zones = LoadZones(DataPath("zones_small.csv"));
  const auto rec = JoinDataset({{"A", "B", 30}, {"B", "A", 83}, {"A", "C", 100}}, zones);
  const auto m = BuildFeatureMatrix(rec, ZoneIndex(zones));
  TempDir dir;
  WriteFeatureMatrix(dir / "d.csv", m);
  const auto back = ReadFeatureMatrix(dir / "d.csv");
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.target, m.target);
  EXPECT_EQ(back.row_keys, m.row_keys);
  EXPECT_EQ(back.feature_names, m.feature_names);
}

TEST(DescriptiveStats, SmallVectors) {
  const std::vector<double> four{1, 2, 3, 4};
  const auto s = DescriptiveStats(four);
  EXPECT_EQ(s.mean, 2.5);
  EXPECT_EQ(s.median, 2.5);
  EXPECT_EQ(s.min, 1);
  EXPECT_EQ(s.max, 4);
  const std::vector<double> one{7};
  const auto t = DescriptiveStats(one);
  EXPECT_EQ(t.mean, 7);
  EXPECT_EQ(t.median, 7);
  EXPECT_EQ(t.min, 7);
  EXPECT_EQ(t.max, 7);
}

TEST(DescriptiveStats, OrderInvariantAndBounded) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.Below(40));
    for (auto& x : v) x = rng.Uniform(-100, 100);
    const auto s = DescriptiveStats(v);
    rng.Shuffle(std::span<double>(v));
    const auto t = DescriptiveStats(v);
    EXPECT_EQ(s.median, t.median);
    EXPECT_NEAR(s.mean, t.mean, 1e-12);
    EXPECT_LE(s.min, s.median);
    EXPECT_LE(s.median, s.max);
    EXPECT_LE(s.min, s.mean);
    EXPECT_LE(s.mean, s.max);
  }
}

TEST(DatasetStats, TenRowFixtureExact) {
  const auto m = ReadFeatureMatrix(DataPath("stats_fixture.csv"));
  EXPECT_EQ(FormatStats(DatasetStats(m)),
            "variable,mean,median,min,max\n"
            "log_truck_trips,2.25,2.25,0,4.5\n"
            "GCD,550,550,100,1000\n"
            "orig_pop,38500,30500,1000,100000\n"
            "dest_pop,38500,30500,1000,100000\n"
            "log_orig_est,5.5,5.5,1,10\n"
            "log_dest_est,2,2,2,2\n"
            "log_orig_emp,3.9,3.5,1,9\n"
            "log_dest_emp,2.75,2.75,0.5,5\n"
            "log_orig_ap,15.5,15.5,11,20\n"
            "log_dest_ap,14.5,14.5,10,19\n");
}

TEST(RawStats, CoversTableOneVariables) {
  const auto zones = LoadZones(DataPath("zones_small.csv"));
  const auto rec = JoinDataset({{"A", "B", 30}, {"B", "A", 83}, {"A", "C", 100}}, zones);
  const auto stats = RawStats(rec);
  ASSERT_EQ(stats.size(), 17u);
  EXPECT_EQ(stats[0].variable, "annual_total_trips");
  EXPECT_EQ(stats[0].stats.median, 83);
  EXPECT_EQ(stats[0].stats.mean, 71);
  EXPECT_EQ(stats[5].variable, "orig_est");
  EXPECT_EQ(stats[5].stats.min, 83);
  EXPECT_EQ(stats[6].variable, "log_orig_est");
  EXPECT_EQ(std::round(stats[6].stats.min * 10) / 10, 4.4);
}

}  // namespace
}  // namespace truckflow
