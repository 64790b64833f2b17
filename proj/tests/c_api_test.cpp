#include <gtest/gtest.h>
#include <truckflow/truckflow.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace {

using truckflow::testing::DataPath;
using truckflow::testing::TempDir;

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Synthesizes and ingests a small gravity data set once for the suite.
class CApi : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    tflow_gravity_params g;
    tflow_gravity_params_default(&g);
    g.seed = 3;
    const auto zones = (*dir_ / "zones.csv").string();
    const auto flows = (*dir_ / "flows.csv").string();
    ASSERT_EQ(tflow_synth(20, &g, zones.c_str(), flows.c_str(), nullptr), TFLOW_OK);
    tflow_ingest_options o{flows.c_str(), zones.c_str(), nullptr, nullptr, nullptr, 0};
    tflow_ingest_report r{};
    ASSERT_EQ(tflow_ingest(&o, &data_, &r), TFLOW_OK);
    ASSERT_EQ(r.retained, tflow_dataset_rows(data_));
    tflow_params p;
    tflow_params_default(&p);
    p.rounds = 40;
    p.eta = 0.2;
    p.max_depth = 4;
    ASSERT_EQ(tflow_train(data_, nullptr, &p, &model_), TFLOW_OK);
  }
  static void TearDownTestSuite() {
    tflow_model_free(model_);
    tflow_dataset_free(data_);
    delete dir_;
  }

  static std::vector<double> Row(size_t r) {
    std::vector<double> x(tflow_dataset_cols(data_));
    double y = 0;
    EXPECT_EQ(tflow_dataset_row(data_, r, x.data(), x.size(), &y), TFLOW_OK);
    return x;
  }

  static TempDir* dir_;
  static tflow_dataset* data_;
  static tflow_model* model_;
};

TempDir* CApi::dir_ = nullptr;
tflow_dataset* CApi::data_ = nullptr;
tflow_model* CApi::model_ = nullptr;

TEST_F(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(tflow_version(), "0.1.0");
  EXPECT_STREQ(tflow_status_name(TFLOW_OK), "ok");
  EXPECT_STREQ(tflow_status_name(TFLOW_E_IO), "io error");
}

TEST_F(CApi, DatasetShapeAndNames) {
  EXPECT_EQ(tflow_dataset_cols(data_), 11u);
  EXPECT_EQ(tflow_dataset_rows(data_), 380u);
  EXPECT_STREQ(tflow_dataset_feature_name(data_, 2), "GCD");
  EXPECT_EQ(tflow_dataset_feature_name(data_, 11), nullptr);
  EXPECT_EQ(tflow_model_num_trees(model_), 40u);
  EXPECT_EQ(tflow_model_num_features(model_), 11u);
}

TEST_F(CApi, MissingFileReportsIoError) {
  tflow_dataset* d = nullptr;
  EXPECT_EQ(tflow_dataset_read("/nonexistent/data.csv", &d), TFLOW_E_IO);
  EXPECT_EQ(d, nullptr);
  EXPECT_NE(std::string(tflow_last_error()).find("/nonexistent/data.csv"), std::string::npos);
}

TEST_F(CApi, NullArgumentsAreInvalid) {
  EXPECT_EQ(tflow_train(nullptr, nullptr, nullptr, nullptr), TFLOW_E_INVALID_ARGUMENT);
  EXPECT_EQ(tflow_model_write(nullptr, "x"), TFLOW_E_INVALID_ARGUMENT);
  double out = 0;
  std::vector<double> shortrow(3, 0.0);
  EXPECT_EQ(tflow_predict(model_, shortrow.data(), shortrow.size(), &out),
            TFLOW_E_INVALID_ARGUMENT);
}

TEST_F(CApi, SuccessClearsLastError) {
  tflow_dataset* d = nullptr;
  tflow_dataset_read("/nonexistent/data.csv", &d);
  tflow_metrics m{};
  ASSERT_EQ(tflow_evaluate(model_, data_, 0, &m), TFLOW_OK);
  EXPECT_STREQ(tflow_last_error(), "");
  EXPECT_GT(m.r_squared, 0.5);
  EXPECT_EQ(m.n, 380u);
}

TEST_F(CApi, LocalAccuracyAndExactAgreement) {
  for (size_t r = 0; r < 20; ++r) {
    const auto x = Row(r * 7);
    double base = 0, exact_base = 0, pred = 0;
    std::vector<double> phi(11), exact(11);
    ASSERT_EQ(tflow_explain(model_, x.data(), x.size(), &base, phi.data()), TFLOW_OK);
    ASSERT_EQ(tflow_explain_exact(model_, x.data(), x.size(), &exact_base, exact.data()),
              TFLOW_OK);
    ASSERT_EQ(tflow_predict(model_, x.data(), x.size(), &pred), TFLOW_OK);
    EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), base), pred, 1e-9);
    for (size_t f = 0; f < 11; ++f) EXPECT_NEAR(phi[f], exact[f], 1e-9);
    std::vector<double> mat(121);
    ASSERT_EQ(tflow_explain_interactions(model_, x.data(), x.size(), mat.data()), TFLOW_OK);
    for (size_t i = 0; i < 11; ++i) {
      double sum = 0;
      for (size_t j = 0; j < 11; ++j) sum += mat[i * 11 + j];
      EXPECT_NEAR(sum, phi[i], 1e-8);
    }
  }
}

TEST_F(CApi, ModelFileRoundTrip) {
  const auto path = (*dir_ / "m.json").string();
  ASSERT_EQ(tflow_model_write(model_, path.c_str()), TFLOW_OK);
  tflow_model* back = nullptr;
  ASSERT_EQ(tflow_model_read(path.c_str(), &back), TFLOW_OK);
  const auto x = Row(5);
  double a = 0, b = 0;
  tflow_predict(model_, x.data(), x.size(), &a);
  tflow_predict(back, x.data(), x.size(), &b);
  EXPECT_EQ(a, b);
  tflow_params p{};
  ASSERT_EQ(tflow_model_params(back, &p), TFLOW_OK);
  EXPECT_EQ(p.rounds, 40);
  tflow_model_free(back);

  std::ofstream(*dir_ / "bad.json") << "{\"format_version\":1,";
  tflow_model* bad = nullptr;
  EXPECT_EQ(tflow_model_read((*dir_ / "bad.json").string().c_str(), &bad), TFLOW_E_PARSE);
}

TEST_F(CApi, PartitionsAreComplementary) {
  tflow_dataset *train = nullptr, *test = nullptr;
  ASSERT_EQ(tflow_dataset_partition(data_, 0.7, 1, TFLOW_PARTITION_TRAIN, &train), TFLOW_OK);
  ASSERT_EQ(tflow_dataset_partition(data_, 0.7, 1, TFLOW_PARTITION_TEST, &test), TFLOW_OK);
  EXPECT_EQ(tflow_dataset_rows(train), 266u);
  EXPECT_EQ(tflow_dataset_rows(test), 114u);
  tflow_dataset_free(train);
  tflow_dataset_free(test);
  tflow_dataset* bad = nullptr;
  EXPECT_EQ(tflow_dataset_partition(data_, 1.5, 1, TFLOW_PARTITION_TRAIN, &bad),
            TFLOW_E_INVALID_ARGUMENT);
}

TEST_F(CApi, ExplainWriteAndPlots) {
  tflow_dataset* sample = nullptr;
  ASSERT_EQ(tflow_dataset_sample(data_, 60, 2, &sample), TFLOW_OK);
  EXPECT_EQ(tflow_dataset_rows(sample), 60u);
  const auto data_path = (*dir_ / "sample.csv").string();
  ASSERT_EQ(tflow_dataset_write(sample, data_path.c_str()), TFLOW_OK);
  const auto shap = (*dir_ / "shap.csv").string();
  const char* pairs[] = {"GCD,orig_pop"};
  ASSERT_EQ(tflow_explain_write(model_, sample, shap.c_str(), pairs, 1), TFLOW_OK);
  const auto inter = (*dir_ / "shap_interaction_GCD_orig_pop.csv").string();
  EXPECT_TRUE(std::filesystem::exists(inter));

  const char* bad_pairs[] = {"GCD"};
  EXPECT_EQ(tflow_explain_write(model_, sample, shap.c_str(), bad_pairs, 1),
            TFLOW_E_INVALID_ARGUMENT);
  const char* unknown[] = {"GCD,nope"};
  EXPECT_EQ(tflow_explain_write(model_, sample, shap.c_str(), unknown, 1),
            TFLOW_E_INVALID_ARGUMENT);

  tflow_plot_options o{};
  o.input_path = shap.c_str();
  o.data_path = data_path.c_str();
  const auto out = (*dir_ / "p.svg").string();
  o.out_path = out.c_str();
  for (auto kind : {TFLOW_PLOT_IMPORTANCE, TFLOW_PLOT_BEESWARM}) {
    o.kind = kind;
    ASSERT_EQ(tflow_plot(&o), TFLOW_OK) << tflow_last_error();
    EXPECT_EQ(Slurp(out).rfind("<?xml", 0), 0u);
  }
  o.kind = TFLOW_PLOT_DEPENDENCE;
  o.feature = "GCD";
  EXPECT_EQ(tflow_plot(&o), TFLOW_OK);
  o.feature = "nope";
  EXPECT_EQ(tflow_plot(&o), TFLOW_E_INVALID_ARGUMENT);
  o.kind = TFLOW_PLOT_INTERACTION;
  o.input_path = inter.c_str();
  o.data_path = nullptr;
  EXPECT_EQ(tflow_plot(&o), TFLOW_OK);
  tflow_dataset_free(sample);
}

TEST_F(CApi, CvAndTune) {
  tflow_params p;
  tflow_params_default(&p);
  p.rounds = 10;
  p.eta = 0.3;
  p.max_depth = 3;
  tflow_cv_summary s{};
  const auto cv_path = (*dir_ / "cv.csv").string();
  ASSERT_EQ(tflow_cv(data_, &p, 3, 1, 0, cv_path.c_str(), &s), TFLOW_OK);
  EXPECT_GT(s.mean_r_squared, 0.0);
  EXPECT_EQ(Slurp(cv_path).rfind("fold,n,rmsle,r_squared\n", 0), 0u);
  tflow_params best{};
  const auto grid = DataPath("grid_small.csv").string();
  ASSERT_EQ(tflow_tune(data_, grid.c_str(), &p, 3, 1, 0, nullptr, &best), TFLOW_OK);
  EXPECT_TRUE(best.max_depth == 2 || best.max_depth == 3);
  EXPECT_EQ(tflow_cv(data_, &p, 1, 1, 0, nullptr, nullptr), TFLOW_E_INVALID_ARGUMENT);
}

TEST_F(CApi, ZeroCrossing) {
  std::vector<double> v, phi;
  for (int i = 0; i <= 100; ++i) {
    v.push_back(i * 0.1);
    phi.push_back(i * 0.1 - 5);
  }
  int found = 0;
  double t = 0;
  ASSERT_EQ(tflow_zero_crossing(v.data(), phi.data(), v.size(), 5, &found, &t), TFLOW_OK);
  EXPECT_EQ(found, 1);
  EXPECT_NEAR(t, 5.0, 0.1);
}

TEST_F(CApi, IngestErrorsMapToStatus) {
  TempDir d;
  std::ofstream(d / "f.csv") << "origin_zone,destination_zone,annual_total_trips\nA,B,1\nA,B,2\n";
  const auto f = (d / "f.csv").string();
  const auto z = DataPath("zones_small.csv").string();
  tflow_ingest_options o{f.c_str(), z.c_str(), nullptr, nullptr, nullptr, 0};
  tflow_dataset* out = nullptr;
  EXPECT_EQ(tflow_ingest(&o, &out, nullptr), TFLOW_E_DUPLICATE);
  std::ofstream(d / "f.csv") << "origin_zone,destination_zone,annual_total_trips\nA,Q,1\n";
  EXPECT_EQ(tflow_ingest(&o, &out, nullptr), TFLOW_E_SCHEMA);
  EXPECT_NE(std::string(tflow_last_error()).find("Q"), std::string::npos);
}

TEST_F(CApi, StatsToFile) {
  tflow_dataset* d = nullptr;
  ASSERT_EQ(tflow_dataset_read(DataPath("stats_fixture.csv").string().c_str(), &d), TFLOW_OK);
  const auto out = (*dir_ / "stats.csv").string();
  ASSERT_EQ(tflow_stats_dataset(d, out.c_str()), TFLOW_OK);
  EXPECT_NE(Slurp(out).find("GCD,550,550,100,1000\n"), std::string::npos);
  tflow_dataset_free(d);
}

}  // namespace
