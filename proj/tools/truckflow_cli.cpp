// truckflow command-line front end. Talks to the library only through the
// C API in truckflow.h.

#include <truckflow/truckflow.h>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct DatasetDeleter {
  void operator()(tflow_dataset* d) const { tflow_dataset_free(d); }
};
struct ModelDeleter {
  void operator()(tflow_model* m) const { tflow_model_free(m); }
};
using Dataset = std::unique_ptr<tflow_dataset, DatasetDeleter>;
using Model = std::unique_ptr<tflow_model, ModelDeleter>;

// Thrown to unwind out of a subcommand once a library call has failed.
struct Failure {
  tflow_status status;
};

void Check(tflow_status status) {
  if (status != TFLOW_OK) {
    std::fprintf(stderr, "truckflow: %s: %s\n", tflow_status_name(status),
                 tflow_last_error());
    throw Failure{status};
  }
}

const char* OrNull(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

struct ParamFlags {
  tflow_params params{};
  std::optional<uint64_t> seed;
};

void AddHyperparams(CLI::App* sub, ParamFlags& f) {
  tflow_params_default(&f.params);
  auto& p = f.params;
  sub->add_option("--max-depth,--max_depth", p.max_depth, "Maximum tree depth")
      ->capture_default_str();
  sub->add_option("--min-child-weight,--min_child_weight", p.min_child_weight,
                  "Minimum hessian sum per child")
      ->capture_default_str();
  sub->add_option("--eta", p.eta, "Learning rate")->capture_default_str();
  sub->add_option("--subsample", p.subsample, "Row fraction per tree")
      ->capture_default_str();
  sub->add_option("--colsample-bytree,--colsample_bytree", p.colsample_bytree,
                  "Feature fraction per tree")
      ->capture_default_str();
  sub->add_option("--rounds,--n_estimators", p.rounds, "Boosting rounds")
      ->capture_default_str();
  sub->add_option("--lambda,--reg_lambda", p.lambda, "L2 leaf regularization")
      ->capture_default_str();
  sub->add_option("--gamma", p.gamma, "Minimum split gain")->capture_default_str();
  sub->add_option("--early-stopping-rounds,--early_stopping_rounds",
                  p.early_stopping_rounds,
                  "Stop after this many rounds without validation improvement")
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "Seed for the split and the sampler");
}

struct SplitFlags {
  double train_fraction = 0.70;
  std::string partition;
};

void AddSplit(CLI::App* sub, SplitFlags& s, const std::string& default_part) {
  s.partition = default_part;
  sub->add_option("--train-fraction,--train_fraction", s.train_fraction,
                  "Training share of the train/test split")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--partition", s.partition, "Rows to use: train, test or all")
      ->capture_default_str()
      ->check(CLI::IsMember({"train", "test", "all"}));
}

tflow_partition PartitionOf(const std::string& name) {
  if (name == "train") return TFLOW_PARTITION_TRAIN;
  if (name == "test") return TFLOW_PARTITION_TEST;
  return TFLOW_PARTITION_ALL;
}

Dataset ReadDataset(const std::string& path) {
  tflow_dataset* d = nullptr;
  Check(tflow_dataset_read(path.c_str(), &d));
  return Dataset(d);
}

Dataset Partition(const tflow_dataset* data, const SplitFlags& s, uint64_t seed) {
  tflow_dataset* d = nullptr;
  Check(tflow_dataset_partition(data, s.train_fraction, seed, PartitionOf(s.partition), &d));
  return Dataset(d);
}

Model ReadModel(const std::string& path) {
  tflow_model* m = nullptr;
  Check(tflow_model_read(path.c_str(), &m));
  return Model(m);
}

// ---- synth ----

struct SynthArgs {
  size_t zones = 60;
  uint64_t seed = 0;
  std::string out_dir = ".";
  tflow_gravity_params gravity{};
  bool calibrate = false;
};

void AddSynth(CLI::App& app, SynthArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("synth", "Generate synthetic zones and gravity-model flows");
  tflow_gravity_params_default(&a.gravity);
  auto& g = a.gravity;
  sub->add_option("--zones", a.zones, "Number of zones")->capture_default_str()
      ->check(CLI::Range(size_t{2}, size_t{100000}));
  sub->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  sub->add_option("--out-dir,--out_dir", a.out_dir, "Directory for zones.csv and od_flows.csv")
      ->capture_default_str();
  sub->add_option("--k", g.k, "Gravity scale constant")->capture_default_str();
  sub->add_option("--alpha", g.alpha, "Origin population exponent")->capture_default_str();
  sub->add_option("--beta", g.beta, "Destination population exponent")->capture_default_str();
  sub->add_option("--gamma", g.gamma, "Distance decay exponent")->capture_default_str();
  sub->add_option("--sigma", g.sigma, "Log-normal noise scale")->capture_default_str();
  sub->add_flag("--calibrate", a.calibrate, "Rescale k so the median flow is about 278");
  sub->callback([&] {
    run = [&] {
      a.gravity.seed = a.seed;
      a.gravity.calibrate = a.calibrate ? 1 : 0;
      std::error_code ec;
      std::filesystem::create_directories(a.out_dir, ec);
      const auto dir = std::filesystem::path(a.out_dir);
      const auto zones = (dir / "zones.csv").string();
      const auto flows = (dir / "od_flows.csv").string();
      double k = 0.0;
      Check(tflow_synth(a.zones, &a.gravity, zones.c_str(), flows.c_str(), &k));
      std::fprintf(stderr, "wrote %s and %s (k = %.17g)\n", zones.c_str(), flows.c_str(), k);
    };
  });
}

// ---- ingest / stats ----

struct IngestArgs {
  std::string flows, zones, counties, crosswalk, exclude, out = "dataset.csv";
  bool exclude_intrazonal = false;

  tflow_ingest_options Options() const {
    return tflow_ingest_options{OrNull(flows),     OrNull(zones),   OrNull(counties),
                                OrNull(crosswalk), OrNull(exclude), exclude_intrazonal ? 1 : 0};
  }
};

void AddIngestInputs(CLI::App* sub, IngestArgs& a, bool required) {
  auto* flows = sub->add_option("--flows", a.flows, "OD flow CSV")->check(CLI::ExistingFile);
  auto* zones = sub->add_option("--zones", a.zones, "Zone CSV")->check(CLI::ExistingFile);
  if (required) {
    flows->required();
    zones->required();
  } else {
    flows->needs(zones);
    zones->needs(flows);
  }
  auto* counties = sub->add_option("--counties", a.counties, "County attribute CSV")
                       ->check(CLI::ExistingFile);
  sub->add_option("--crosswalk", a.crosswalk, "County to zone crosswalk CSV")
      ->check(CLI::ExistingFile)
      ->needs(counties);
  sub->add_option("--exclude", a.exclude, "File of zone ids to drop")
      ->check(CLI::ExistingFile);
  sub->add_flag("--exclude-intrazonal,--exclude_intrazonal", a.exclude_intrazonal,
                "Drop pairs whose origin equals the destination");
}

void AddIngest(CLI::App& app, IngestArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("ingest", "Join flows with zone attributes into a feature table");
  AddIngestInputs(sub, a, true);
  sub->add_option("--out", a.out, "Output dataset CSV")->capture_default_str();
  sub->callback([&] {
    run = [&] {
      const auto options = a.Options();
      tflow_dataset* d = nullptr;
      tflow_ingest_report r{};
      Check(tflow_ingest(&options, &d, &r));
      Dataset data(d);
      Check(tflow_dataset_write(data.get(), a.out.c_str()));
      std::fprintf(stderr,
                   "loaded %zu pairs; removed %zu excluded, %zu zero, %zu intrazonal; "
                   "retained %zu rows over %zu zones\n",
                   r.loaded, r.removed_excluded, r.removed_zero, r.removed_intrazonal,
                   r.retained, r.zones);
      if (r.counties_skipped || r.zones_without_counties) {
        std::fprintf(stderr, "skipped %zu county rows; %zu zones had no counties\n",
                     r.counties_skipped, r.zones_without_counties);
      }
    };
  });
}

struct StatsArgs {
  IngestArgs inputs;
  std::string data, out;
};

void AddStats(CLI::App& app, StatsArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("stats", "Descriptive statistics (mean, median, min, max)");
  auto* data = sub->add_option("--data", a.data, "Dataset CSV from ingest")
                   ->check(CLI::ExistingFile);
  AddIngestInputs(sub, a.inputs, false);
  data->excludes(sub->get_option("--flows"));
  sub->add_option("--out", a.out, "Output CSV (standard output when omitted)");
  sub->callback([&] {
    run = [&] {
      if (!a.data.empty()) {
        auto d = ReadDataset(a.data);
        Check(tflow_stats_dataset(d.get(), OrNull(a.out)));
      } else if (!a.inputs.flows.empty()) {
        const auto options = a.inputs.Options();
        Check(tflow_stats_raw(&options, OrNull(a.out)));
      } else {
        throw CLI::RequiredError("--data or --flows/--zones");
      }
    };
  });
}

// ---- train / evaluate / cv / tune ----

struct TrainArgs {
  std::string data, out = "model.json";
  ParamFlags hp;
  SplitFlags split;
};

void AddTrain(CLI::App& app, TrainArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("train", "Fit a boosted tree model");
  sub->add_option("--data", a.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output model JSON")->capture_default_str();
  AddHyperparams(sub, a.hp);
  AddSplit(sub, a.split, "train");
  sub->callback([&] {
    run = [&] {
      auto& p = a.hp.params;
      p.seed = a.hp.seed.value_or(0);
      auto all = ReadDataset(a.data);
      auto train = Partition(all.get(), a.split, p.seed);
      Dataset fit, valid;
      if (p.early_stopping_rounds > 0) {
        tflow_dataset* f = nullptr;
        tflow_dataset* v = nullptr;
        Check(tflow_dataset_partition(train.get(), 0.9, p.seed, TFLOW_PARTITION_TRAIN, &f));
        fit.reset(f);
        Check(tflow_dataset_partition(train.get(), 0.9, p.seed, TFLOW_PARTITION_TEST, &v));
        valid.reset(v);
      }
      tflow_model* m = nullptr;
      Check(tflow_train(fit ? fit.get() : train.get(), valid.get(), &p, &m));
      Model model(m);
      Check(tflow_model_write(model.get(), a.out.c_str()));
      std::fprintf(stderr, "trained %zu trees on %zu rows\n",
                   tflow_model_num_trees(model.get()),
                   tflow_dataset_rows(fit ? fit.get() : train.get()));
    };
  });
}

struct EvaluateArgs {
  std::string model, data, out;
  std::optional<uint64_t> seed;
  SplitFlags split;
  bool plus_one = false;
};

void AddEvaluate(CLI::App& app, EvaluateArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("evaluate", "Score a model (RMSLE and R-squared in log space)");
  sub->add_option("--model", a.model, "Model JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--data", a.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output CSV (standard output when omitted)");
  sub->add_option("--seed", a.seed, "Split seed (defaults to the model's seed)");
  AddSplit(sub, a.split, "test");
  sub->add_flag("--rmsle-plus-one,--rmsle_plus_one", a.plus_one,
                "Score log(1 + trips) instead of log(trips)");
  sub->callback([&] {
    run = [&] {
      auto model = ReadModel(a.model);
      tflow_params p{};
      Check(tflow_model_params(model.get(), &p));
      auto all = ReadDataset(a.data);
      auto part = Partition(all.get(), a.split, a.seed.value_or(p.seed));
      tflow_metrics metrics{};
      Check(tflow_evaluate(model.get(), part.get(), a.plus_one ? 1 : 0, &metrics));
      Check(tflow_metrics_write(&metrics, OrNull(a.out)));
    };
  });
}

struct CvArgs {
  std::string data, out, grid;
  ParamFlags hp;
  SplitFlags split;
  size_t k = 10;
  bool plus_one = false;
};

void AddCvOptions(CLI::App* sub, CvArgs& a) {
  sub->add_option("--data", a.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output CSV (standard output when omitted)");
  sub->add_option("--k", a.k, "Number of folds")->capture_default_str()
      ->check(CLI::Range(size_t{2}, size_t{1000}));
  sub->add_flag("--rmsle-plus-one,--rmsle_plus_one", a.plus_one,
                "Score log(1 + trips) instead of log(trips)");
  AddHyperparams(sub, a.hp);
  AddSplit(sub, a.split, "train");
}

void AddCv(CLI::App& app, CvArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("cv", "k-fold cross-validation");
  AddCvOptions(sub, a);
  sub->callback([&] {
    run = [&] {
      auto& p = a.hp.params;
      p.seed = a.hp.seed.value_or(0);
      auto all = ReadDataset(a.data);
      auto part = Partition(all.get(), a.split, p.seed);
      const auto path = a.out.empty() ? std::string("/dev/stdout") : a.out;
      tflow_cv_summary s{};
      Check(tflow_cv(part.get(), &p, a.k, p.seed, a.plus_one ? 1 : 0, path.c_str(), &s));
      std::fprintf(stderr, "mean rmsle %.6f (std %.6f), mean r2 %.6f (std %.6f)\n",
                   s.mean_rmsle, s.std_rmsle, s.mean_r_squared, s.std_r_squared);
    };
  });
}

void AddTune(CLI::App& app, CvArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("tune", "Grid search scored by k-fold cross-validation");
  AddCvOptions(sub, a);
  sub->add_option("--grid", a.grid, "Grid CSV: one 'name,v1,v2,...' line per axis")
      ->required()
      ->check(CLI::ExistingFile);
  sub->callback([&] {
    run = [&] {
      auto& p = a.hp.params;
      p.seed = a.hp.seed.value_or(0);
      auto all = ReadDataset(a.data);
      auto part = Partition(all.get(), a.split, p.seed);
      const auto path = a.out.empty() ? std::string("/dev/stdout") : a.out;
      tflow_params best{};
      Check(tflow_tune(part.get(), a.grid.c_str(), &p, a.k, p.seed, a.plus_one ? 1 : 0,
                       path.c_str(), &best));
      std::fprintf(stderr,
                   "best: max_depth=%d min_child_weight=%g eta=%g subsample=%g "
                   "colsample_bytree=%g rounds=%d lambda=%g gamma=%g\n",
                   best.max_depth, best.min_child_weight, best.eta, best.subsample,
                   best.colsample_bytree, best.rounds, best.lambda, best.gamma);
    };
  });
}

// ---- explain / plot ----

struct ExplainArgs {
  std::string model, data, out = "shap_values.csv";
  std::vector<std::string> interactions;
  std::optional<uint64_t> seed;
  SplitFlags split;
  size_t max_rows = 0;
};

void AddExplain(CLI::App& app, ExplainArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("explain", "Shapley values (and interactions) per row");
  sub->add_option("--model", a.model, "Model JSON")->required()->check(CLI::ExistingFile);
  sub->add_option("--data", a.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output CSV")->capture_default_str();
  sub->add_option("--interactions", a.interactions,
                  "Feature pair 'A,B'; writes <out stem>_interaction_A_B.csv (repeatable)")
      ->allow_extra_args(false)
      ->delimiter('\0');
  sub->add_option("--seed", a.seed, "Split and sampling seed (defaults to the model's seed)");
  sub->add_option("--max-rows,--max_rows", a.max_rows,
                  "Explain a seeded sample of at most this many rows (0 = all)")
      ->capture_default_str();
  AddSplit(sub, a.split, "test");
  sub->callback([&] {
    run = [&] {
      auto model = ReadModel(a.model);
      tflow_params p{};
      Check(tflow_model_params(model.get(), &p));
      const uint64_t seed = a.seed.value_or(p.seed);
      auto all = ReadDataset(a.data);
      auto part = Partition(all.get(), a.split, seed);
      if (a.max_rows > 0) {
        tflow_dataset* d = nullptr;
        Check(tflow_dataset_sample(part.get(), a.max_rows, seed, &d));
        part.reset(d);
      }
      std::vector<const char*> pairs;
      for (const auto& s : a.interactions) pairs.push_back(s.c_str());
      Check(tflow_explain_write(model.get(), part.get(), a.out.c_str(), pairs.data(),
                                pairs.size()));
      std::fprintf(stderr, "explained %zu rows\n", tflow_dataset_rows(part.get()));
    };
  });
}

struct PlotArgs {
  std::string kind, in, out, data, feature;
  bool sign_vs_target = false;
  size_t window = 0;
};

void AddPlot(CLI::App& app, PlotArgs& a, std::function<void()>& run) {
  auto* sub = app.add_subcommand("plot", "Render an SVG figure from explain output");
  sub->add_option("kind", a.kind, "importance, beeswarm, dependence or interaction")
      ->required()
      ->check(CLI::IsMember({"importance", "beeswarm", "dependence", "interaction"}));
  sub->add_option("--in", a.in, "shap_values.csv, or an interaction CSV")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output SVG")->required();
  sub->add_option("--data", a.data, "Dataset CSV holding the explained rows")
      ->check(CLI::ExistingFile);
  sub->add_option("--feature", a.feature, "Feature for the dependence plot");
  sub->add_flag("--sign-vs-target,--sign_vs_target", a.sign_vs_target,
                "Color importance bars by correlation with the target");
  sub->add_option("--window", a.window, "Smoothing window for the threshold (0 = default)")
      ->capture_default_str();
  sub->callback([&] {
    run = [&] {
      tflow_plot_options o{};
      if (a.kind == "importance") o.kind = TFLOW_PLOT_IMPORTANCE;
      if (a.kind == "beeswarm") o.kind = TFLOW_PLOT_BEESWARM;
      if (a.kind == "dependence") o.kind = TFLOW_PLOT_DEPENDENCE;
      if (a.kind == "interaction") o.kind = TFLOW_PLOT_INTERACTION;
      if (o.kind != TFLOW_PLOT_INTERACTION && a.data.empty()) {
        throw CLI::RequiredError("--data");
      }
      if (o.kind == TFLOW_PLOT_DEPENDENCE && a.feature.empty()) {
        throw CLI::RequiredError("--feature");
      }
      o.input_path = a.in.c_str();
      o.data_path = OrNull(a.data);
      o.feature = OrNull(a.feature);
      o.sign_vs_target = a.sign_vs_target ? 1 : 0;
      o.window = a.window;
      o.out_path = a.out.c_str();
      Check(tflow_plot(&o));
    };
  });
}

// Expands `--config PATH` into flags placed ahead of the command line, so
// explicit flags (parsed later, last one wins) override the file.
std::vector<std::string> ExpandConfig(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> rest;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty() || rest.empty()) return args;
  if (!std::filesystem::is_regular_file(path)) {
    throw CLI::ValidationError("--config", "file does not exist: " + path);
  }
  std::vector<std::string> out{rest.front()};
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty()) {
      throw CLI::ValidationError("--config", "sections are not supported: " + item.fullname());
    }
    std::string value;
    for (const auto& v : item.inputs) value += (value.empty() ? "" : ",") + v;
    out.push_back("--" + item.name + "=" + value);
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Truck flow OD modelling: ingest, boost, explain, plot", "truckflow");
  app.require_subcommand(1);
  app.set_version_flag("--version", tflow_version());
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.footer("Every subcommand also accepts --config FILE with 'key = value' lines; "
             "flags on the command line take precedence.\n"
             "Exit status: 0 success, 1 data or domain error, 2 usage error.");

  std::function<void()> run;
  SynthArgs synth;
  IngestArgs ingest;
  StatsArgs stats;
  TrainArgs train;
  EvaluateArgs evaluate;
  CvArgs cv, tune;
  ExplainArgs explain;
  PlotArgs plot;
  AddSynth(app, synth, run);
  AddIngest(app, ingest, run);
  AddStats(app, stats, run);
  AddTrain(app, train, run);
  AddEvaluate(app, evaluate, run);
  AddCv(app, cv, run);
  AddTune(app, tune, run);
  AddExplain(app, explain, run);
  AddPlot(app, plot, run);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = ExpandConfig(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (run) run();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Failure& f) {
    return f.status == TFLOW_E_INVALID_ARGUMENT ? kExitUsage : kExitDomain;
  }
  return kExitOk;
}
