#include "truckflow/truckflow.h"

#include <cstdio>
#include <algorithm>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "truckflow/csv.hpp"
#include "truckflow/error.hpp"
#include "truckflow/features.hpp"
#include "truckflow/gbt.hpp"
#include "truckflow/harness.hpp"
#include "truckflow/pipeline.hpp"
#include "truckflow/plots.hpp"
#include "truckflow/shap.hpp"
#include "truckflow/synth.hpp"

struct tflow_dataset {
  truckflow::FeatureMatrix matrix;
};

struct tflow_model {
  truckflow::GBTModel model;
};

namespace {

using truckflow::Error;
using truckflow::ErrorCode;

thread_local std::string g_last_error;

tflow_status Fail(tflow_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

tflow_status FromCode(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return TFLOW_E_IO;
    case ErrorCode::kParse: return TFLOW_E_PARSE;
    case ErrorCode::kSchema: return TFLOW_E_SCHEMA;
    case ErrorCode::kDuplicate: return TFLOW_E_DUPLICATE;
    case ErrorCode::kDomain: return TFLOW_E_DOMAIN;
    case ErrorCode::kInvalidArgument: return TFLOW_E_INVALID_ARGUMENT;
    case ErrorCode::kModel: return TFLOW_E_MODEL;
    case ErrorCode::kGuard: return TFLOW_E_GUARD;
    case ErrorCode::kCalibration: return TFLOW_E_CALIBRATION;
  }
  return TFLOW_E_INTERNAL;
}

template <typename Fn>
tflow_status Guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return TFLOW_OK;
  } catch (const Error& e) {
    return Fail(FromCode(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(TFLOW_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(TFLOW_E_INTERNAL, e.what());
  } catch (...) {
    return Fail(TFLOW_E_INTERNAL, "unknown error");
  }
}

void Require(bool condition, const char* what) {
  if (!condition) throw Error(ErrorCode::kInvalidArgument, what);
}

truckflow::Hyperparams ToParams(const tflow_params& p) {
  truckflow::Hyperparams h;
  h.max_depth = p.max_depth;
  h.min_child_weight = p.min_child_weight;
  h.eta = p.eta;
  h.subsample = p.subsample;
  h.colsample_bytree = p.colsample_bytree;
  h.rounds = p.rounds;
  h.lambda = p.lambda;
  h.gamma = p.gamma;
  h.seed = p.seed;
  h.early_stopping_rounds = p.early_stopping_rounds;
  return h;
}

tflow_params FromParams(const truckflow::Hyperparams& h) {
  return tflow_params{h.max_depth, h.min_child_weight, h.eta, h.subsample,
                      h.colsample_bytree, h.rounds, h.lambda, h.gamma, h.seed,
                      h.early_stopping_rounds};
}

truckflow::IngestOptions ToIngest(const tflow_ingest_options& o) {
  Require(o.flows_path && o.zones_path, "flows_path and zones_path are required");
  truckflow::IngestOptions out;
  out.flows = o.flows_path;
  out.zones = o.zones_path;
  if (o.counties_path) out.counties = o.counties_path;
  if (o.crosswalk_path) {
    Require(o.counties_path != nullptr, "a crosswalk needs a counties file");
    out.crosswalk = o.crosswalk_path;
  }
  if (o.exclusions_path) out.exclusions = o.exclusions_path;
  out.exclude_intrazonal = o.exclude_intrazonal != 0;
  return out;
}

void Emit(const char* path, const std::string& text) {
  if (path) {
    truckflow::csv::WriteText(path, text);
  } else {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
  }
}

std::span<const double> Row(const tflow_model* model, const double* row, size_t n) {
  Require(model && row, "model and row must be non-null");
  Require(n == model->model.num_features(), "row length must equal model feature count");
  return {row, n};
}

}  // namespace

extern "C" {

const char* tflow_last_error(void) { return g_last_error.c_str(); }

const char* tflow_status_name(tflow_status status) {
  switch (status) {
    case TFLOW_OK: return "ok";
    case TFLOW_E_IO: return "io error";
    case TFLOW_E_PARSE: return "parse error";
    case TFLOW_E_SCHEMA: return "schema error";
    case TFLOW_E_DUPLICATE: return "duplicate error";
    case TFLOW_E_DOMAIN: return "domain error";
    case TFLOW_E_INVALID_ARGUMENT: return "invalid argument";
    case TFLOW_E_MODEL: return "model error";
    case TFLOW_E_GUARD: return "guard error";
    case TFLOW_E_CALIBRATION: return "calibration error";
    case TFLOW_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* tflow_version(void) { return "0.1.0"; }

void tflow_gravity_params_default(tflow_gravity_params* params) {
  if (!params) return;
  const truckflow::GravityParams d;
  *params = tflow_gravity_params{d.k, d.alpha, d.beta, d.gamma, d.sigma, d.seed,
                                 d.calibrate ? 1 : 0};
}

tflow_status tflow_synth(size_t zones, const tflow_gravity_params* params,
                         const char* zones_path, const char* flows_path,
                         double* k_used) {
  return Guarded([&] {
    Require(params && zones_path && flows_path, "params and output paths are required");
    truckflow::GravityParams g;
    g.k = params->k;
    g.alpha = params->alpha;
    g.beta = params->beta;
    g.gamma = params->gamma;
    g.sigma = params->sigma;
    g.seed = params->seed;
    g.calibrate = params->calibrate != 0;
    const auto table = truckflow::GenerateZones(zones, params->seed);
    double k = 0.0;
    const auto flows = truckflow::GenerateGravityFlows(table, g, &k);
    truckflow::WriteZones(zones_path, table);
    truckflow::WriteOdFlows(flows_path, flows);
    if (k_used) *k_used = k;
  });
}

tflow_status tflow_ingest(const tflow_ingest_options* options, tflow_dataset** out,
                          tflow_ingest_report* report) {
  return Guarded([&] {
    Require(options && out, "options and out must be non-null");
    const auto result = truckflow::RunIngest(ToIngest(*options));
    auto data = std::make_unique<tflow_dataset>();
    data->matrix = truckflow::IngestToMatrix(result);
    if (report) {
      report->loaded = result.filter.input;
      report->removed_excluded = result.filter.removed_excluded;
      report->removed_zero = result.filter.removed_zero;
      report->removed_intrazonal = result.filter.removed_intrazonal;
      report->retained = result.filter.retained;
      report->zones = result.zones.size();
      report->counties_skipped = result.aggregation.skipped_rows;
      report->zones_without_counties = result.aggregation.empty_zones.size();
    }
    *out = data.release();
  });
}

tflow_status tflow_dataset_read(const char* path, tflow_dataset** out) {
  return Guarded([&] {
    Require(path && out, "path and out must be non-null");
    auto data = std::make_unique<tflow_dataset>();
    data->matrix = truckflow::ReadFeatureMatrix(path);
    data->matrix.Validate();
    *out = data.release();
  });
}

tflow_status tflow_dataset_write(const tflow_dataset* data, const char* path) {
  return Guarded([&] {
    Require(data && path, "data and path must be non-null");
    truckflow::WriteFeatureMatrix(path, data->matrix);
  });
}

void tflow_dataset_free(tflow_dataset* data) { delete data; }

size_t tflow_dataset_rows(const tflow_dataset* data) {
  return data ? data->matrix.rows() : 0;
}

size_t tflow_dataset_cols(const tflow_dataset* data) {
  return data ? data->matrix.cols() : 0;
}

const char* tflow_dataset_feature_name(const tflow_dataset* data, size_t col) {
  if (!data || col >= data->matrix.cols()) return nullptr;
  return data->matrix.feature_names[col].c_str();
}

tflow_status tflow_dataset_row(const tflow_dataset* data, size_t row, double* features,
                               size_t n, double* target) {
  return Guarded([&] {
    Require(data && features, "data and features must be non-null");
    Require(row < data->matrix.rows(), "row out of range");
    Require(n == data->matrix.cols(), "buffer length must equal column count");
    const auto r = data->matrix.row(row);
    std::copy(r.begin(), r.end(), features);
    if (target) *target = data->matrix.target[row];
  });
}

tflow_status tflow_dataset_partition(const tflow_dataset* data, double train_fraction,
                                     uint64_t seed, tflow_partition part,
                                     tflow_dataset** out) {
  return Guarded([&] {
    Require(data && out, "data and out must be non-null");
    auto result = std::make_unique<tflow_dataset>();
    if (part == TFLOW_PARTITION_ALL) {
      result->matrix = data->matrix;
    } else {
      const auto p = truckflow::SplitIndices(data->matrix.rows(), {train_fraction, seed});
      result->matrix = data->matrix.Subset(part == TFLOW_PARTITION_TRAIN ? p.train : p.test);
    }
    *out = result.release();
  });
}

tflow_status tflow_dataset_sample(const tflow_dataset* data, size_t count, uint64_t seed,
                                  tflow_dataset** out) {
  return Guarded([&] {
    Require(data && out, "data and out must be non-null");
    auto result = std::make_unique<tflow_dataset>();
    result->matrix = truckflow::SampleRows(data->matrix, count, seed);
    *out = result.release();
  });
}

tflow_status tflow_stats_dataset(const tflow_dataset* data, const char* out_path) {
  return Guarded([&] {
    Require(data != nullptr, "data must be non-null");
    Emit(out_path, truckflow::FormatStats(truckflow::DatasetStats(data->matrix)));
  });
}

tflow_status tflow_stats_raw(const tflow_ingest_options* options, const char* out_path) {
  return Guarded([&] {
    Require(options != nullptr, "options must be non-null");
    const auto result = truckflow::RunIngest(ToIngest(*options));
    Emit(out_path, truckflow::FormatStats(truckflow::RawStats(result.records)));
  });
}

void tflow_params_default(tflow_params* params) {
  if (params) *params = FromParams(truckflow::Hyperparams{});
}

tflow_status tflow_train(const tflow_dataset* train, const tflow_dataset* validation,
                         const tflow_params* params, tflow_model** out) {
  return Guarded([&] {
    Require(train && params && out, "train, params and out must be non-null");
    auto model = std::make_unique<tflow_model>();
    model->model = truckflow::Train(train->matrix, ToParams(*params), nullptr,
                                    validation ? &validation->matrix : nullptr);
    *out = model.release();
  });
}

tflow_status tflow_model_read(const char* path, tflow_model** out) {
  return Guarded([&] {
    Require(path && out, "path and out must be non-null");
    auto model = std::make_unique<tflow_model>();
    model->model = truckflow::LoadModel(path);
    *out = model.release();
  });
}

tflow_status tflow_model_write(const tflow_model* model, const char* path) {
  return Guarded([&] {
    Require(model && path, "model and path must be non-null");
    truckflow::SaveModel(model->model, path);
  });
}

void tflow_model_free(tflow_model* model) { delete model; }

size_t tflow_model_num_trees(const tflow_model* model) {
  return model ? model->model.trees.size() : 0;
}

size_t tflow_model_num_features(const tflow_model* model) {
  return model ? model->model.num_features() : 0;
}

tflow_status tflow_model_params(const tflow_model* model, tflow_params* out) {
  return Guarded([&] {
    Require(model && out, "model and out must be non-null");
    *out = FromParams(model->model.params);
  });
}

tflow_status tflow_predict(const tflow_model* model, const double* row, size_t n,
                           double* out) {
  return Guarded([&] {
    Require(out != nullptr, "out must be non-null");
    *out = model->model.Predict(Row(model, row, n));
  });
}

tflow_status tflow_evaluate(const tflow_model* model, const tflow_dataset* data,
                            int rmsle_plus_one, tflow_metrics* out) {
  return Guarded([&] {
    Require(model && data && out, "model, data and out must be non-null");
    const auto r = truckflow::Evaluate(model->model, data->matrix, rmsle_plus_one != 0);
    *out = tflow_metrics{r.rmsle, r.r_squared, r.n};
  });
}

tflow_status tflow_metrics_write(const tflow_metrics* metrics, const char* path) {
  return Guarded([&] {
    Require(metrics != nullptr, "metrics must be non-null");
    Emit(path, truckflow::FormatMetrics({metrics->rmsle, metrics->r_squared, metrics->n}));
  });
}

tflow_status tflow_cv(const tflow_dataset* data, const tflow_params* params, size_t k,
                      uint64_t seed, int rmsle_plus_one, const char* out_path,
                      tflow_cv_summary* summary) {
  return Guarded([&] {
    Require(data && params, "data and params must be non-null");
    const auto cv = truckflow::KFoldCv(data->matrix, k, ToParams(*params), seed,
                                       rmsle_plus_one != 0);
    if (out_path) truckflow::csv::WriteText(out_path, truckflow::FormatCv(cv));
    if (summary) {
      *summary = tflow_cv_summary{cv.mean_rmsle, cv.std_rmsle, cv.mean_r_squared,
                                  cv.std_r_squared};
    }
  });
}

tflow_status tflow_tune(const tflow_dataset* data, const char* grid_path,
                        const tflow_params* base, size_t k, uint64_t seed,
                        int rmsle_plus_one, const char* out_path, tflow_params* best) {
  return Guarded([&] {
    Require(data && grid_path && base, "data, grid_path and base must be non-null");
    const auto grid = truckflow::LoadGrid(grid_path);
    const auto result = truckflow::GridSearch(data->matrix, grid, ToParams(*base), k,
                                              seed, rmsle_plus_one != 0);
    if (out_path) truckflow::csv::WriteText(out_path, truckflow::FormatGridSearch(result));
    if (best) *best = FromParams(result.table[result.best].params);
  });
}

tflow_status tflow_explain(const tflow_model* model, const double* row, size_t n,
                           double* base_value, double* phi) {
  return Guarded([&] {
    Require(phi != nullptr, "phi must be non-null");
    const auto e = truckflow::ShapFast(model->model, Row(model, row, n));
    std::copy(e.phi.begin(), e.phi.end(), phi);
    if (base_value) *base_value = e.base_value;
  });
}

tflow_status tflow_explain_exact(const tflow_model* model, const double* row, size_t n,
                                 double* base_value, double* phi) {
  return Guarded([&] {
    Require(phi != nullptr, "phi must be non-null");
    const auto e = truckflow::ShapExact(model->model, Row(model, row, n));
    std::copy(e.phi.begin(), e.phi.end(), phi);
    if (base_value) *base_value = e.base_value;
  });
}

tflow_status tflow_explain_interactions(const tflow_model* model, const double* row,
                                        size_t n, double* matrix) {
  return Guarded([&] {
    Require(matrix != nullptr, "matrix must be non-null");
    const auto m = truckflow::ShapInteractions(model->model, Row(model, row, n));
    std::copy(m.values.begin(), m.values.end(), matrix);
  });
}

tflow_status tflow_explain_write(const tflow_model* model, const tflow_dataset* data,
                                 const char* shap_path, const char* const* pairs,
                                 size_t n_pairs) {
  return Guarded([&] {
    Require(model && data && shap_path, "model, data and shap_path must be non-null");
    Require(n_pairs == 0 || pairs != nullptr, "pairs must be non-null");
    const auto& m = data->matrix;
    if (m.feature_names != model->model.feature_names) {
      throw Error(ErrorCode::kSchema, "dataset columns do not match the model features");
    }
    // Validate every pair before doing the expensive work.
    std::vector<std::pair<std::string, std::string>> parsed;
    for (size_t i = 0; i < n_pairs; ++i) {
      const auto cells = truckflow::csv::Split(pairs[i] ? pairs[i] : "", ',');
      if (cells.size() != 2) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("interaction pair must be 'A,B', got '") +
                        (pairs[i] ? pairs[i] : "") + "'");
      }
      const auto a = truckflow::FeatureIndex(m.feature_names, cells[0]);
      const auto b = truckflow::FeatureIndex(m.feature_names, cells[1]);
      if (a == b) {
        throw Error(ErrorCode::kInvalidArgument, "interaction pair needs two different features");
      }
      parsed.emplace_back(cells[0], cells[1]);
    }
    truckflow::ShapTable table;
    table.feature_names = m.feature_names;
    table.row_keys = m.row_keys;
    table.explanations = truckflow::ExplainBatch(model->model, m);
    truckflow::csv::WriteText(shap_path, truckflow::FormatShapTable(table));
    for (const auto& [a, b] : parsed) {
      const auto it = truckflow::ComputeInteractionTable(model->model, m, a, b);
      truckflow::csv::WriteText(truckflow::InteractionPath(shap_path, a, b),
                                truckflow::FormatInteractionTable(it));
    }
  });
}

tflow_status tflow_zero_crossing(const double* values, const double* phi, size_t n,
                                 size_t window, int* found, double* threshold) {
  return Guarded([&] {
    Require((values && phi) || n == 0, "values and phi must be non-null");
    Require(found && threshold, "found and threshold must be non-null");
    std::vector<std::pair<double, double>> points;
    for (size_t i = 0; i < n; ++i) points.emplace_back(values[i], phi[i]);
    const auto t = truckflow::ZeroCrossingThreshold(
        std::move(points), window ? window : truckflow::kDefaultSmoothingWindow);
    *found = t ? 1 : 0;
    *threshold = t.value_or(0.0);
  });
}

tflow_status tflow_plot(const tflow_plot_options* options) {
  return Guarded([&] {
    Require(options && options->input_path && options->out_path,
            "input_path and out_path are required");
    namespace plots = truckflow::plots;
    std::string svg;
    if (options->kind == TFLOW_PLOT_INTERACTION) {
      const auto t = truckflow::ReadInteractionTable(options->input_path);
      svg = plots::PlotInteraction(t.feature_a, t.feature_b, t.values_a, t.values_b,
                                   t.interaction);
    } else {
      Require(options->data_path != nullptr, "this plot needs the dataset (data_path)");
      const auto table = truckflow::ReadShapTable(options->input_path);
      const auto data = truckflow::ReadFeatureMatrix(options->data_path);
      const auto sample = truckflow::AlignRows(data, table);
      switch (options->kind) {
        case TFLOW_PLOT_IMPORTANCE:
          svg = plots::PlotImportance(truckflow::ComputeGlobalImportance(
              table.explanations, sample,
              options->sign_vs_target ? truckflow::SignReference::kTarget
                                      : truckflow::SignReference::kAttribution));
          break;
        case TFLOW_PLOT_BEESWARM:
          svg = plots::PlotBeeswarm(table.explanations, sample);
          break;
        case TFLOW_PLOT_DEPENDENCE: {
          Require(options->feature != nullptr, "dependence plot needs a feature");
          const auto f = truckflow::FeatureIndex(sample.feature_names, options->feature);
          svg = plots::PlotDependence(
              f, table.explanations, sample,
              options->window ? options->window : truckflow::kDefaultSmoothingWindow);
          break;
        }
        default:
          throw Error(ErrorCode::kInvalidArgument, "unknown plot kind");
      }
    }
    truckflow::csv::WriteText(options->out_path, svg);
  });
}

}  // extern "C"
