#include "jdsem/jdsem.h"

#include "jdsem/config.hpp"
#include "jdsem/criteria.hpp"
#include "jdsem/csv.hpp"
#include "jdsem/error.hpp"
#include "jdsem/estimation.hpp"
#include "jdsem/harness.hpp"
#include "jdsem/presets.hpp"
#include "jdsem/quasi_lik.hpp"
#include "jdsem/sem_core.hpp"
#include "jdsem/simulator.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <algorithm>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

struct jdsem_model {
  jdsem::Candidate candidate;
};

struct jdsem_path {
  jdsem::PathData data;
};

struct jdsem_stats {
  jdsem::TruncationStats stats;
  double threshold;
};

struct jdsem_fit {
  std::string model;
  jdsem::FitResult result;
  jdsem::CriterionValue value;
};

struct jdsem_experiment {
  jdsem::ExperimentConfig config;
};

struct jdsem_table {
  jdsem::SelectionTable table;
  std::string text;
};

namespace {

thread_local std::string last_error;

jdsem_status map_code(jdsem::ErrorCode code) {
  using jdsem::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return JDSEM_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return JDSEM_ERR_DIMENSION_MISMATCH;
    case ErrorCode::GapInParamIndices: return JDSEM_ERR_GAP_IN_PARAM_INDICES;
    case ErrorCode::AsymmetricEntryMap: return JDSEM_ERR_ASYMMETRIC_ENTRY_MAP;
    case ErrorCode::NonzeroBDiagonal: return JDSEM_ERR_NONZERO_B_DIAGONAL;
    case ErrorCode::SingularPsi: return JDSEM_ERR_SINGULAR_PSI;
    case ErrorCode::NotPositiveDefinite: return JDSEM_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::NonOrthonormalF: return JDSEM_ERR_NON_ORTHONORMAL_F;
    case ErrorCode::InitNotPD: return JDSEM_ERR_INIT_NOT_PD;
    case ErrorCode::AllStartsFailed: return JDSEM_ERR_ALL_STARTS_FAILED;
    case ErrorCode::EmptyCandidateList: return JDSEM_ERR_EMPTY_CANDIDATE_LIST;
    case ErrorCode::NonUniformGrid: return JDSEM_ERR_NON_UNIFORM_GRID;
    case ErrorCode::MalformedRow: return JDSEM_ERR_MALFORMED_ROW;
    case ErrorCode::TooFewRows: return JDSEM_ERR_TOO_FEW_ROWS;
    case ErrorCode::ParseError: return JDSEM_ERR_PARSE;
    case ErrorCode::IoError: return JDSEM_ERR_IO;
  }
  return JDSEM_ERR_INTERNAL;
}

jdsem_status fail(jdsem_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
jdsem_status guarded(F&& body) {
  try {
    body();
    return JDSEM_OK;
  } catch (const jdsem::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(JDSEM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(JDSEM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(JDSEM_ERR_INTERNAL, "unknown exception");
  }
}

#define REQUIRE_ARG(cond, msg) \
  if (!(cond)) return fail(JDSEM_ERR_INVALID_ARGUMENT, msg)

jdsem::Vector copy_theta(const double* theta, size_t len) {
  return Eigen::Map<const jdsem::Vector>(theta, static_cast<Eigen::Index>(len));
}

}  // namespace

extern "C" {

const char* jdsem_version(void) { return "1.0.0"; }

const char* jdsem_status_name(jdsem_status status) {
  switch (status) {
    case JDSEM_OK: return "ok";
    case JDSEM_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case JDSEM_ERR_DIMENSION_MISMATCH: return "DimensionMismatch";
    case JDSEM_ERR_GAP_IN_PARAM_INDICES: return "GapInParamIndices";
    case JDSEM_ERR_ASYMMETRIC_ENTRY_MAP: return "AsymmetricEntryMap";
    case JDSEM_ERR_NONZERO_B_DIAGONAL: return "NonzeroBDiagonal";
    case JDSEM_ERR_SINGULAR_PSI: return "SingularPsi";
    case JDSEM_ERR_NOT_POSITIVE_DEFINITE: return "NotPositiveDefinite";
    case JDSEM_ERR_NON_ORTHONORMAL_F: return "NonOrthonormalF";
    case JDSEM_ERR_INIT_NOT_PD: return "InitNotPD";
    case JDSEM_ERR_ALL_STARTS_FAILED: return "AllStartsFailed";
    case JDSEM_ERR_EMPTY_CANDIDATE_LIST: return "EmptyCandidateList";
    case JDSEM_ERR_NON_UNIFORM_GRID: return "NonUniformGrid";
    case JDSEM_ERR_MALFORMED_ROW: return "MalformedRow";
    case JDSEM_ERR_TOO_FEW_ROWS: return "TooFewRows";
    case JDSEM_ERR_PARSE: return "ParseError";
    case JDSEM_ERR_IO: return "IoError";
    case JDSEM_ERR_NO_INIT: return "NoInit";
    case JDSEM_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* jdsem_last_error(void) { return last_error.c_str(); }

int jdsem_status_is_numerical(jdsem_status status) {
  return status == JDSEM_ERR_SINGULAR_PSI || status == JDSEM_ERR_NOT_POSITIVE_DEFINITE ||
         status == JDSEM_ERR_INIT_NOT_PD || status == JDSEM_ERR_ALL_STARTS_FAILED;
}

// ---- models

jdsem_status jdsem_model_load(const char* path, jdsem_model** out) {
  REQUIRE_ARG(path && out, "null argument");
  return guarded([&] { *out = new jdsem_model{jdsem::load_model(path)}; });
}

jdsem_status jdsem_model_preset(const char* name, jdsem_model** out) {
  REQUIRE_ARG(name && out, "null argument");
  return guarded([&] {
    auto c = jdsem::preset_candidate(name);
    if (!c) throw jdsem::Error(jdsem::ErrorCode::InvalidArgument, std::string("unknown preset '") + name + "'");
    *out = new jdsem_model{std::move(*c)};
  });
}

void jdsem_model_free(jdsem_model* model) { delete model; }

const char* jdsem_model_name(const jdsem_model* model) { return model ? model->candidate.name.c_str() : ""; }
size_t jdsem_model_num_params(const jdsem_model* model) { return model ? model->candidate.spec.q() : 0; }
size_t jdsem_model_num_observables(const jdsem_model* model) { return model ? model->candidate.spec.p() : 0; }
int jdsem_model_has_init(const jdsem_model* model) { return model && model->candidate.init ? 1 : 0; }

jdsem_status jdsem_model_init(const jdsem_model* model, double* out, size_t len) {
  REQUIRE_ARG(model && out, "null argument");
  if (!model->candidate.init) return fail(JDSEM_ERR_NO_INIT, "model has no init point");
  const auto& init = *model->candidate.init;
  if (len != static_cast<size_t>(init.size()))
    return fail(JDSEM_ERR_DIMENSION_MISMATCH, "buffer length differs from the parameter count");
  std::memcpy(out, init.data(), len * sizeof(double));
  return JDSEM_OK;
}

jdsem_status jdsem_model_sigma(const jdsem_model* model, const double* theta, size_t len, double* out,
                               size_t out_len, int* positive_definite) {
  REQUIRE_ARG(model && theta && out, "null argument");
  const size_t p = model->candidate.spec.p();
  if (out_len != p * p) return fail(JDSEM_ERR_DIMENSION_MISMATCH, "output buffer must hold p*p values");
  return guarded([&] {
    const jdsem::ThetaVector t(model->candidate.spec, copy_theta(theta, len));
    const auto implied = jdsem::assemble_sigma(model->candidate.spec, t);
    for (size_t i = 0; i < p; ++i)
      for (size_t j = 0; j < p; ++j)
        out[i * p + j] = implied.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (positive_definite) *positive_definite = implied.pd ? 1 : 0;
  });
}

jdsem_status jdsem_model_rank(const jdsem_model* model, const double* theta, size_t len, size_t* rank) {
  REQUIRE_ARG(model && theta && rank, "null argument");
  return guarded([&] {
    const jdsem::ThetaVector t(model->candidate.spec, copy_theta(theta, len));
    *rank = jdsem::identifiability_rank(model->candidate.spec, t);
  });
}

jdsem_status jdsem_read_theta(const char* path, double** values, size_t* len) {
  REQUIRE_ARG(path && values && len, "null argument");
  return guarded([&] {
    const auto v = jdsem::read_theta_file(path);
    auto* buf = static_cast<double*>(std::malloc(std::max<size_t>(1, v.size()) * sizeof(double)));
    if (!buf) throw std::bad_alloc();
    if (!v.empty()) std::memcpy(buf, v.data(), v.size() * sizeof(double));
    *values = buf;
    *len = v.size();
  });
}

void jdsem_free_doubles(double* values) { std::free(values); }

// ---- paths

static jdsem_status simulate_with(const jdsem::TrueModelSpec& model, size_t n, double t_end, uint64_t seed,
                                  jdsem_path** out) {
  return guarded([&] {
    jdsem::SimConfig cfg;
    cfg.n = n;
    cfg.t_end = t_end;
    cfg.seed = seed;
    *out = new jdsem_path{jdsem::simulate_observations(model, cfg)};
  });
}

jdsem_status jdsem_simulate_preset(const char* preset, size_t n, double t_end, uint64_t seed, jdsem_path** out) {
  REQUIRE_ARG(preset && out, "null argument");
  if (std::strcmp(preset, "reference") != 0)
    return fail(JDSEM_ERR_INVALID_ARGUMENT, std::string("unknown true-model preset '") + preset + "'");
  return simulate_with(jdsem::reference_true_model(), n, t_end, seed, out);
}

jdsem_status jdsem_simulate_config(const char* true_model_path, size_t n, double t_end, uint64_t seed,
                                   jdsem_path** out) {
  REQUIRE_ARG(true_model_path && out, "null argument");
  std::optional<jdsem::TrueModelSpec> model;
  const jdsem_status s = guarded([&] { model = jdsem::load_true_model(true_model_path); });
  if (s != JDSEM_OK) return s;
  return simulate_with(*model, n, t_end, seed, out);
}

jdsem_status jdsem_path_read_csv(const char* path, jdsem_path** out) {
  REQUIRE_ARG(path && out, "null argument");
  return guarded([&] { *out = new jdsem_path{jdsem::ingest_csv(path)}; });
}

jdsem_status jdsem_path_write_csv(const jdsem_path* path, const char* file) {
  REQUIRE_ARG(path && file, "null argument");
  return guarded([&] { jdsem::write_path_csv(path->data, std::filesystem::path(file)); });
}

void jdsem_path_free(jdsem_path* path) { delete path; }
size_t jdsem_path_steps(const jdsem_path* path) { return path ? path->data.n() : 0; }
size_t jdsem_path_dim(const jdsem_path* path) { return path ? path->data.dim() : 0; }
double jdsem_path_step(const jdsem_path* path) { return path ? path->data.h() : 0.0; }

double jdsem_path_value(const jdsem_path* path, size_t i, size_t j) {
  if (!path || i > path->data.n() || j >= path->data.dim()) return std::numeric_limits<double>::quiet_NaN();
  return path->data.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

// ---- truncation statistics

jdsem_status jdsem_stats_compute(const jdsem_path* path, double d, double rho, jdsem_stats** out) {
  REQUIRE_ARG(path && out, "null argument");
  return guarded([&] {
    const jdsem::TruncationRule rule(d, rho);
    *out = new jdsem_stats{jdsem::truncation_stats(path->data, rule),
                           jdsem::truncation_threshold(path->data.h(), rule)};
  });
}

void jdsem_stats_free(jdsem_stats* stats) { delete stats; }
size_t jdsem_stats_steps(const jdsem_stats* stats) { return stats ? stats->stats.n : 0; }
size_t jdsem_stats_kept(const jdsem_stats* stats) { return stats ? stats->stats.n_kept : 0; }
double jdsem_stats_threshold(const jdsem_stats* stats) { return stats ? stats->threshold : 0.0; }

// ---- fitting

void jdsem_fit_options_default(jdsem_fit_options* options) {
  if (!options) return;
  const jdsem::FitConfig defaults;
  options->init_mode = JDSEM_INIT_MODEL;
  options->init = nullptr;
  options->init_len = 0;
  options->starts = 5;
  options->seed = 0;
  options->max_iters = defaults.max_iters;
  options->grad_tol = defaults.grad_tol;
  options->step_tol = defaults.step_tol;
  options->log_positives = defaults.reparameterize_positives ? 1 : 0;
}

jdsem_status jdsem_fit_model(const jdsem_model* model, const jdsem_stats* stats, const jdsem_fit_options* options,
                             jdsem_fit** out) {
  REQUIRE_ARG(model && stats && out, "null argument");
  jdsem_fit_options opts;
  jdsem_fit_options_default(&opts);
  if (options) opts = *options;

  jdsem::FitConfig cfg;
  cfg.max_iters = opts.max_iters;
  cfg.grad_tol = opts.grad_tol;
  cfg.step_tol = opts.step_tol;
  cfg.reparameterize_positives = opts.log_positives != 0;
  switch (opts.init_mode) {
    case JDSEM_INIT_MODEL:
      if (!model->candidate.init)
        return fail(JDSEM_ERR_NO_INIT, "model '" + model->candidate.name + "' has no init point");
      cfg.init = jdsem::GivenPoint{*model->candidate.init};
      break;
    case JDSEM_INIT_GIVEN:
      REQUIRE_ARG(opts.init, "init mode GIVEN without an init vector");
      cfg.init = jdsem::GivenPoint{copy_theta(opts.init, opts.init_len)};
      break;
    case JDSEM_INIT_MULTI:
      REQUIRE_ARG(opts.starts > 0, "multi-start needs at least one start");
      cfg.init = jdsem::MultiStart{opts.starts, opts.seed};
      break;
    default:
      return fail(JDSEM_ERR_INVALID_ARGUMENT, "unknown init mode");
  }

  return guarded([&] {
    const auto& c = model->candidate;
    const auto& st = stats->stats;
    auto result = jdsem::fit(c.spec, st, st.n, st.h, cfg);
    auto value = jdsem::make_criterion_value(c.name, result.h_value, c.spec.q(), st.n, result.converged);
    *out = new jdsem_fit{c.name, std::move(result), std::move(value)};
  });
}

void jdsem_fit_free(jdsem_fit* fit) { delete fit; }

double jdsem_fit_h(const jdsem_fit* fit) { return fit ? fit->result.h_value : 0.0; }
double jdsem_fit_qbic(const jdsem_fit* fit) { return fit ? fit->value.qbic : 0.0; }
double jdsem_fit_qaic(const jdsem_fit* fit) { return fit ? fit->value.qaic : 0.0; }
int jdsem_fit_converged(const jdsem_fit* fit) { return fit && fit->result.converged ? 1 : 0; }
int jdsem_fit_iterations(const jdsem_fit* fit) { return fit ? fit->result.iterations : 0; }
double jdsem_fit_grad_norm(const jdsem_fit* fit) { return fit ? fit->result.grad_norm : 0.0; }
size_t jdsem_fit_kept(const jdsem_fit* fit) { return fit ? fit->result.n_kept : 0; }
size_t jdsem_fit_num_params(const jdsem_fit* fit) { return fit ? fit->value.q : 0; }
const char* jdsem_fit_model_name(const jdsem_fit* fit) { return fit ? fit->model.c_str() : ""; }
const char* jdsem_fit_stop_reason(const jdsem_fit* fit) { return fit ? jdsem::to_string(fit->result.stop) : ""; }

jdsem_status jdsem_fit_theta(const jdsem_fit* fit, double* out, size_t len) {
  REQUIRE_ARG(fit && out, "null argument");
  const auto& v = fit->result.theta_hat.values();
  if (len != static_cast<size_t>(v.size()))
    return fail(JDSEM_ERR_DIMENSION_MISMATCH, "buffer length differs from the parameter count");
  std::memcpy(out, v.data(), len * sizeof(double));
  return JDSEM_OK;
}

jdsem_status jdsem_select(const jdsem_fit* const* fits, size_t count, jdsem_criterion criterion, size_t* winner,
                          int* tie) {
  REQUIRE_ARG(winner && (fits || count == 0), "null argument");
  REQUIRE_ARG(criterion == JDSEM_QBIC || criterion == JDSEM_QAIC, "unknown criterion");
  return guarded([&] {
    std::vector<jdsem::CriterionValue> values;
    values.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!fits[i]) throw jdsem::Error(jdsem::ErrorCode::InvalidArgument, "null fit in candidate list");
      values.push_back(fits[i]->value);
    }
    const auto s = jdsem::select(values, criterion == JDSEM_QBIC ? jdsem::Criterion::QBIC : jdsem::Criterion::QAIC);
    *winner = s.index;
    if (tie) *tie = s.tie ? 1 : 0;
  });
}

double jdsem_qaic_overfit_probability(unsigned dq) {
  if (dq == 0) return std::numeric_limits<double>::quiet_NaN();
  return jdsem::qaic_overfit_probability(dq);
}

// ---- experiments

jdsem_status jdsem_experiment_load(const char* path, jdsem_experiment** out) {
  REQUIRE_ARG(path && out, "null argument");
  return guarded([&] { *out = new jdsem_experiment{jdsem::parse_experiment(path)}; });
}

jdsem_status jdsem_experiment_reference(jdsem_experiment** out) {
  REQUIRE_ARG(out, "null argument");
  return guarded([&] { *out = new jdsem_experiment{jdsem::reference_experiment()}; });
}

void jdsem_experiment_free(jdsem_experiment* exp) { delete exp; }

jdsem_status jdsem_experiment_set_replications(jdsem_experiment* exp, size_t replications) {
  REQUIRE_ARG(exp, "null argument");
  REQUIRE_ARG(replications > 0, "replications must be positive");
  exp->config.replications = replications;
  return JDSEM_OK;
}

jdsem_status jdsem_experiment_set_n_grid(jdsem_experiment* exp, const size_t* n_grid, size_t len) {
  REQUIRE_ARG(exp && n_grid && len > 0, "empty n grid");
  for (size_t i = 0; i < len; ++i) REQUIRE_ARG(n_grid[i] >= 2, "every n must be at least 2");
  exp->config.n_grid.assign(n_grid, n_grid + len);
  return JDSEM_OK;
}

jdsem_status jdsem_experiment_set_seed(jdsem_experiment* exp, uint64_t seed) {
  REQUIRE_ARG(exp, "null argument");
  exp->config.master_seed = seed;
  return JDSEM_OK;
}

jdsem_status jdsem_experiment_set_threads(jdsem_experiment* exp, unsigned threads) {
  REQUIRE_ARG(exp, "null argument");
  exp->config.threads = threads;
  return JDSEM_OK;
}

jdsem_status jdsem_experiment_run(const jdsem_experiment* exp, jdsem_table** out) {
  REQUIRE_ARG(exp && out, "null argument");
  return guarded([&] {
    auto table = jdsem::run_experiment(exp->config);
    std::ostringstream text;
    jdsem::write_table_text(table, text);
    *out = new jdsem_table{std::move(table), text.str()};
  });
}

void jdsem_table_free(jdsem_table* table) { delete table; }
size_t jdsem_table_num_models(const jdsem_table* table) { return table ? table->table.models.size() : 0; }

const char* jdsem_table_model_name(const jdsem_table* table, size_t model) {
  if (!table || model >= table->table.models.size()) return "";
  return table->table.models[model].c_str();
}

size_t jdsem_table_num_n(const jdsem_table* table) { return table ? table->table.n_grid.size() : 0; }

size_t jdsem_table_n(const jdsem_table* table, size_t n_index) {
  if (!table || n_index >= table->table.n_grid.size()) return 0;
  return table->table.n_grid[n_index];
}

size_t jdsem_table_replications(const jdsem_table* table) { return table ? table->table.replications : 0; }

size_t jdsem_table_count(const jdsem_table* table, jdsem_criterion criterion, size_t n_index, size_t model) {
  if (!table || n_index >= table->table.n_grid.size() || model >= table->table.models.size()) return 0;
  return table->table.count(criterion == JDSEM_QBIC ? jdsem::Criterion::QBIC : jdsem::Criterion::QAIC, n_index,
                            model);
}

size_t jdsem_table_failed(const jdsem_table* table, size_t n_index) {
  if (!table || n_index >= table->table.failed.size()) return 0;
  return table->table.failed[n_index];
}

const char* jdsem_table_text(const jdsem_table* table) { return table ? table->text.c_str() : ""; }

jdsem_status jdsem_table_write_csv(const jdsem_table* table, const char* file) {
  REQUIRE_ARG(table && file, "null argument");
  return guarded([&] {
    std::ofstream out(file);
    if (!out) throw jdsem::Error(jdsem::ErrorCode::IoError, std::string("cannot open '") + file + "'");
    jdsem::write_table_csv(table->table, out);
    if (!out) throw jdsem::Error(jdsem::ErrorCode::IoError, std::string("write failed for '") + file + "'");
  });
}

}  // extern "C"
