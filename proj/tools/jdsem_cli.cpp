// jdsem-cli: simulate paths, fit and compare SEMs, run selection experiments.
// Exit status: 0 success, 2 configuration/input error, 3 numerical failure.

#include "jdsem/jdsem.h"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

struct Failure {
  jdsem_status status;
};

void check(jdsem_status s) {
  if (s != JDSEM_OK) throw Failure{s};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ModelPtr = std::unique_ptr<jdsem_model, Deleter<jdsem_model, jdsem_model_free>>;
using PathPtr = std::unique_ptr<jdsem_path, Deleter<jdsem_path, jdsem_path_free>>;
using StatsPtr = std::unique_ptr<jdsem_stats, Deleter<jdsem_stats, jdsem_stats_free>>;
using FitPtr = std::unique_ptr<jdsem_fit, Deleter<jdsem_fit, jdsem_fit_free>>;
using ExperimentPtr = std::unique_ptr<jdsem_experiment, Deleter<jdsem_experiment, jdsem_experiment_free>>;
using TablePtr = std::unique_ptr<jdsem_table, Deleter<jdsem_table, jdsem_table_free>>;

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// "preset:model1" or a model file.
ModelPtr load_model(const std::string& ref) {
  jdsem_model* m = nullptr;
  const std::string prefix = "preset:";
  if (ref.rfind(prefix, 0) == 0) {
    check(jdsem_model_preset(ref.substr(prefix.size()).c_str(), &m));
  } else {
    check(jdsem_model_load(ref.c_str(), &m));
  }
  return ModelPtr(m);
}

std::vector<double> read_theta(const std::string& file) {
  double* values = nullptr;
  std::size_t len = 0;
  check(jdsem_read_theta(file.c_str(), &values, &len));
  std::vector<double> out(values, values + len);
  jdsem_free_doubles(values);
  return out;
}

StatsPtr load_stats(const std::string& data, double d, double rho) {
  jdsem_path* p = nullptr;
  check(jdsem_path_read_csv(data.c_str(), &p));
  PathPtr path(p);
  jdsem_stats* s = nullptr;
  check(jdsem_stats_compute(path.get(), d, rho, &s));
  return StatsPtr(s);
}

struct InitChoice {
  std::string from;       // "spec" or a theta file
  std::size_t multi = 0;  // > 0: multi-start
  std::uint64_t seed = 1;
};

FitPtr run_fit(const jdsem_model* model, const jdsem_stats* stats, const InitChoice& init,
               std::vector<double>& init_storage) {
  jdsem_fit_options opts;
  jdsem_fit_options_default(&opts);
  if (init.multi > 0) {
    opts.init_mode = JDSEM_INIT_MULTI;
    opts.starts = init.multi;
    opts.seed = init.seed;
  } else if (!init.from.empty() && init.from != "spec") {
    init_storage = read_theta(init.from);
    opts.init_mode = JDSEM_INIT_GIVEN;
    opts.init = init_storage.data();
    opts.init_len = init_storage.size();
  } else if (init.from.empty() && !jdsem_model_has_init(model)) {
    // No init in the model file and none requested: random restarts.
    opts.init_mode = JDSEM_INIT_MULTI;
    opts.starts = 5;
    opts.seed = init.seed;
  }
  jdsem_fit* f = nullptr;
  check(jdsem_fit_model(model, stats, &opts, &f));
  return FitPtr(f);
}

int cmd_simulate(const std::string& preset, const std::string& config, std::size_t n, double t, std::uint64_t seed,
                 const std::string& out) {
  jdsem_path* p = nullptr;
  if (!config.empty()) {
    check(jdsem_simulate_config(config.c_str(), n, t, seed, &p));
  } else {
    check(jdsem_simulate_preset(preset.c_str(), n, t, seed, &p));
  }
  PathPtr path(p);
  check(jdsem_path_write_csv(path.get(), out.c_str()));
  std::cout << "wrote " << out << ": " << jdsem_path_steps(path.get()) + 1 << " rows, p = " << jdsem_path_dim(path.get())
            << ", h = " << real(jdsem_path_step(path.get())) << "\n";
  return kOk;
}

int cmd_fit(const std::string& model_ref, const std::string& data, double d, double rho, const InitChoice& init) {
  const ModelPtr model = load_model(model_ref);
  const StatsPtr stats = load_stats(data, d, rho);
  std::vector<double> storage;
  const FitPtr fit = run_fit(model.get(), stats.get(), init, storage);
  const std::size_t q = jdsem_fit_num_params(fit.get());
  std::vector<double> theta(q);
  if (q > 0) check(jdsem_fit_theta(fit.get(), theta.data(), q));

  std::cout << "model       " << jdsem_fit_model_name(fit.get()) << "\n"
            << "q           " << q << "\n"
            << "n           " << jdsem_stats_steps(stats.get()) << "\n"
            << "n_kept      " << jdsem_fit_kept(fit.get()) << "\n"
            << "H           " << real(jdsem_fit_h(fit.get())) << "\n"
            << "QBIC        " << real(jdsem_fit_qbic(fit.get())) << "\n"
            << "QAIC        " << real(jdsem_fit_qaic(fit.get())) << "\n"
            << "converged   " << (jdsem_fit_converged(fit.get()) ? "yes" : "no") << " ("
            << jdsem_fit_stop_reason(fit.get()) << ")\n"
            << "iterations  " << jdsem_fit_iterations(fit.get()) << "\n"
            << "grad_norm   " << real(jdsem_fit_grad_norm(fit.get())) << "\n";
  for (std::size_t k = 0; k < q; ++k) std::cout << "theta" << k + 1 << (k + 1 < 10 ? "      " : "     ") << real(theta[k]) << "\n";
  return kOk;
}

int cmd_select(const std::vector<std::string>& refs, const std::string& data, double d, double rho,
               const InitChoice& init) {
  const StatsPtr stats = load_stats(data, d, rho);
  std::vector<ModelPtr> models;
  std::vector<FitPtr> fits;
  for (const std::string& ref : refs) {
    models.push_back(load_model(ref));
    std::vector<double> storage;
    fits.push_back(run_fit(models.back().get(), stats.get(), init, storage));
  }
  std::vector<const jdsem_fit*> raw;
  for (const FitPtr& f : fits) raw.push_back(f.get());

  std::printf("n = %zu, kept = %zu, threshold = %.17g\n\n", jdsem_stats_steps(stats.get()), jdsem_stats_kept(stats.get()),
              jdsem_stats_threshold(stats.get()));
  std::printf("%-16s %4s %24s %24s %24s %s\n", "model", "q", "H", "QBIC", "QAIC", "converged");
  for (const FitPtr& f : fits) {
    std::printf("%-16s %4zu %24.17g %24.17g %24.17g %s\n", jdsem_fit_model_name(f.get()), jdsem_fit_num_params(f.get()),
                jdsem_fit_h(f.get()), jdsem_fit_qbic(f.get()), jdsem_fit_qaic(f.get()),
                jdsem_fit_converged(f.get()) ? "yes" : "no");
  }
  std::printf("\n");
  for (jdsem_criterion c : {JDSEM_QBIC, JDSEM_QAIC}) {
    std::size_t winner = 0;
    int tie = 0;
    check(jdsem_select(raw.data(), raw.size(), c, &winner, &tie));
    std::printf("%s selects %s%s\n", c == JDSEM_QBIC ? "QBIC" : "QAIC", jdsem_fit_model_name(raw[winner]),
                tie ? " (tie, broken by smaller q then name)" : "");
  }
  return kOk;
}

int cmd_experiment(const std::string& config, std::optional<std::size_t> reps, const std::string& out,
                   std::optional<unsigned> threads, std::optional<std::uint64_t> seed) {
  jdsem_experiment* e = nullptr;
  if (config == "preset:reference") {
    check(jdsem_experiment_reference(&e));
  } else {
    check(jdsem_experiment_load(config.c_str(), &e));
  }
  ExperimentPtr exp(e);
  if (reps) check(jdsem_experiment_set_replications(exp.get(), *reps));
  if (threads) check(jdsem_experiment_set_threads(exp.get(), *threads));
  if (seed) check(jdsem_experiment_set_seed(exp.get(), *seed));
  jdsem_table* t = nullptr;
  check(jdsem_experiment_run(exp.get(), &t));
  TablePtr table(t);
  std::cout << jdsem_table_text(table.get());
  if (!out.empty()) {
    check(jdsem_table_write_csv(table.get(), out.c_str()));
    std::cout << "wrote " << out << "\n";
  }
  return kOk;
}

int cmd_rank_check(const std::string& model_ref, const std::string& theta_src) {
  const ModelPtr model = load_model(model_ref);
  const std::size_t q = jdsem_model_num_params(model.get());
  std::vector<double> theta(q);
  if (theta_src == "spec") {
    check(jdsem_model_init(model.get(), theta.data(), q));
  } else {
    theta = read_theta(theta_src);
  }
  std::size_t rank = 0;
  check(jdsem_model_rank(model.get(), theta.data(), theta.size(), &rank));
  std::cout << "model " << jdsem_model_name(model.get()) << ": rank " << rank << " of q = " << q
            << (rank == q ? " (full column rank)" : " (rank deficient)") << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump-diffusion SEM fitting and QBIC/QAIC model selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(jdsem_version()));

  std::string preset = "reference", sim_config, out;
  std::size_t n = 50000;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  auto* sim = app.add_subcommand("simulate", "Simulate an observation path to CSV");
  auto* sim_preset = sim->add_option("--preset", preset, "Built-in true model")->check(CLI::IsMember({"reference"}));
  sim->add_option("--config", sim_config, "True-model file")->excludes(sim_preset);
  sim->add_option("--n", n, "Number of increments")->check(CLI::PositiveNumber);
  sim->add_option("--t", t_end, "Horizon T")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "Seed");
  sim->add_option("--out", out, "Output CSV")->required();

  std::string model_ref, data;
  double d = 10.0, rho = 0.4;
  InitChoice init;
  auto* fit = app.add_subcommand("fit", "Fit one model to a path");
  fit->add_option("--model", model_ref, "Model file or preset:modelN")->required();
  fit->add_option("--data", data, "Path CSV")->required();
  fit->add_option("--d", d, "Truncation scale D");
  fit->add_option("--rho", rho, "Truncation exponent rho");
  auto* fit_init = fit->add_option("--init-from", init.from, "'spec' or a theta file");
  fit->add_option("--multi-start", init.multi, "Random starts")->excludes(fit_init);
  fit->add_option("--seed", init.seed, "Seed for random starts");

  std::vector<std::string> model_refs;
  auto* sel = app.add_subcommand("select", "Fit several models and select by QBIC and QAIC");
  sel->add_option("--models", model_refs, "Model files or preset:modelN")->required();
  sel->add_option("--data", data, "Path CSV")->required();
  sel->add_option("--d", d, "Truncation scale D");
  sel->add_option("--rho", rho, "Truncation exponent rho");
  auto* sel_init = sel->add_option("--init-from", init.from, "'spec' or a theta file");
  sel->add_option("--multi-start", init.multi, "Random starts")->excludes(sel_init);
  sel->add_option("--seed", init.seed, "Seed for random starts");

  std::string exp_config;
  std::optional<std::size_t> reps;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> exp_seed;
  auto* exp = app.add_subcommand("experiment", "Monte Carlo model-selection experiment");
  exp->add_option("--config", exp_config, "Experiment file or preset:reference")->required();
  exp->add_option("--reps", reps, "Override the number of replications")->check(CLI::PositiveNumber);
  exp->add_option("--out", out, "Table CSV");
  exp->add_option("--threads", threads, "Worker threads (0 = all cores)");
  exp->add_option("--seed", exp_seed, "Override the master seed");

  std::string theta_src;
  auto* rank = app.add_subcommand("rank-check", "Rank of the covariance Jacobian");
  rank->add_option("--model", model_ref, "Model file or preset:modelN")->required();
  rank->add_option("--theta", theta_src, "'spec' or a theta file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return cmd_simulate(preset, sim_config, n, t_end, seed, out);
    if (*fit) return cmd_fit(model_ref, data, d, rho, init);
    if (*sel) return cmd_select(model_refs, data, d, rho, init);
    if (*exp) return cmd_experiment(exp_config, reps, out, threads, exp_seed);
    if (*rank) return cmd_rank_check(model_ref, theta_src);
  } catch (const Failure& f) {
    std::cerr << "error: " << jdsem_last_error() << "\n";
    return jdsem_status_is_numerical(f.status) ? kNumericalError : kConfigError;
  }
  return kConfigError;
}
