#include "jdsem/harness.hpp"

#include "jdsem/config.hpp"
#include "jdsem/csv.hpp"
#include "jdsem/error.hpp"
#include "jdsem/seed.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

namespace jdsem {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

constexpr std::string_view kPresetPrefix = "preset:";

Candidate resolve_candidate(const std::filesystem::path& base, const std::string& ref) {
  if (ref.rfind(kPresetPrefix, 0) == 0) {
    const std::string name = ref.substr(kPresetPrefix.size());
    if (auto c = preset_candidate(name)) return std::move(*c);
    throw Error(ErrorCode::ParseError, "unknown model preset '" + name + "'");
  }
  return load_model(resolve(base, ref));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (replications < 1) throw Error(ErrorCode::InvalidArgument, "replications must be >= 1");
  if (n_grid.empty()) throw Error(ErrorCode::InvalidArgument, "n_grid must not be empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw Error(ErrorCode::InvalidArgument, "every n must be >= 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw Error(ErrorCode::InvalidArgument, "n_grid must be ascending");
  }
  if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidateList, "experiment has no candidates");
  true_model.validate();
  for (const CandidateConfig& c : candidates) {
    if (c.candidate.spec.p() != true_model.p()) {
      throw Error(ErrorCode::DimensionMismatch, "candidate '" + c.candidate.name + "' has p = " +
                                                    std::to_string(c.candidate.spec.p()) + ", data has p = " +
                                                    std::to_string(true_model.p()));
    }
    if (!c.multi_start && !c.candidate.init && c.candidate.spec.q() > 0) {
      throw Error(ErrorCode::InvalidArgument,
                  "candidate '" + c.candidate.name + "' has neither an init point nor multi_start");
    }
  }
}

ExperimentConfig reference_experiment() {
  ExperimentConfig cfg;
  cfg.true_model = reference_true_model();
  for (Candidate& c : reference_candidates()) cfg.candidates.push_back(CandidateConfig{std::move(c), std::nullopt});
  return cfg;
}

ExperimentConfig parse_experiment(const std::filesystem::path& file) {
  const ConfigFile cf = load_config(file);
  const std::filesystem::path base = file.parent_path();
  ExperimentConfig cfg;
  const ConfigSection& top = cf.sections.front();
  for (const ConfigEntry& e : top.entries) {
    static const std::vector<std::string> known = {"true_model", "replications", "n_grid",   "t_end",
                                                   "d",          "rho",          "seed",     "threads",
                                                   "max_iters",  "grad_tol",     "step_tol", "log_positives"};
    if (std::find(known.begin(), known.end(), e.key) == known.end()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }

  const std::string truth = top.find("true_model") ? top.find("true_model")->value : "preset:reference";
  if (truth == "preset:reference") {
    cfg.true_model = reference_true_model();
  } else if (truth.rfind(kPresetPrefix, 0) == 0) {
    throw Error(ErrorCode::ParseError, "unknown true-model preset '" + truth + "'");
  } else {
    cfg.true_model = load_true_model(resolve(base, truth));
  }
  if (const auto* e = top.find("replications")) cfg.replications = parse_count(*e);
  if (const auto* e = top.find("n_grid")) {
    cfg.n_grid.clear();
    for (double v : parse_reals(*e)) {
      if (!(v >= 2.0) || v != std::floor(v)) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(e->line) + ": n_grid entries must be integers >= 2");
      }
      cfg.n_grid.push_back(static_cast<std::size_t>(v));
    }
  }
  if (const auto* e = top.find("t_end")) cfg.t_end = parse_real(*e);
  const double d = top.find("d") ? parse_real(*top.find("d")) : cfg.rule.d();
  const double rho = top.find("rho") ? parse_real(*top.find("rho")) : cfg.rule.rho();
  cfg.rule = TruncationRule(d, rho);
  if (const auto* e = top.find("seed")) cfg.master_seed = parse_count(*e);
  if (const auto* e = top.find("threads")) cfg.threads = static_cast<unsigned>(parse_count(*e));
  if (const auto* e = top.find("max_iters")) cfg.fit.max_iters = static_cast<int>(parse_count(*e));
  if (const auto* e = top.find("grad_tol")) cfg.fit.grad_tol = parse_real(*e);
  if (const auto* e = top.find("step_tol")) cfg.fit.step_tol = parse_real(*e);
  if (const auto* e = top.find("log_positives")) cfg.fit.reparameterize_positives = parse_bool(*e);

  for (const ConfigSection& s : cf.sections) {
    if (s.name.empty()) continue;
    if (s.name != "candidate") {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(s.line) + ": unknown section [" + s.name + "]");
    }
    for (const ConfigEntry& e : s.entries) {
      if (e.key != "spec" && e.key != "name" && e.key != "init" && e.key != "multi_start") {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
      }
    }
    CandidateConfig c{resolve_candidate(base, s.require("spec").value), std::nullopt};
    if (const auto* e = s.find("name")) c.candidate.name = e->value;
    if (const auto* e = s.find("init")) {
      const std::vector<double> v = parse_reals(*e);
      c.candidate.init = ThetaVector(c.candidate.spec, std::span<const double>(v)).values();
    }
    if (const auto* e = s.find("multi_start")) c.multi_start = parse_count(*e);
    cfg.candidates.push_back(std::move(c));
  }
  if (cfg.candidates.empty()) {
    for (Candidate& c : reference_candidates()) cfg.candidates.push_back(CandidateConfig{std::move(c), std::nullopt});
  }
  cfg.validate();
  return cfg;
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep) {
  return derive_seed(master, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

ReplicationResult run_replication(const ExperimentConfig& cfg, std::size_t n, std::size_t rep) {
  ReplicationResult out;
  out.seed = replication_seed(cfg.master_seed, n, rep);
  const PathData path = simulate_observations(cfg.true_model, SimConfig{n, cfg.t_end, out.seed});
  const TruncationStats stats = truncation_stats(path, cfg.rule);
  out.n_kept = stats.n_kept;

  bool all_ok = true;
  for (std::size_t i = 0; i < cfg.candidates.size(); ++i) {
    const CandidateConfig& cand = cfg.candidates[i];
    FitConfig fc = cfg.fit;
    if (cand.multi_start) {
      fc.init = MultiStart{*cand.multi_start, derive_seed(out.seed, {0xfeedULL, i})};
    } else {
      fc.init = GivenPoint{cand.candidate.init.value_or(Vector())};
    }
    CandidateOutcome oc;
    try {
      oc.fit = fit(cand.candidate.spec, stats, n, path.h(), fc);
      if (!oc.fit->converged) out.any_nonconverged = true;
    } catch (const Error& e) {
      oc.error = e.what();
      all_ok = false;
    }
    out.outcomes.push_back(std::move(oc));
  }
  if (!all_ok) return out;

  for (std::size_t i = 0; i < cfg.candidates.size(); ++i) {
    const FitResult& r = *out.outcomes[i].fit;
    out.values.push_back(
        make_criterion_value(cfg.candidates[i].candidate.name, r.h_value, cfg.candidates[i].candidate.spec.q(), n,
                             r.converged));
  }
  out.qbic_winner = select(out.values, Criterion::QBIC).index;
  out.qaic_winner = select(out.values, Criterion::QAIC).index;
  return out;
}

std::size_t SelectionTable::count(Criterion c, std::size_t n_index, std::size_t model) const {
  return counts.at(c == Criterion::QBIC ? 0 : 1).at(n_index).at(model);
}

SelectionTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t reps = cfg.replications;
  const std::size_t total = reps * cfg.n_grid.size();

  std::vector<std::optional<std::size_t>> qbic(total), qaic(total);
  std::vector<char> nonconv(total, 0);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      const std::size_t ni = job / reps, rep = job % reps;
      try {
        const ReplicationResult r = run_replication(cfg, cfg.n_grid[ni], rep);
        qbic[job] = r.qbic_winner;
        qaic[job] = r.qaic_winner;
        nonconv[job] = r.any_nonconverged ? 1 : 0;
      } catch (const std::exception&) {
        // Counted in the failed column.
      }
    }
  };
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  SelectionTable table;
  for (const CandidateConfig& c : cfg.candidates) table.models.push_back(c.candidate.name);
  table.n_grid = cfg.n_grid;
  table.replications = reps;
  table.master_seed = cfg.master_seed;
  table.threads = threads;
  const std::size_t m = cfg.candidates.size();
  table.counts.assign(2, std::vector<std::vector<std::size_t>>(cfg.n_grid.size(), std::vector<std::size_t>(m, 0)));
  table.failed.assign(cfg.n_grid.size(), 0);
  table.nonconverged.assign(cfg.n_grid.size(), 0);
  for (std::size_t job = 0; job < total; ++job) {
    const std::size_t ni = job / reps;
    table.nonconverged[ni] += static_cast<std::size_t>(nonconv[job]);
    if (!qbic[job]) {
      ++table.failed[ni];
      continue;
    }
    ++table.counts[0][ni][*qbic[job]];
    ++table.counts[1][ni][*qaic[job]];
  }
  table.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

void write_table_text(const SelectionTable& table, std::ostream& out) {
  std::size_t width = 8;
  for (const std::string& m : table.models) width = std::max(width, m.size() + 2);
  for (int c = 0; c < 2; ++c) {
    out << "Selections by " << (c == 0 ? "QBIC" : "QAIC") << " (R = " << table.replications << ")\n";
    out << std::left << std::setw(static_cast<int>(width)) << "model";
    for (std::size_t n : table.n_grid) out << std::right << std::setw(14) << ("n=" + std::to_string(n));
    out << '\n';
    auto row = [&](const std::string& label, auto value) {
      out << std::left << std::setw(static_cast<int>(width)) << label;
      for (std::size_t ni = 0; ni < table.n_grid.size(); ++ni) out << std::right << std::setw(14) << value(ni);
      out << '\n';
    };
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      row(table.models[m], [&](std::size_t ni) { return table.counts[static_cast<std::size_t>(c)][ni][m]; });
    }
    row("failed", [&](std::size_t ni) { return table.failed[ni]; });
    out << '\n';
  }
  out << "replications with a non-converged fit:";
  for (std::size_t ni = 0; ni < table.n_grid.size(); ++ni) out << ' ' << table.nonconverged[ni];
  out << "\nmaster seed " << table.master_seed << ", " << table.threads << " thread(s), " << std::fixed
      << std::setprecision(1) << table.seconds << " s\n";
  out.unsetf(std::ios::fixed);
}

void write_table_csv(const SelectionTable& table, std::ostream& out) {
  out << "criterion,n";
  for (const std::string& m : table.models) out << ',' << m;
  out << ",failed,nonconverged,replications\n";
  for (int c = 0; c < 2; ++c) {
    for (std::size_t ni = 0; ni < table.n_grid.size(); ++ni) {
      out << (c == 0 ? "QBIC" : "QAIC") << ',' << table.n_grid[ni];
      for (std::size_t m = 0; m < table.models.size(); ++m) out << ',' << table.counts[static_cast<std::size_t>(c)][ni][m];
      out << ',' << table.failed[ni] << ',' << table.nonconverged[ni] << ',' << table.replications << '\n';
    }
  }
}

}  // namespace jdsem
