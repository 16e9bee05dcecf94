#pragma once

// Monte Carlo model-selection experiment: simulate from a true model, fit
// every candidate, and tally which one each criterion selects.

#include "jdsem/criteria.hpp"
#include "jdsem/estimation.hpp"
#include "jdsem/presets.hpp"
#include "jdsem/quasi_lik.hpp"
#include "jdsem/simulator.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace jdsem {

struct CandidateConfig {
  Candidate candidate;
  // Random restarts instead of the candidate's init point.
  std::optional<std::size_t> multi_start;
};

struct ExperimentConfig {
  TrueModelSpec true_model;
  std::vector<CandidateConfig> candidates;
  std::size_t replications = 200;
  std::vector<std::size_t> n_grid = {50000, 100000};
  double t_end = 1.0;
  TruncationRule rule{10.0, 0.4};
  FitConfig fit;  // init is taken per candidate
  std::uint64_t master_seed = 20240601;
  unsigned threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Candidates model1..model3 with truth initialization, D = 10, rho = 0.4, T = 1.
[[nodiscard]] ExperimentConfig reference_experiment();

[[nodiscard]] ExperimentConfig parse_experiment(const std::filesystem::path& file);

struct CandidateOutcome {
  std::optional<FitResult> fit;  // empty when the fit threw
  std::string error;
};

struct ReplicationResult {
  std::uint64_t seed = 0;
  std::size_t n_kept = 0;
  std::vector<CandidateOutcome> outcomes;  // one per candidate
  std::vector<CriterionValue> values;      // only when every fit succeeded
  std::optional<std::size_t> qbic_winner;  // empty marks a failed replication
  std::optional<std::size_t> qaic_winner;
  bool any_nonconverged = false;

  [[nodiscard]] bool failed() const noexcept { return !qbic_winner.has_value(); }
};

[[nodiscard]] std::uint64_t replication_seed(std::uint64_t master, std::size_t n, std::size_t rep);

[[nodiscard]] ReplicationResult run_replication(const ExperimentConfig& cfg, std::size_t n, std::size_t rep);

struct SelectionTable {
  std::vector<std::string> models;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 0;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
  double seconds = 0.0;
  // counts[criterion][n index][model index]; criterion 0 = QBIC, 1 = QAIC.
  std::vector<std::vector<std::vector<std::size_t>>> counts;
  std::vector<std::size_t> failed;         // per n index
  std::vector<std::size_t> nonconverged;   // replications with a non-converged fit, per n index

  [[nodiscard]] std::size_t count(Criterion c, std::size_t n_index, std::size_t model) const;
};

// Replications run on `cfg.threads` workers; the table does not depend on
// the number of workers.
[[nodiscard]] SelectionTable run_experiment(const ExperimentConfig& cfg);

void write_table_text(const SelectionTable& table, std::ostream& out);
void write_table_csv(const SelectionTable& table, std::ostream& out);

}  // namespace jdsem
