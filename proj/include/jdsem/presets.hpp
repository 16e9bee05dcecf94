#pragma once

// Built-in candidate models for the five-plus-ten indicator experiment.
//
//   model1  correctly specified, 32 parameters
//   model2  model1 plus a cross-loading of X2(5) on eta2, 33 parameters
//   model3  one endogenous factor, 31 parameters, misspecified

#include "jdsem/sem_core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jdsem {

[[nodiscard]] CheckedSpec model1_spec();
[[nodiscard]] CheckedSpec model2_spec();
[[nodiscard]] CheckedSpec model3_spec();

// Parameter values reproducing the true covariance exactly.
[[nodiscard]] Vector model1_truth();
[[nodiscard]] Vector model2_truth();
// Pseudo-true point of model3: the maximizer of the population
// quasi-likelihood -tr(Sigma^-1 Sigma0)/2 - log det Sigma / 2.
[[nodiscard]] Vector model3_pseudo_truth();

// theta2 = F theta1 with the cross-loading coordinate held at zero.
[[nodiscard]] NestingEmbedding model1_in_model2();

struct Candidate {
  std::string name;
  CheckedSpec spec;
  std::optional<Vector> init;
};

// "model1", "model2", "model3"; nullopt for unknown names.
[[nodiscard]] std::optional<Candidate> preset_candidate(std::string_view name);

[[nodiscard]] std::vector<Candidate> reference_candidates();

}  // namespace jdsem
