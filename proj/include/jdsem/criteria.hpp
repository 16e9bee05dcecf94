#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace jdsem {

enum class Criterion { QBIC, QAIC };

[[nodiscard]] const char* to_string(Criterion c) noexcept;

struct CriterionValue {
  std::string model_id;
  double qbic = 0.0;
  double qaic = 0.0;
  std::size_t q = 0;
  double h_value = 0.0;
  bool converged = false;

  [[nodiscard]] double value(Criterion c) const noexcept { return c == Criterion::QBIC ? qbic : qaic; }
};

// -2 H + q log n (natural log); n >= 2.
[[nodiscard]] double qbic(double h_value, std::size_t q, std::size_t n);
// -2 H + 2 q
[[nodiscard]] double qaic(double h_value, std::size_t q);

[[nodiscard]] CriterionValue make_criterion_value(std::string model_id, double h_value, std::size_t q, std::size_t n,
                                                  bool converged);

struct Selection {
  std::size_t index = 0;  // position in the candidate list
  bool tie = false;       // another candidate had exactly the same value
};

// argmin of the criterion; ties go to the smaller q, then the lower model_id.
[[nodiscard]] Selection select(std::span<const CriterionValue> values, Criterion criterion);

// Limit probability that QAIC prefers a correctly specified model with dq
// extra parameters: P(chi^2_dq > 2 dq).
[[nodiscard]] double qaic_overfit_probability(unsigned dq);

}  // namespace jdsem
