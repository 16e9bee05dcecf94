#pragma once

#include "jdsem/quasi_lik.hpp"
#include "jdsem/sem_core.hpp"

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

namespace jdsem {

struct GivenPoint {
  Vector theta;
};

struct MultiStart {
  std::size_t count = 5;
  std::uint64_t seed = 0;
};

using InitStrategy = std::variant<GivenPoint, MultiStart>;

struct FitConfig {
  InitStrategy init = MultiStart{};
  int max_iters = 1000;
  // Relative: converged when ||dH/dw||_inf <= grad_tol * max(1, |H|).
  double grad_tol = 1e-6;
  double step_tol = 1e-10;
  // Optimize positivity-flagged coordinates on the log scale.
  bool reparameterize_positives = true;
};

enum class StopReason {
  NothingToFit,
  Gradient,
  Step,
  MaxIterations,
  NoAscentDirection,
};

[[nodiscard]] const char* to_string(StopReason reason) noexcept;

struct FitResult {
  ThetaVector theta_hat;
  double h_value = 0.0;
  bool converged = false;
  int iterations = 0;
  // ||dH/dw||_inf / max(1, |H|) at theta_hat, w being the working coordinates.
  double grad_norm = 0.0;
  std::size_t n_kept = 0;
  StopReason stop = StopReason::MaxIterations;
  // H after the start and after every accepted iteration.
  std::vector<double> h_trace;
};

// BFGS ascent on H from the configured start.  A MultiStart init is
// forwarded to multi_start_fit.
[[nodiscard]] FitResult fit(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n, double h,
                            const FitConfig& config);

[[nodiscard]] FitResult multi_start_fit(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n,
                                        double h, const FitConfig& config);

}  // namespace jdsem
