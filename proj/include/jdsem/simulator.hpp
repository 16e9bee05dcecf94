#pragma once

// Euler scheme for the latent jump-diffusions and construction of the
// observed process through the measurement and structural equations
//
//   X1 = L1 xi + delta,   eta = (I - B)^-1 (Gamma xi + zeta),   X2 = L2 eta + eps.

#include "jdsem/quasi_lik.hpp"
#include "jdsem/sem_core.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace jdsem {

// Compound Poisson jumps on one coordinate with N(0, variance) sizes.
struct JumpSpec {
  double intensity = 0.0;
  double variance = 0.0;
};

// dx = -K (x - mu) dt + S dW + dJ
struct LatentSdeSpec {
  Matrix drift_rate;  // K, dim x dim
  Vector mean;        // mu
  Matrix diffusion;   // S, dim x r
  std::vector<JumpSpec> jumps;
  Vector x0;

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(x0.size()); }
  [[nodiscard]] Matrix volatility() const { return diffusion * diffusion.transpose(); }
  void validate(const char* what) const;
};

struct TrueModelSpec {
  Matrix lambda1;  // p1 x k1
  Matrix lambda2;  // p2 x k2
  Matrix b;        // k2 x k2
  Matrix gamma;    // k2 x k1
  LatentSdeSpec xi, delta, eps, zeta;

  [[nodiscard]] std::size_t p1() const noexcept { return static_cast<std::size_t>(lambda1.rows()); }
  [[nodiscard]] std::size_t p2() const noexcept { return static_cast<std::size_t>(lambda2.rows()); }
  [[nodiscard]] std::size_t p() const noexcept { return p1() + p2(); }
  void validate() const;
};

struct SimConfig {
  std::size_t n = 0;
  double t_end = 1.0;
  std::uint64_t seed = 0;
};

// (n + 1) x dim path, row 0 = x0, one Euler step per observation interval.
[[nodiscard]] Matrix simulate_latent(const LatentSdeSpec& sde, const SimConfig& cfg);

// The four latent blocks use independent streams derived from cfg.seed.
[[nodiscard]] PathData simulate_observations(const TrueModelSpec& model, const SimConfig& cfg);

// Volatility of X implied by the true constants (S S' for each latent block).
[[nodiscard]] Matrix true_sigma(const TrueModelSpec& model);

// Five indicators of one exogenous factor, ten indicators of two endogenous
// factors, Gamma = (0.7, -0.5)', B = 0, mean-reverting latent processes with
// normal compound Poisson jumps.
[[nodiscard]] TrueModelSpec reference_true_model();

[[nodiscard]] TrueModelSpec without_jumps(TrueModelSpec model);

}  // namespace jdsem
