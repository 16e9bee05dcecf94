#pragma once

// Jump-truncated Gaussian quasi-log-likelihood.
//
// An increment dX_i is treated as jump-free when |dX_i| <= D h^rho
// (Euclidean norm).  The likelihood depends on the data only through the
// number of kept increments N and the truncated realized covariance
//
//   S = (1 / (n h)) * sum_{kept} dX_i dX_i'
//
// so H(theta) = -(n/2) tr(Sigma^-1 S) - (N/2) log det Sigma.

#include "jdsem/sem_core.hpp"

#include <cstddef>
#include <vector>

namespace jdsem {

class PathData {
 public:
  // x has n + 1 rows, one observation per row.
  PathData(double h, Matrix x);

  [[nodiscard]] double h() const noexcept { return h_; }
  [[nodiscard]] std::size_t n() const noexcept { return static_cast<std::size_t>(x_.rows()) - 1; }
  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  [[nodiscard]] double horizon() const noexcept { return h_ * static_cast<double>(n()); }
  [[nodiscard]] const Matrix& x() const noexcept { return x_; }

 private:
  double h_;
  Matrix x_;
};

class TruncationRule {
 public:
  // rho must lie in [1/3, 1/2) and d must be positive.
  TruncationRule(double d, double rho);

  [[nodiscard]] double d() const noexcept { return d_; }
  [[nodiscard]] double rho() const noexcept { return rho_; }

 private:
  double d_;
  double rho_;
};

struct TruncationStats {
  std::size_t n = 0;       // total increments
  std::size_t n_kept = 0;  // N_n
  double h = 0.0;
  Matrix sigma_check;      // truncated realized covariance
  std::vector<bool> keep;
};

[[nodiscard]] double truncation_threshold(double h, const TruncationRule& rule);

[[nodiscard]] TruncationStats truncation_stats(const PathData& path, const TruncationRule& rule);

// Reduced form via the Cholesky factor of sigma.  Throws NotPositiveDefinite.
[[nodiscard]] double quasi_loglik(const ImpliedCovariance& sigma, const TruncationStats& stats, std::size_t n);

// Literal per-increment sum, with its own LU-based inverse and determinant.
// Kept as an independent reference for quasi_loglik.
[[nodiscard]] double quasi_loglik_direct(const CheckedSpec& spec, const ThetaVector& theta, const PathData& path,
                                         const TruncationRule& rule);

// dH/dtheta_k = (1/2) tr[(n Sigma^-1 S Sigma^-1 - N Sigma^-1) dSigma/dtheta_k]
[[nodiscard]] Vector grad_h(const CheckedSpec& spec, const ThetaVector& theta, const TruncationStats& stats,
                            std::size_t n);

// Same as grad_h when dSigma/dtheta is already known.
[[nodiscard]] Vector grad_h(const ImpliedCovariance& sigma, const std::vector<Matrix>& dsigma,
                            const TruncationStats& stats, std::size_t n);

struct HessianResult {
  Matrix gamma;             // symmetrized -(1/n) d^2 H
  double asymmetry = 0.0;   // ||A - A'||_F / ||A||_F before symmetrization
};

// Central differences of the analytic gradient, step max(1e-5, 1e-5 |theta_k|).
[[nodiscard]] HessianResult normalized_hessian(const CheckedSpec& spec, const ThetaVector& theta,
                                               const TruncationStats& stats, std::size_t n);

}  // namespace jdsem
