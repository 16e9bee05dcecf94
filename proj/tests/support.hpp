#pragma once

#include "jdsem/quasi_lik.hpp"
#include "jdsem/sem_core.hpp"

#include <random>

namespace testing {

using jdsem::Cell;
using jdsem::EntryMap;
using jdsem::Matrix;
using jdsem::Vector;

// p = 1, k = 1: Sigma = theta via sigma_xi, loading fixed at 1, no error.
inline jdsem::CheckedSpec scalar_spec() {
  jdsem::StructuralSpec s;
  s.name = "scalar";
  s.p1 = 1;
  s.k1 = 1;
  s.lambda1 = EntryMap(1, 1);
  s.lambda1(0, 0) = Cell::fixed(1.0);
  s.sigma_xi = EntryMap(1, 1);
  s.sigma_xi(0, 0) = Cell::free(0);
  s.sigma_delta = EntryMap(1, 1);
  s.b = EntryMap(0, 0);
  s.gamma = EntryMap(0, 1);
  s.lambda2 = EntryMap(0, 0);
  s.sigma_eps = EntryMap(0, 0);
  s.sigma_zeta = EntryMap(0, 0);
  return jdsem::validate_spec(std::move(s));
}

// One-factor model on p indicators: loadings 2..p free, unique variances free.
inline jdsem::CheckedSpec one_factor_spec(std::size_t p) {
  jdsem::StructuralSpec s;
  s.name = "factor" + std::to_string(p);
  s.p1 = p;
  s.k1 = 1;
  s.lambda1 = EntryMap(p, 1);
  s.lambda1(0, 0) = Cell::fixed(1.0);
  std::size_t k = 0;
  for (std::size_t r = 1; r < p; ++r) s.lambda1(r, 0) = Cell::free(k++);
  s.sigma_xi = EntryMap(1, 1);
  s.sigma_xi(0, 0) = Cell::free(k++);
  s.sigma_delta = EntryMap(p, p);
  for (std::size_t r = 0; r < p; ++r) s.sigma_delta(r, r) = Cell::free(k++);
  s.b = EntryMap(0, 0);
  s.gamma = EntryMap(0, 1);
  s.lambda2 = EntryMap(0, 0);
  s.sigma_eps = EntryMap(0, 0);
  s.sigma_zeta = EntryMap(0, 0);
  return jdsem::validate_spec(std::move(s));
}

// Gaussian random walk increments with covariance `cov`, n steps of size h.
inline jdsem::PathData gaussian_path(const Matrix& cov, std::size_t n, double h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const Eigen::LLT<Matrix> llt(cov);
  const Matrix l = llt.matrixL();
  const auto p = cov.rows();
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n) + 1, p);
  for (Eigen::Index i = 1; i <= static_cast<Eigen::Index>(n); ++i) {
    Vector e(p);
    for (Eigen::Index j = 0; j < p; ++j) e(j) = z(rng);
    x.row(i) = x.row(i - 1) + (std::sqrt(h) * (l * e)).transpose();
  }
  return jdsem::PathData(h, std::move(x));
}

inline jdsem::TruncationStats exact_stats(const Matrix& sigma_check, std::size_t n, std::size_t n_kept) {
  jdsem::TruncationStats st;
  st.n = n;
  st.n_kept = n_kept;
  st.h = 1.0 / static_cast<double>(n);
  st.sigma_check = sigma_check;
  return st;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace testing
