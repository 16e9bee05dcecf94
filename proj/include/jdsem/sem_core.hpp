#pragma once

// Structure of a candidate SEM and the algebra that maps a
// free-parameter vector onto the implied p x p volatility of the observables.
//
// The implied covariance has the block form
//
//   S11 = L1 Pxx L1' + Tdd
//   S12 = L1 Pxx G' Psi^-T L2'
//   S22 = L2 Psi^-1 (G Pxx G' + Pzz) Psi^-T L2' + Tee
//
// with Psi = I - B.  Every matrix is described by an EntryMap whose cells are
// either fixed constants or references into the parameter vector.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jdsem {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Cell {
 public:
  static Cell fixed(double value) { return Cell(false, value, 0); }
  static Cell free(std::size_t index) { return Cell(true, 0.0, index); }

  Cell() = default;

  [[nodiscard]] bool is_free() const noexcept { return free_; }
  [[nodiscard]] double value() const noexcept { return value_; }
  [[nodiscard]] std::size_t index() const noexcept { return index_; }

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  Cell(bool is_free, double value, std::size_t index) : free_(is_free), value_(value), index_(index) {}

  bool free_ = false;
  double value_ = 0.0;
  std::size_t index_ = 0;
};

// Dense rows x cols grid of cells, default Fixed(0).
class EntryMap {
 public:
  EntryMap() = default;
  EntryMap(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

  [[nodiscard]] Cell& operator()(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  [[nodiscard]] const Cell& operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  // Sets every diagonal cell, leaving the rest untouched.
  EntryMap& set_diagonal(std::span<const Cell> diag);

  [[nodiscard]] Matrix evaluate(const Vector& theta) const;
  // Elementwise derivative with respect to parameter `index`: the count of
  // cells that reference it.
  [[nodiscard]] Matrix indicator(std::size_t index) const;
  [[nodiscard]] bool references(std::size_t index) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Cell> cells_;
};

struct StructuralSpec {
  std::string name;
  std::size_t p1 = 0;
  std::size_t p2 = 0;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  EntryMap lambda1;     // p1 x k1
  EntryMap lambda2;     // p2 x k2
  EntryMap b;           // k2 x k2, zero diagonal
  EntryMap gamma;       // k2 x k1
  EntryMap sigma_xi;    // k1 x k1, symmetric
  EntryMap sigma_delta; // p1 x p1, symmetric
  EntryMap sigma_eps;   // p2 x p2, symmetric
  EntryMap sigma_zeta;  // k2 x k2, symmetric

  [[nodiscard]] std::size_t p() const noexcept { return p1 + p2; }
};

// A StructuralSpec that passed validate_spec.  Only validate_spec creates one.
class CheckedSpec {
 public:
  [[nodiscard]] const StructuralSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::string& name() const noexcept { return spec_.name; }
  [[nodiscard]] std::size_t q() const noexcept { return positive_.size(); }
  [[nodiscard]] std::size_t p() const noexcept { return spec_.p(); }
  [[nodiscard]] const std::vector<bool>& positive() const noexcept { return positive_; }
  // Parameter indices referenced by more than one independent cell
  // (mirrored symmetric cells count once).
  [[nodiscard]] const std::vector<std::size_t>& reused() const noexcept { return reused_; }

 private:
  friend CheckedSpec validate_spec(StructuralSpec spec);
  CheckedSpec() = default;

  StructuralSpec spec_;
  std::vector<bool> positive_;
  std::vector<std::size_t> reused_;
};

class ThetaVector {
 public:
  // Throws InvalidArgument when the length differs from spec.q() or a
  // positivity-flagged coordinate is not strictly positive.
  ThetaVector(const CheckedSpec& spec, Vector values);
  ThetaVector(const CheckedSpec& spec, std::span<const double> values);

  [[nodiscard]] const Vector& values() const noexcept { return values_; }
  [[nodiscard]] const std::vector<bool>& positive() const noexcept { return positive_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  [[nodiscard]] double operator[](std::size_t k) const { return values_(static_cast<Eigen::Index>(k)); }

  [[nodiscard]] static bool admissible(const CheckedSpec& spec, const Vector& values);

 private:
  Vector values_;
  std::vector<bool> positive_;
};

struct ImpliedCovariance {
  Matrix sigma;
  Matrix cholesky;  // lower triangular; meaningful only when pd
  bool pd = false;

  // 2 * sum(log diag L).  Requires pd.
  [[nodiscard]] double log_det() const;
};

struct NestingEmbedding {
  Matrix f;  // q_j x q_i, orthonormal columns
  Vector c;  // q_j
};

[[nodiscard]] CheckedSpec validate_spec(StructuralSpec spec);

// Factorizes an arbitrary symmetric matrix with the pivot rule
// L_kk^2 > 1e-10 * max(diag).
[[nodiscard]] ImpliedCovariance make_implied(Matrix sigma);

[[nodiscard]] ImpliedCovariance assemble_sigma(const CheckedSpec& spec, const ThetaVector& theta);

// dSigma / dtheta_k for every k, as full symmetric p x p matrices.
[[nodiscard]] std::vector<Matrix> sigma_derivatives(const CheckedSpec& spec, const ThetaVector& theta);

// Rows follow vech (lower triangle, column by column); p(p+1)/2 x q.
[[nodiscard]] Matrix sigma_jacobian(const CheckedSpec& spec, const ThetaVector& theta);

inline constexpr double kRankTolerance = 1e-8;

[[nodiscard]] std::size_t identifiability_rank(const CheckedSpec& spec, const ThetaVector& theta);

[[nodiscard]] bool check_nesting(const CheckedSpec& nested, const CheckedSpec& outer,
                                 const NestingEmbedding& emb, std::size_t trials, std::uint64_t seed);

// Embedding that sends coordinate k of the nested model to coordinate map[k]
// of the outer model; the remaining outer coordinates are set from c.
[[nodiscard]] NestingEmbedding coordinate_embedding(std::span<const std::size_t> map, std::size_t outer_q,
                                                    Vector c);

// Positivity-flagged coordinates ~ U(0.3, 1.5), the rest ~ U(-1, 1).
[[nodiscard]] Vector random_theta(const CheckedSpec& spec, std::mt19937_64& rng);

[[nodiscard]] Vector vech(const Matrix& m);

}  // namespace jdsem
