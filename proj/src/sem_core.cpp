#include "jdsem/sem_core.hpp"

#include "jdsem/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace jdsem {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t v) { return static_cast<Index>(v); }

void require_shape(const EntryMap& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

// Lower triangle is authoritative.  An untouched upper cell (Fixed(0)) takes
// the mirrored value; anything else must already agree.
void mirror_symmetric(EntryMap& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = r + 1; c < m.cols(); ++c) {
      const Cell& lower = m(c, r);
      Cell& upper = m(r, c);
      if (upper == lower) continue;
      if (!upper.is_free() && upper.value() == 0.0) {
        upper = lower;
        continue;
      }
      throw Error(ErrorCode::AsymmetricEntryMap, std::string(what) + " cell (" + std::to_string(r + 1) + "," +
                                                     std::to_string(c + 1) + ") does not mirror (" +
                                                     std::to_string(c + 1) + "," + std::to_string(r + 1) + ")");
    }
  }
}

struct Pieces {
  Matrix lambda1, lambda2, b, gamma, sigma_xi, sigma_delta, sigma_eps, sigma_zeta;
  Matrix psi_inv;
};

Pieces evaluate_pieces(const CheckedSpec& checked, const Vector& theta) {
  const StructuralSpec& s = checked.spec();
  Pieces out{s.lambda1.evaluate(theta),    s.lambda2.evaluate(theta),   s.b.evaluate(theta),
             s.gamma.evaluate(theta),      s.sigma_xi.evaluate(theta),  s.sigma_delta.evaluate(theta),
             s.sigma_eps.evaluate(theta),  s.sigma_zeta.evaluate(theta), Matrix()};
  const Matrix psi = Matrix::Identity(idx(s.k2), idx(s.k2)) - out.b;
  Eigen::FullPivLU<Matrix> lu(psi);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::SingularPsi, "I - B is singular for model '" + s.name + "'");
  }
  out.psi_inv = lu.inverse();
  return out;
}

}  // namespace

EntryMap& EntryMap::set_diagonal(std::span<const Cell> diag) {
  if (diag.size() != std::min(rows_, cols_)) {
    throw Error(ErrorCode::DimensionMismatch, "diagonal length does not match entry map");
  }
  for (std::size_t k = 0; k < diag.size(); ++k) (*this)(k, k) = diag[k];
  return *this;
}

Matrix EntryMap::evaluate(const Vector& theta) const {
  Matrix out(idx(rows_), idx(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      const Cell& cell = (*this)(r, c);
      out(idx(r), idx(c)) = cell.is_free() ? theta(idx(cell.index())) : cell.value();
    }
  }
  return out;
}

Matrix EntryMap::indicator(std::size_t index) const {
  Matrix out = Matrix::Zero(idx(rows_), idx(cols_));
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) {
      const Cell& cell = (*this)(r, c);
      if (cell.is_free() && cell.index() == index) out(idx(r), idx(c)) = 1.0;
    }
  }
  return out;
}

bool EntryMap::references(std::size_t index) const {
  return std::any_of(cells_.begin(), cells_.end(),
                     [index](const Cell& c) { return c.is_free() && c.index() == index; });
}

CheckedSpec validate_spec(StructuralSpec spec) {
  // The endogenous block may be empty (p2 = k2 = 0).
  if (spec.p1 == 0 || spec.k1 == 0) {
    throw Error(ErrorCode::InvalidArgument, "p1 and k1 must be positive");
  }
  require_shape(spec.lambda1, spec.p1, spec.k1, "lambda1");
  require_shape(spec.lambda2, spec.p2, spec.k2, "lambda2");
  require_shape(spec.b, spec.k2, spec.k2, "b");
  require_shape(spec.gamma, spec.k2, spec.k1, "gamma");
  require_shape(spec.sigma_xi, spec.k1, spec.k1, "sigma_xi");
  require_shape(spec.sigma_delta, spec.p1, spec.p1, "sigma_delta");
  require_shape(spec.sigma_eps, spec.p2, spec.p2, "sigma_eps");
  require_shape(spec.sigma_zeta, spec.k2, spec.k2, "sigma_zeta");

  for (std::size_t k = 0; k < spec.k2; ++k) {
    const Cell& c = spec.b(k, k);
    if (c.is_free() || c.value() != 0.0) {
      throw Error(ErrorCode::NonzeroBDiagonal, "b(" + std::to_string(k + 1) + "," + std::to_string(k + 1) +
                                                   ") must be fixed at zero");
    }
  }

  mirror_symmetric(spec.sigma_xi, "sigma_xi");
  mirror_symmetric(spec.sigma_delta, "sigma_delta");
  mirror_symmetric(spec.sigma_eps, "sigma_eps");
  mirror_symmetric(spec.sigma_zeta, "sigma_zeta");

  // Count independent references per index; symmetric maps contribute their
  // lower triangle only.
  std::map<std::size_t, std::size_t> uses;
  std::set<std::size_t> positive;
  auto scan = [&](const EntryMap& m, bool symmetric, bool volatility) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < (symmetric ? r + 1 : m.cols()); ++c) {
        const Cell& cell = m(r, c);
        if (!cell.is_free()) continue;
        ++uses[cell.index()];
        if (volatility && r == c) positive.insert(cell.index());
      }
    }
  };
  scan(spec.lambda1, false, false);
  scan(spec.lambda2, false, false);
  scan(spec.b, false, false);
  scan(spec.gamma, false, false);
  scan(spec.sigma_xi, true, true);
  scan(spec.sigma_delta, true, true);
  scan(spec.sigma_eps, true, true);
  scan(spec.sigma_zeta, true, true);

  const std::size_t q = uses.empty() ? 0 : uses.rbegin()->first + 1;
  if (uses.size() != q) {
    for (std::size_t k = 0; k < q; ++k) {
      if (!uses.contains(k)) {
        throw Error(ErrorCode::GapInParamIndices,
                    "parameter " + std::to_string(k + 1) + " of " + std::to_string(q) + " is never used");
      }
    }
  }

  CheckedSpec out;
  out.spec_ = std::move(spec);
  out.positive_.assign(q, false);
  for (std::size_t k : positive) out.positive_[k] = true;
  for (const auto& [k, count] : uses) {
    if (count > 1) out.reused_.push_back(k);
  }
  return out;
}

ThetaVector::ThetaVector(const CheckedSpec& spec, Vector values) : values_(std::move(values)), positive_(spec.positive()) {
  if (static_cast<std::size_t>(values_.size()) != spec.q()) {
    throw Error(ErrorCode::DimensionMismatch, "theta has length " + std::to_string(values_.size()) +
                                                  ", model '" + spec.name() + "' expects " + std::to_string(spec.q()));
  }
  for (std::size_t k = 0; k < positive_.size(); ++k) {
    if (positive_[k] && !(values_(idx(k)) > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "theta(" + std::to_string(k + 1) + ") must be strictly positive");
    }
  }
}

ThetaVector::ThetaVector(const CheckedSpec& spec, std::span<const double> values)
    : ThetaVector(spec, Vector(Eigen::Map<const Vector>(values.data(), idx(values.size())))) {}

bool ThetaVector::admissible(const CheckedSpec& spec, const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != spec.q()) return false;
  for (std::size_t k = 0; k < spec.q(); ++k) {
    if (!std::isfinite(values(idx(k)))) return false;
    if (spec.positive()[k] && !(values(idx(k)) > 0.0)) return false;
  }
  return true;
}

double ImpliedCovariance::log_det() const {
  if (!pd) throw Error(ErrorCode::NotPositiveDefinite, "log determinant of a non positive definite matrix");
  return 2.0 * cholesky.diagonal().array().log().sum();
}

ImpliedCovariance make_implied(Matrix sigma) {
  if (sigma.rows() != sigma.cols()) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  const Index p = sigma.rows();
  ImpliedCovariance out;
  out.cholesky = Matrix::Zero(p, p);
  out.pd = p > 0;
  const double max_diag = p > 0 ? sigma.diagonal().maxCoeff() : 0.0;
  const double tol = 1e-10 * max_diag;
  if (!(max_diag > 0.0) || !sigma.allFinite()) out.pd = false;
  Matrix& l = out.cholesky;
  for (Index j = 0; j < p && out.pd; ++j) {
    double pivot = sigma(j, j);
    for (Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > tol)) {
      out.pd = false;
      break;
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Index i = j + 1; i < p; ++i) {
      double v = sigma(i, j);
      for (Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / ljj;
    }
  }
  out.sigma = std::move(sigma);
  return out;
}

ImpliedCovariance assemble_sigma(const CheckedSpec& spec, const ThetaVector& theta) {
  if (theta.size() != spec.q()) throw Error(ErrorCode::DimensionMismatch, "theta length does not match model");
  const Pieces m = evaluate_pieces(spec, theta.values());
  const Index p1 = idx(spec.spec().p1);
  const Index p2 = idx(spec.spec().p2);

  const Matrix s11 = m.lambda1 * m.sigma_xi * m.lambda1.transpose() + m.sigma_delta;
  const Matrix s12 =
      m.lambda1 * m.sigma_xi * m.gamma.transpose() * m.psi_inv.transpose() * m.lambda2.transpose();
  const Matrix s22 = m.lambda2 * m.psi_inv *
                         (m.gamma * m.sigma_xi * m.gamma.transpose() + m.sigma_zeta) *
                         m.psi_inv.transpose() * m.lambda2.transpose() +
                     m.sigma_eps;

  Matrix sigma(p1 + p2, p1 + p2);
  sigma.topLeftCorner(p1, p1) = s11;
  sigma.topRightCorner(p1, p2) = s12;
  sigma.bottomLeftCorner(p2, p1) = s12.transpose();
  sigma.bottomRightCorner(p2, p2) = s22;
  // Rounding in the triple products leaves O(eps) asymmetry.
  const Matrix sym = 0.5 * (sigma + sigma.transpose());
  return make_implied(sym);
}

std::vector<Matrix> sigma_derivatives(const CheckedSpec& checked, const ThetaVector& theta) {
  if (theta.size() != checked.q()) throw Error(ErrorCode::DimensionMismatch, "theta length does not match model");
  const StructuralSpec& s = checked.spec();
  const Pieces m = evaluate_pieces(checked, theta.values());
  const Index p1 = idx(s.p1), p2 = idx(s.p2), k1 = idx(s.k1), k2 = idx(s.k2);
  const Index p = p1 + p2, k = k1 + k2;

  // Sigma = G W G' + Theta with G = Lambda A,
  //   Lambda = diag(L1, L2), A = [[I, 0], [Psi^-1 Gamma, Psi^-1]], W = diag(Pxx, Pzz).
  Matrix lambda = Matrix::Zero(p, k);
  lambda.topLeftCorner(p1, k1) = m.lambda1;
  lambda.bottomRightCorner(p2, k2) = m.lambda2;
  Matrix a = Matrix::Zero(k, k);
  a.topLeftCorner(k1, k1).setIdentity();
  a.bottomLeftCorner(k2, k1) = m.psi_inv * m.gamma;
  a.bottomRightCorner(k2, k2) = m.psi_inv;
  Matrix w = Matrix::Zero(k, k);
  w.topLeftCorner(k1, k1) = m.sigma_xi;
  w.bottomRightCorner(k2, k2) = m.sigma_zeta;
  const Matrix g = lambda * a;
  const Matrix wgt = w * g.transpose();

  std::vector<Matrix> out;
  out.reserve(checked.q());
  for (std::size_t j = 0; j < checked.q(); ++j) {
    Matrix d = Matrix::Zero(p, p);

    Matrix dg = Matrix::Zero(p, k);
    bool touches_g = false;
    if (s.lambda1.references(j) || s.lambda2.references(j)) {
      Matrix dlambda = Matrix::Zero(p, k);
      dlambda.topLeftCorner(p1, k1) = s.lambda1.indicator(j);
      dlambda.bottomRightCorner(p2, k2) = s.lambda2.indicator(j);
      dg += dlambda * a;
      touches_g = true;
    }
    if (s.gamma.references(j) || s.b.references(j)) {
      // d(Psi^-1) = Psi^-1 dB Psi^-1
      const Matrix dpsi_inv = m.psi_inv * s.b.indicator(j) * m.psi_inv;
      Matrix da = Matrix::Zero(k, k);
      da.bottomLeftCorner(k2, k1) = dpsi_inv * m.gamma + m.psi_inv * s.gamma.indicator(j);
      da.bottomRightCorner(k2, k2) = dpsi_inv;
      dg += lambda * da;
      touches_g = true;
    }
    if (touches_g) {
      const Matrix half = dg * wgt;
      d += half + half.transpose();
    }
    if (s.sigma_xi.references(j) || s.sigma_zeta.references(j)) {
      Matrix dw = Matrix::Zero(k, k);
      dw.topLeftCorner(k1, k1) = s.sigma_xi.indicator(j);
      dw.bottomRightCorner(k2, k2) = s.sigma_zeta.indicator(j);
      d += g * dw * g.transpose();
    }
    if (s.sigma_delta.references(j)) d.topLeftCorner(p1, p1) += s.sigma_delta.indicator(j);
    if (s.sigma_eps.references(j)) d.bottomRightCorner(p2, p2) += s.sigma_eps.indicator(j);

    out.push_back(0.5 * (d + d.transpose()));
  }
  return out;
}

Vector vech(const Matrix& m) {
  const Index p = m.rows();
  Vector out(p * (p + 1) / 2);
  Index r = 0;
  for (Index c = 0; c < p; ++c) {
    for (Index i = c; i < p; ++i) out(r++) = m(i, c);
  }
  return out;
}

Matrix sigma_jacobian(const CheckedSpec& spec, const ThetaVector& theta) {
  const std::vector<Matrix> derivs = sigma_derivatives(spec, theta);
  const Index p = idx(spec.p());
  Matrix out(p * (p + 1) / 2, idx(spec.q()));
  for (std::size_t j = 0; j < derivs.size(); ++j) out.col(idx(j)) = vech(derivs[j]);
  return out;
}

std::size_t identifiability_rank(const CheckedSpec& spec, const ThetaVector& theta) {
  if (spec.q() == 0) return 0;
  const Matrix jac = sigma_jacobian(spec, theta);
  Eigen::JacobiSVD<Matrix> svd(jac);
  const Vector& sv = svd.singularValues();
  const double cutoff = kRankTolerance * sv(0);
  std::size_t rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

Vector random_theta(const CheckedSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> positive(0.3, 1.5);
  std::uniform_real_distribution<double> any(-1.0, 1.0);
  Vector out(idx(spec.q()));
  for (std::size_t k = 0; k < spec.q(); ++k) out(idx(k)) = spec.positive()[k] ? positive(rng) : any(rng);
  return out;
}

NestingEmbedding coordinate_embedding(std::span<const std::size_t> map, std::size_t outer_q, Vector c) {
  if (static_cast<std::size_t>(c.size()) != outer_q) {
    throw Error(ErrorCode::DimensionMismatch, "offset length must equal the outer parameter count");
  }
  NestingEmbedding emb{Matrix::Zero(idx(outer_q), idx(map.size())), std::move(c)};
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (map[k] >= outer_q) throw Error(ErrorCode::DimensionMismatch, "embedding target out of range");
    emb.f(idx(map[k]), idx(k)) = 1.0;
  }
  return emb;
}

bool check_nesting(const CheckedSpec& nested, const CheckedSpec& outer, const NestingEmbedding& emb,
                   std::size_t trials, std::uint64_t seed) {
  const Index qi = idx(nested.q()), qj = idx(outer.q());
  if (emb.f.rows() != qj || emb.f.cols() != qi || emb.c.size() != qj) {
    throw Error(ErrorCode::DimensionMismatch, "embedding must be " + std::to_string(qj) + "x" + std::to_string(qi));
  }
  if (qi >= qj || nested.p() != outer.p()) return false;
  if ((emb.f.transpose() * emb.f - Matrix::Identity(qi, qi)).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::NonOrthonormalF, "embedding columns are not orthonormal");
  }

  std::mt19937_64 rng(seed);
  std::size_t done = 0;
  std::size_t attempts = 0;
  while (done < trials) {
    if (++attempts > 100 * (trials + 1)) return false;
    const Vector ti = random_theta(nested, rng);
    const Vector tj = emb.f * ti + emb.c;
    if (!ThetaVector::admissible(outer, tj)) return false;
    Matrix si, sj;
    try {
      si = assemble_sigma(nested, ThetaVector(nested, ti)).sigma;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularPsi) continue;
      throw;
    }
    try {
      sj = assemble_sigma(outer, ThetaVector(outer, tj)).sigma;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularPsi) return false;
      throw;
    }
    if ((si - sj).cwiseAbs().maxCoeff() > 1e-10) return false;
    ++done;
  }
  return true;
}

}  // namespace jdsem
