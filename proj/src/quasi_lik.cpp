#include "jdsem/quasi_lik.hpp"

#include "jdsem/error.hpp"

#include <cmath>
#include <string>

namespace jdsem {

namespace {

using Index = Eigen::Index;

void require_pd(const ImpliedCovariance& sigma) {
  if (!sigma.pd) throw Error(ErrorCode::NotPositiveDefinite, "implied covariance is not positive definite");
}

Matrix inverse_from_cholesky(const ImpliedCovariance& sigma) {
  const Index p = sigma.sigma.rows();
  const auto l = sigma.cholesky.triangularView<Eigen::Lower>();
  Matrix linv = l.solve(Matrix::Identity(p, p));
  Matrix inv = linv.transpose() * linv;
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

PathData::PathData(double h, Matrix x) : h_(h), x_(std::move(x)) {
  if (!(h_ > 0.0) || !std::isfinite(h_)) throw Error(ErrorCode::InvalidArgument, "step h must be positive and finite");
  if (x_.rows() < 2) throw Error(ErrorCode::TooFewRows, "a path needs at least two observations");
  if (x_.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "a path needs at least one column");
}

TruncationRule::TruncationRule(double d, double rho) : d_(d), rho_(rho) {
  if (!(d_ > 0.0) || !std::isfinite(d_)) throw Error(ErrorCode::InvalidArgument, "threshold scale D must be positive");
  if (!(rho_ >= 1.0 / 3.0 && rho_ < 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "rho must lie in [1/3, 1/2), got " + std::to_string(rho_));
  }
}

double truncation_threshold(double h, const TruncationRule& rule) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "step h must be positive");
  return rule.d() * std::pow(h, rule.rho());
}

TruncationStats truncation_stats(const PathData& path, const TruncationRule& rule) {
  const double threshold = truncation_threshold(path.h(), rule);
  const Index n = static_cast<Index>(path.n());
  const Index p = static_cast<Index>(path.dim());
  const Matrix& x = path.x();

  TruncationStats out;
  out.n = path.n();
  out.h = path.h();
  out.keep.assign(path.n(), false);

  Matrix kept(n, p);
  Index rows = 0;
  for (Index i = 0; i < n; ++i) {
    const auto inc = x.row(i + 1) - x.row(i);
    if (std::sqrt(inc.squaredNorm()) <= threshold) {
      out.keep[static_cast<std::size_t>(i)] = true;
      kept.row(rows++) = inc;
    }
  }
  out.n_kept = static_cast<std::size_t>(rows);
  const auto used = kept.topRows(rows);
  Matrix s = used.transpose() * used;
  s /= static_cast<double>(n) * path.h();
  out.sigma_check = 0.5 * (s + s.transpose());
  return out;
}

double quasi_loglik(const ImpliedCovariance& sigma, const TruncationStats& stats, std::size_t n) {
  require_pd(sigma);
  if (stats.sigma_check.rows() != sigma.sigma.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "data dimension " + std::to_string(stats.sigma_check.rows()) +
                                                  " does not match model dimension " +
                                                  std::to_string(sigma.sigma.rows()));
  }
  const auto l = sigma.cholesky.triangularView<Eigen::Lower>();
  const Matrix half = l.solve(stats.sigma_check);
  const Matrix whitened = l.solve(half.transpose());
  const double trace = whitened.trace();
  return -0.5 * static_cast<double>(n) * trace - 0.5 * static_cast<double>(stats.n_kept) * sigma.log_det();
}

double quasi_loglik_direct(const CheckedSpec& spec, const ThetaVector& theta, const PathData& path,
                           const TruncationRule& rule) {
  const ImpliedCovariance implied = assemble_sigma(spec, theta);
  require_pd(implied);
  if (path.dim() != spec.p()) throw Error(ErrorCode::DimensionMismatch, "data dimension does not match model");

  Eigen::PartialPivLU<Matrix> lu(implied.sigma);
  const Matrix inv = lu.inverse();
  const double log_det = std::log(lu.determinant());
  const double threshold = truncation_threshold(path.h(), rule);
  const Matrix& x = path.x();

  double quad = 0.0;
  double logs = 0.0;
  for (Index i = 1; i < x.rows(); ++i) {
    const Vector inc = (x.row(i) - x.row(i - 1)).transpose();
    if (!(inc.norm() <= threshold)) continue;
    quad += inc.dot(inv * inc);
    logs += log_det;
  }
  return -quad / (2.0 * path.h()) - 0.5 * logs;
}

Vector grad_h(const ImpliedCovariance& sigma, const std::vector<Matrix>& dsigma, const TruncationStats& stats,
              std::size_t n) {
  require_pd(sigma);
  const Matrix inv = inverse_from_cholesky(sigma);
  const Matrix m = static_cast<double>(n) * (inv * stats.sigma_check * inv) - static_cast<double>(stats.n_kept) * inv;
  Vector g(static_cast<Index>(dsigma.size()));
  for (std::size_t k = 0; k < dsigma.size(); ++k) {
    g(static_cast<Index>(k)) = 0.5 * m.cwiseProduct(dsigma[k]).sum();
  }
  return g;
}

Vector grad_h(const CheckedSpec& spec, const ThetaVector& theta, const TruncationStats& stats, std::size_t n) {
  return grad_h(assemble_sigma(spec, theta), sigma_derivatives(spec, theta), stats, n);
}

HessianResult normalized_hessian(const CheckedSpec& spec, const ThetaVector& theta, const TruncationStats& stats,
                                 std::size_t n) {
  const Index q = static_cast<Index>(spec.q());
  Matrix a(q, q);
  for (Index k = 0; k < q; ++k) {
    const double t = theta.values()(k);
    double step = std::max(1e-5, 1e-5 * std::abs(t));
    if (spec.positive()[static_cast<std::size_t>(k)]) step = std::min(step, 0.5 * t);
    Vector up = theta.values();
    Vector down = theta.values();
    up(k) += step;
    down(k) -= step;
    const Vector gu = grad_h(spec, ThetaVector(spec, up), stats, n);
    const Vector gd = grad_h(spec, ThetaVector(spec, down), stats, n);
    a.col(k) = -(gu - gd) / (2.0 * step * static_cast<double>(n));
  }
  HessianResult out;
  const double norm = a.norm();
  out.asymmetry = norm > 0.0 ? (a - a.transpose()).norm() / norm : 0.0;
  out.gamma = 0.5 * (a + a.transpose());
  return out;
}

}  // namespace jdsem
