#include "jdsem/simulator.hpp"

#include "jdsem/error.hpp"
#include "jdsem/seed.hpp"

#include <cmath>
#include <random>
#include <string>

namespace jdsem {

namespace {

using Index = Eigen::Index;

enum Block : std::uint64_t { kXi = 1, kDelta = 2, kEps = 3, kZeta = 4 };

LatentSdeSpec diagonal_ou(const std::vector<double>& rates, const std::vector<double>& sd,
                          const std::vector<double>& jump_var, double intensity, double x0) {
  const Index d = static_cast<Index>(rates.size());
  LatentSdeSpec s;
  s.drift_rate = Matrix::Zero(d, d);
  s.diffusion = Matrix::Zero(d, d);
  s.mean = Vector::Constant(d, x0);
  s.x0 = Vector::Constant(d, x0);
  for (Index i = 0; i < d; ++i) {
    s.drift_rate(i, i) = rates[static_cast<std::size_t>(i)];
    s.diffusion(i, i) = sd[static_cast<std::size_t>(i)];
    s.jumps.push_back(JumpSpec{intensity, jump_var[static_cast<std::size_t>(i)]});
  }
  return s;
}

}  // namespace

void LatentSdeSpec::validate(const char* what) const {
  const Index d = x0.size();
  const std::string name(what);
  if (d < 1) throw Error(ErrorCode::InvalidArgument, name + ": latent dimension must be positive");
  if (drift_rate.rows() != d || drift_rate.cols() != d || mean.size() != d || diffusion.rows() != d ||
      jumps.size() != static_cast<std::size_t>(d)) {
    throw Error(ErrorCode::DimensionMismatch, name + ": drift, mean, diffusion and jumps must match dim " +
                                                  std::to_string(d));
  }
  if (!drift_rate.allFinite() || !mean.allFinite() || !diffusion.allFinite() || !x0.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, name + ": coefficients must be finite");
  }
  for (const JumpSpec& j : jumps) {
    if (!(j.intensity >= 0.0) || !std::isfinite(j.intensity)) {
      throw Error(ErrorCode::InvalidArgument, name + ": jump intensity must be >= 0");
    }
    if (j.intensity > 0.0 && !(j.variance > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, name + ": jump variance must be > 0 when intensity > 0");
    }
  }
}

void TrueModelSpec::validate() const {
  xi.validate("xi");
  delta.validate("delta");
  eps.validate("eps");
  zeta.validate("zeta");
  const Index k1 = static_cast<Index>(xi.dim()), k2 = static_cast<Index>(zeta.dim());
  if (lambda1.cols() != k1 || lambda1.rows() != static_cast<Index>(delta.dim()) || lambda2.cols() != k2 ||
      lambda2.rows() != static_cast<Index>(eps.dim()) || b.rows() != k2 || b.cols() != k2 || gamma.rows() != k2 ||
      gamma.cols() != k1) {
    throw Error(ErrorCode::DimensionMismatch, "true model matrices do not match the latent dimensions");
  }
  for (Index k = 0; k < k2; ++k) {
    if (b(k, k) != 0.0) throw Error(ErrorCode::NonzeroBDiagonal, "true B must have a zero diagonal");
  }
  Eigen::FullPivLU<Matrix> psi(Matrix::Identity(k2, k2) - b);
  psi.setThreshold(1e-12);
  if (!psi.isInvertible()) throw Error(ErrorCode::SingularPsi, "I - B is singular in the true model");
  if (Eigen::FullPivLU<Matrix>(lambda1).rank() < k1 || Eigen::FullPivLU<Matrix>(lambda2).rank() < k2) {
    throw Error(ErrorCode::InvalidArgument, "loading matrices must have full column rank");
  }
}

Matrix simulate_latent(const LatentSdeSpec& sde, const SimConfig& cfg) {
  sde.validate("latent");
  if (cfg.n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  if (!(cfg.t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");

  const Index d = static_cast<Index>(sde.dim());
  const Index r = sde.diffusion.cols();
  const Index n = static_cast<Index>(cfg.n);
  const double h = cfg.t_end / static_cast<double>(cfg.n);
  const double sqrt_h = std::sqrt(h);

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::poisson_distribution<int>> counts;
  counts.reserve(sde.jumps.size());
  for (const JumpSpec& j : sde.jumps) counts.emplace_back(j.intensity * h > 0.0 ? j.intensity * h : 1.0);

  Matrix path(n + 1, d);
  path.row(0) = sde.x0.transpose();
  Vector x = sde.x0;
  Vector z(r);
  for (Index i = 1; i <= n; ++i) {
    for (Index k = 0; k < r; ++k) z(k) = normal(rng);
    Vector next = x - h * (sde.drift_rate * (x - sde.mean)) + sqrt_h * (sde.diffusion * z);
    for (Index k = 0; k < d; ++k) {
      const JumpSpec& j = sde.jumps[static_cast<std::size_t>(k)];
      if (j.intensity <= 0.0) continue;
      const int count = counts[static_cast<std::size_t>(k)](rng);
      const double sd = std::sqrt(j.variance);
      for (int c = 0; c < count; ++c) next(k) += sd * normal(rng);
    }
    x = std::move(next);
    path.row(i) = x.transpose();
  }
  return path;
}

PathData simulate_observations(const TrueModelSpec& model, const SimConfig& cfg) {
  model.validate();
  auto block_cfg = [&](Block b) { return SimConfig{cfg.n, cfg.t_end, derive_seed(cfg.seed, {b})}; };
  const Matrix xi = simulate_latent(model.xi, block_cfg(kXi));
  const Matrix delta = simulate_latent(model.delta, block_cfg(kDelta));
  const Matrix eps = simulate_latent(model.eps, block_cfg(kEps));
  const Matrix zeta = simulate_latent(model.zeta, block_cfg(kZeta));

  const Index k2 = model.b.rows();
  const Matrix psi_inv = (Matrix::Identity(k2, k2) - model.b).fullPivLu().inverse();
  // Rows are time points, so every map is applied from the right.
  const Matrix eta = (xi * model.gamma.transpose() + zeta) * psi_inv.transpose();
  const Index p1 = static_cast<Index>(model.p1()), p2 = static_cast<Index>(model.p2());
  Matrix x(xi.rows(), p1 + p2);
  x.leftCols(p1) = xi * model.lambda1.transpose() + delta;
  x.rightCols(p2) = eta * model.lambda2.transpose() + eps;
  return PathData(cfg.t_end / static_cast<double>(cfg.n), std::move(x));
}

Matrix true_sigma(const TrueModelSpec& model) {
  model.validate();
  const Matrix sxx = model.xi.volatility();
  const Matrix sdd = model.delta.volatility();
  const Matrix see = model.eps.volatility();
  const Matrix szz = model.zeta.volatility();
  const Index k2 = model.b.rows();
  const Matrix psi_inv = (Matrix::Identity(k2, k2) - model.b).fullPivLu().inverse();
  const Matrix& l1 = model.lambda1;
  const Matrix& l2 = model.lambda2;
  const Matrix& g = model.gamma;

  const Matrix s11 = l1 * sxx * l1.transpose() + sdd;
  const Matrix s12 = l1 * sxx * g.transpose() * psi_inv.transpose() * l2.transpose();
  const Matrix s22 = l2 * psi_inv * (g * sxx * g.transpose() + szz) * psi_inv.transpose() * l2.transpose() + see;
  const Index p1 = s11.rows(), p2 = s22.rows();
  Matrix sigma(p1 + p2, p1 + p2);
  sigma.topLeftCorner(p1, p1) = s11;
  sigma.topRightCorner(p1, p2) = s12;
  sigma.bottomLeftCorner(p2, p1) = s12.transpose();
  sigma.bottomRightCorner(p2, p2) = s22;
  return 0.5 * (sigma + sigma.transpose());
}

TrueModelSpec reference_true_model() {
  TrueModelSpec m;
  m.lambda1 = Matrix(5, 1);
  m.lambda1 << 1, 0.2, 0.4, 0.1, 0.7;
  m.lambda2 = Matrix::Zero(10, 2);
  m.lambda2.col(0).head(5) << 1, 0.2, 0.9, 1.2, 0.3;
  m.lambda2.col(1).tail(5) << 1, 0.5, 0.6, 0.4, 0.7;
  m.b = Matrix::Zero(2, 2);
  m.gamma = Matrix(2, 1);
  m.gamma << 0.7, -0.5;

  m.xi = diagonal_ou({2}, {0.7}, {5}, 2.0, 1.0);
  m.delta = diagonal_ou({3, 2, 4, 5, 2}, {0.9, 0.7, 0.5, 0.4, 0.8}, {5, 4, 6, 5, 4}, 1.0, 0.0);
  m.eps = diagonal_ou({2, 3, 2, 5, 4, 2, 3, 2, 5, 4}, {0.4, 0.9, 0.3, 0.6, 0.4, 0.5, 0.8, 0.6, 0.7, 0.3},
                      {5, 4, 4, 5, 6, 4, 6, 5, 6, 5}, 1.0, 0.0);
  m.zeta = diagonal_ou({5, 2}, {0.5, 0.8}, {6, 5}, 1.0, 0.0);
  return m;
}

TrueModelSpec without_jumps(TrueModelSpec model) {
  for (LatentSdeSpec* s : {&model.xi, &model.delta, &model.eps, &model.zeta}) {
    for (JumpSpec& j : s->jumps) j.intensity = 0.0;
  }
  return model;
}

}  // namespace jdsem
