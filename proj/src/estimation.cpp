#include "jdsem/estimation.hpp"

#include "jdsem/error.hpp"
#include "jdsem/seed.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace jdsem {

namespace {

using Index = Eigen::Index;

constexpr double kSufficientIncrease = 1e-4;
constexpr double kShrink = 0.5;
constexpr int kMaxBacktracks = 40;

struct Point {
  Vector w;       // working coordinates
  Vector theta;   // natural coordinates
  double h = 0.0;
  Vector grad_w;  // dH/dw
};

// Maps between natural and working coordinates and evaluates H there.
class Objective {
 public:
  Objective(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n, bool log_positives)
      : spec_(spec), stats_(stats), n_(n) {
    log_.assign(spec.q(), false);
    if (log_positives) log_ = spec.positive();
  }

  [[nodiscard]] Vector to_working(const Vector& theta) const {
    Vector w = theta;
    for (std::size_t k = 0; k < log_.size(); ++k) {
      if (log_[k]) w(static_cast<Index>(k)) = std::log(theta(static_cast<Index>(k)));
    }
    return w;
  }

  [[nodiscard]] Vector to_natural(const Vector& w) const {
    Vector theta = w;
    for (std::size_t k = 0; k < log_.size(); ++k) {
      if (log_[k]) theta(static_cast<Index>(k)) = std::exp(w(static_cast<Index>(k)));
    }
    return theta;
  }

  // nullopt when the point lies outside the admissible region (non-positive
  // variance, singular I - B, or a Sigma that is not positive definite).
  [[nodiscard]] std::optional<Point> evaluate(const Vector& w) const {
    Point pt{w, to_natural(w), 0.0, Vector()};
    if (!ThetaVector::admissible(spec_, pt.theta)) return std::nullopt;
    try {
      const ThetaVector theta(spec_, pt.theta);
      const ImpliedCovariance implied = assemble_sigma(spec_, theta);
      if (!implied.pd) return std::nullopt;
      pt.h = quasi_loglik(implied, stats_, n_);
      if (!std::isfinite(pt.h)) return std::nullopt;
      pt.grad_w = grad_h(implied, sigma_derivatives(spec_, theta), stats_, n_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularPsi || e.code() == ErrorCode::NotPositiveDefinite) return std::nullopt;
      throw;
    }
    for (std::size_t k = 0; k < log_.size(); ++k) {
      if (log_[k]) pt.grad_w(static_cast<Index>(k)) *= pt.theta(static_cast<Index>(k));
    }
    return pt;
  }

 private:
  const CheckedSpec& spec_;
  const TruncationStats& stats_;
  std::size_t n_;
  std::vector<bool> log_;
};

double relative_grad(const Point& pt) {
  if (pt.grad_w.size() == 0) return 0.0;
  return pt.grad_w.cwiseAbs().maxCoeff() / std::max(1.0, std::abs(pt.h));
}

void check_grid(const TruncationStats& stats, std::size_t n, double h) {
  if (stats.n != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "statistics cover " + std::to_string(stats.n) + " increments, expected " + std::to_string(n));
  }
  if (std::abs(stats.h - h) > 1e-12 * std::max(1.0, std::abs(h))) {
    throw Error(ErrorCode::DimensionMismatch, "statistics were computed on a different step size");
  }
}

FitResult fit_from(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n, const FitConfig& config,
                   const Vector& start) {
  if (static_cast<std::size_t>(start.size()) != spec.q()) {
    throw Error(ErrorCode::DimensionMismatch, "initial point has length " + std::to_string(start.size()) +
                                                  ", model '" + spec.name() + "' expects " + std::to_string(spec.q()));
  }
  if (config.max_iters < 1 || !(config.grad_tol > 0.0) || !(config.step_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1 and tolerances positive");
  }

  if (spec.q() == 0) {
    const ThetaVector empty(spec, Vector());
    const ImpliedCovariance implied = assemble_sigma(spec, empty);
    if (!implied.pd) throw Error(ErrorCode::InitNotPD, "fixed covariance of model '" + spec.name() + "' is not PD");
    const double h = quasi_loglik(implied, stats, n);
    return FitResult{empty, h, true, 0, 0.0, stats.n_kept, StopReason::NothingToFit, {h}};
  }

  const Objective objective(spec, stats, n, config.reparameterize_positives);
  if (!ThetaVector::admissible(spec, start)) {
    throw Error(ErrorCode::InitNotPD, "initial point violates positivity for model '" + spec.name() + "'");
  }
  std::optional<Point> init = objective.evaluate(objective.to_working(start));
  if (!init) throw Error(ErrorCode::InitNotPD, "initial point gives a non-PD covariance for model '" + spec.name() + "'");

  const Index q = static_cast<Index>(spec.q());
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(n, 1));
  Point cur = std::move(*init);
  std::vector<double> trace{cur.h};

  // Minimize f = -H / n; inverse Hessian approximation of f in working coordinates.
  Matrix hinv = Matrix::Identity(q, q);
  bool scaled = false;
  int iterations = 0;
  StopReason stop = StopReason::MaxIterations;

  while (true) {
    if (relative_grad(cur) <= config.grad_tol) {
      stop = StopReason::Gradient;
      break;
    }
    if (iterations >= config.max_iters) {
      stop = StopReason::MaxIterations;
      break;
    }
    const Vector g = -scale * cur.grad_w;
    Vector dir = -hinv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      scaled = false;
      dir = -g;
      slope = g.dot(dir);
    }

    double alpha = 1.0;
    if (!scaled) alpha = std::min(1.0, 1.0 / std::max(dir.cwiseAbs().maxCoeff(), 1e-300));
    std::optional<Point> next;
    for (int bt = 0; bt <= kMaxBacktracks; ++bt, alpha *= kShrink) {
      std::optional<Point> trial = objective.evaluate(cur.w + alpha * dir);
      if (!trial) continue;
      // -H/n must fall by at least c * alpha * |slope|.
      if (-scale * trial->h <= -scale * cur.h + kSufficientIncrease * alpha * slope) {
        next = std::move(trial);
        break;
      }
    }
    if (!next) {
      if (scaled || hinv != Matrix::Identity(q, q)) {
        // Retry once along steepest ascent before giving up.
        hinv.setIdentity();
        scaled = false;
        continue;
      }
      stop = StopReason::NoAscentDirection;
      break;
    }

    const Vector s = next->w - cur.w;
    const Vector y = -scale * next->grad_w - g;
    const bool tiny_step = s.cwiseAbs().maxCoeff() < config.step_tol;
    cur = std::move(*next);
    ++iterations;
    trace.push_back(cur.h);
    if (tiny_step) {
      stop = relative_grad(cur) <= config.grad_tol ? StopReason::Gradient : StopReason::Step;
      break;
    }

    const double ys = y.dot(s);
    if (ys > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        hinv = Matrix::Identity(q, q) * (ys / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / ys;
      const Matrix left = Matrix::Identity(q, q) - rho * s * y.transpose();
      hinv = left * hinv * left.transpose() + rho * s * s.transpose();
    }
  }

  const bool converged = stop == StopReason::Gradient || stop == StopReason::Step;
  return FitResult{ThetaVector(spec, cur.theta), cur.h, converged, iterations, relative_grad(cur), stats.n_kept, stop,
                   std::move(trace)};
}

}  // namespace

const char* to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::NothingToFit: return "nothing-to-fit";
    case StopReason::Gradient: return "gradient";
    case StopReason::Step: return "step";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::NoAscentDirection: return "no-ascent-direction";
  }
  return "unknown";
}

FitResult fit(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n, double h,
              const FitConfig& config) {
  check_grid(stats, n, h);
  if (const auto* given = std::get_if<GivenPoint>(&config.init)) return fit_from(spec, stats, n, config, given->theta);
  return multi_start_fit(spec, stats, n, h, config);
}

FitResult multi_start_fit(const CheckedSpec& spec, const TruncationStats& stats, std::size_t n, double h,
                          const FitConfig& config) {
  check_grid(stats, n, h);
  if (const auto* given = std::get_if<GivenPoint>(&config.init)) return fit_from(spec, stats, n, config, given->theta);

  const MultiStart& ms = std::get<MultiStart>(config.init);
  if (ms.count == 0) throw Error(ErrorCode::InvalidArgument, "multi-start needs at least one start");

  std::optional<FitResult> best;
  for (std::size_t s = 0; s < ms.count; ++s) {
    std::mt19937_64 rng(derive_seed(ms.seed, {s}));
    const Vector start = random_theta(spec, rng);
    try {
      FitResult r = fit_from(spec, stats, n, config, start);
      if (!best || r.h_value > best->h_value) best = std::move(r);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InitNotPD) throw;
    }
  }
  if (!best) {
    throw Error(ErrorCode::AllStartsFailed, "no start produced a positive definite covariance for model '" +
                                                spec.name() + "'");
  }
  return std::move(*best);
}

}  // namespace jdsem
