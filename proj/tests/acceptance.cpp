// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "jdsem/criteria.hpp"
#include "jdsem/estimation.hpp"
#include "jdsem/harness.hpp"
#include "jdsem/presets.hpp"
#include "jdsem/seed.hpp"
#include "jdsem/quasi_lik.hpp"
#include "jdsem/sem_core.hpp"
#include "jdsem/simulator.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace jdsem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Outcome covariance_identity() {
  const Matrix sigma0 = true_sigma(reference_true_model());
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const double e1 = (assemble_sigma(s1, ThetaVector(s1, model1_truth())).sigma - sigma0).cwiseAbs().maxCoeff();
  const double e2 = (assemble_sigma(s2, ThetaVector(s2, model2_truth())).sigma - sigma0).cwiseAbs().maxCoeff();
  return {e1 <= 1e-12 && e2 <= 1e-12, fmt("max |Sigma - Sigma0|: model1 %.2e, model2 %.2e", e1, e2)};
}

Outcome identifiability_ranks() {
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const std::size_t r1 = identifiability_rank(s1, ThetaVector(s1, model1_truth()));
  const std::size_t r2 = identifiability_rank(s2, ThetaVector(s2, model2_truth()));
  return {r1 == 32 && r2 == 33, fmt("rank model1 = %zu, model2 = %zu", r1, r2)};
}

Outcome likelihood_equivalence() {
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> pick_model(0, 3);
  std::uniform_int_distribution<std::size_t> pick_p(1, 15);
  std::uniform_int_distribution<std::size_t> pick_n(2, 1000);
  std::uniform_real_distribution<double> pick_d(0.5, 20.0);
  std::uniform_real_distribution<double> pick_rho(1.0 / 3.0, 0.499);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t which = pick_model(rng);
    const CheckedSpec spec = which == 0   ? model1_spec()
                             : which == 1 ? model2_spec()
                             : which == 2 ? model3_spec()
                                          : testing::one_factor_spec(pick_p(rng));
    const std::size_t n = pick_n(rng);
    PathData path = [&] {
      if (spec.p() == 15 && t % 2 == 0) {
        return simulate_observations(reference_true_model(), SimConfig{n, 1.0, rng()});
      }
      const Matrix cov = assemble_sigma(spec, ThetaVector(spec, random_theta(spec, rng))).sigma;
      return testing::gaussian_path(cov, n, 1.0 / static_cast<double>(n), rng());
    }();
    const TruncationRule rule(pick_d(rng), pick_rho(rng));
    const ThetaVector theta(spec, random_theta(spec, rng));
    const double reduced = quasi_loglik(assemble_sigma(spec, theta), truncation_stats(path, rule), n);
    const double direct = quasi_loglik_direct(spec, theta, path, rule);
    worst = std::max(worst, std::abs(reduced - direct) / std::abs(direct));
  }
  return {worst <= 1e-9, fmt("worst relative difference over 50 cases %.2e", worst)};
}

Outcome gradient_correctness() {
  const PathData path = simulate_observations(reference_true_model(), SimConfig{5000, 1.0, 99});
  const auto st = truncation_stats(path, TruncationRule(10, 0.4));
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (const auto& spec : {model1_spec(), model2_spec(), model3_spec()}) {
    for (int t = 0; t < 10; ++t) {
      const Vector th = random_theta(spec, rng);
      const Vector g = grad_h(spec, ThetaVector(spec, th), st, st.n);
      Vector fd(g.size());
      for (Eigen::Index k = 0; k < th.size(); ++k) {
        const double step = 1e-6 * std::max(1.0, std::abs(th(k)));
        Vector up = th, dn = th;
        up(k) += step;
        dn(k) -= step;
        fd(k) = (quasi_loglik(assemble_sigma(spec, ThetaVector(spec, up)), st, st.n) -
                 quasi_loglik(assemble_sigma(spec, ThetaVector(spec, dn)), st, st.n)) /
                (2 * step);
      }
      worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
  }
  return {worst <= 1e-5, fmt("worst relative error over 3 models x 10 points %.2e", worst)};
}

Outcome nesting_transport() {
  const PathData path = simulate_observations(reference_true_model(), SimConfig{5000, 1.0, 2});
  const auto st = truncation_stats(path, TruncationRule(10, 0.4));
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const NestingEmbedding emb = model1_in_model2();
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Vector th = random_theta(s1, rng);
    const double h1 = quasi_loglik(assemble_sigma(s1, ThetaVector(s1, th)), st, st.n);
    const double h2 = quasi_loglik(assemble_sigma(s2, ThetaVector(s2, Vector(emb.f * th + emb.c))), st, st.n);
    worst = std::max(worst, std::abs(h1 - h2) / std::abs(h1));
  }
  return {worst <= 1e-9, fmt("worst relative difference over 20 points %.2e", worst)};
}

double chi2_survival(unsigned k, double x) {
  const double half = k / 2.0;
  const double norm = 1.0 / (std::pow(2.0, half) * std::tgamma(half));
  auto f = [&](double u) {
    const double t = u * u;
    return norm * std::pow(t, half - 1.0) * std::exp(-t / 2.0) * 2.0 * u;
  };
  const double a = std::sqrt(x), b = std::sqrt(x + 200.0);
  const int m = 200000;
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

Outcome chi2_limit() {
  const double p1 = qaic_overfit_probability(1);
  const double oracle = chi2_survival(1, 2.0);
  const double p2 = qaic_overfit_probability(2);
  const bool ok = std::abs(p1 - oracle) <= 1e-3 && std::abs(p1 - 0.1573) <= 1e-3 && std::abs(p2 - std::exp(-2.0)) <= 1e-12;
  return {ok, fmt("P(1) = %.6f (oracle %.6f), |P(2) - e^-2| = %.1e", p1, oracle, std::abs(p2 - std::exp(-2.0)))};
}

Outcome consistency_trend() {
  const auto spec = model1_spec();
  auto median_error = [&](std::size_t n) {
    std::vector<double> errs;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const PathData path = simulate_observations(reference_true_model(), SimConfig{n, 1.0, derive_seed(9, {n, s})});
      const auto st = truncation_stats(path, TruncationRule(10, 0.4));
      FitConfig cfg;
      cfg.init = GivenPoint{model1_truth()};
      const FitResult r = fit(spec, st, st.n, st.h, cfg);
      errs.push_back((r.theta_hat.values() - model1_truth()).cwiseAbs().maxCoeff());
    }
    return median(errs);
  };
  const double e4 = median_error(10000);
  const double e5 = median_error(100000);
  const double ratio = e4 / e5;
  return {ratio >= 1.5 && ratio <= 6.0,
          fmt("median |theta - theta0|_inf: %.4f at n = 1e4, %.4f at n = 1e5, ratio %.2f", e4, e5, ratio)};
}

}  // namespace

int main() {
  bool all = true;
  auto report = [&](int id, const char* name, const Outcome& o, double secs) {
    all = all && o.pass;
    std::printf("criterion %d %-28s %s  %s  (%.1f s)\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  };
  auto timed = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = f();
    report(id, name, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };

  timed(1, "covariance identity", covariance_identity);
  timed(2, "identifiability ranks", identifiability_ranks);
  timed(3, "likelihood equivalence", likelihood_equivalence);
  timed(4, "gradient correctness", gradient_correctness);
  timed(5, "nesting transport", nesting_transport);

  {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = reference_experiment();
    cfg.n_grid = {50000};
    const SelectionTable t = run_experiment(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double r = static_cast<double>(t.replications);
    const std::size_t q1 = t.count(Criterion::QBIC, 0, 0), q3 = t.count(Criterion::QBIC, 0, 2);
    const std::size_t a2 = t.count(Criterion::QAIC, 0, 1), a3 = t.count(Criterion::QAIC, 0, 2);
    report(6, "QBIC selection (R=200)",
           {q1 / r >= 0.95 && q3 == 0,
            fmt("QBIC model1 %zu/%zu, model2 %zu, model3 %zu, failed %zu", q1, t.replications,
                t.count(Criterion::QBIC, 0, 1), q3, t.failed[0])},
           secs);
    report(7, "QAIC overfit rate (R=200)",
           {a2 / r >= 0.10 && a2 / r <= 0.25,
            fmt("QAIC model2 fraction %.3f (model1 %zu, model2 %zu, model3 %zu)", a2 / r,
                t.count(Criterion::QAIC, 0, 0), a2, a3)},
           0.0);
  }

  timed(8, "chi-square limit", chi2_limit);
  timed(9, "consistency trend", consistency_trend);

  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL");
  return all ? 0 : 1;
}
