#include "doctest.h"

#include "jdsem/error.hpp"
#include "jdsem/presets.hpp"
#include "jdsem/quasi_lik.hpp"
#include "jdsem/simulator.hpp"
#include "support.hpp"

#include <tuple>
#include <cmath>
#include <random>

using namespace jdsem;
using testing::exact_stats;
using testing::gaussian_path;
using testing::one_factor_spec;
using testing::rel_err;
using testing::scalar_spec;

TEST_CASE("truncation threshold") {
  CHECK(truncation_threshold(1e-4, TruncationRule(10, 0.4)) == doctest::Approx(std::pow(10.0, -0.6)).epsilon(1e-14));
  CHECK(truncation_threshold(1e-4, TruncationRule(10, 0.4)) == doctest::Approx(0.251189).epsilon(1e-6));
  CHECK(truncation_threshold(1.0, TruncationRule(10, 0.4)) == 10.0);
}

TEST_CASE("truncation rule validation") {
  CHECK_THROWS_AS(TruncationRule(0.0, 0.4), Error);
  CHECK_THROWS_AS(TruncationRule(10, 0.5), Error);
  CHECK_THROWS_AS(TruncationRule(10, 0.3), Error);
  CHECK_NOTHROW(TruncationRule(10, 1.0 / 3.0));
}

TEST_CASE("all-zero increments are all kept") {
  const PathData path(0.01, Matrix::Constant(11, 3, 2.5));
  const auto st = truncation_stats(path, TruncationRule(1, 0.4));
  CHECK(st.n == 10);
  CHECK(st.n_kept == 10);
  CHECK(st.sigma_check.isZero(0.0));
}

TEST_CASE("an increment exactly at the threshold is kept") {
  Matrix x(2, 2);
  x << 0, 0, 6, 8;
  const auto st = truncation_stats(PathData(1.0, x), TruncationRule(10, 0.4));
  CHECK(st.n_kept == 1);
  CHECK(st.keep[0]);
  CHECK(st.sigma_check(0, 0) == 36.0);
  CHECK(st.sigma_check(0, 1) == 48.0);
}

TEST_CASE("a planted spike is removed") {
  Matrix cov = Matrix::Identity(3, 3);
  PathData base = gaussian_path(cov, 400, 1e-3, 17);
  const TruncationRule rule(10, 0.4);
  const double thr = truncation_threshold(1e-3, rule);
  Matrix x = base.x();
  Vector spike(3);
  spike << 2 * thr, 0, 0;
  for (Eigen::Index i = 201; i < x.rows(); ++i) x.row(i) += spike.transpose();
  const PathData path(1e-3, x);
  const auto st = truncation_stats(path, rule);
  CHECK(st.n_kept == 399);
  CHECK_FALSE(st.keep[200]);

  Matrix direct = Matrix::Zero(3, 3);
  for (Eigen::Index i = 0; i < 400; ++i) {
    if (i == 200) continue;
    const Vector d = (x.row(i + 1) - x.row(i)).transpose();
    direct += d * d.transpose();
  }
  direct /= 400 * 1e-3;
  CHECK((st.sigma_check - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("increasing D never decreases the kept count") {
  SimConfig cfg{5000, 1.0, 99};
  const PathData path = simulate_observations(reference_true_model(), cfg);
  std::size_t prev = 0;
  for (double d : {0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 1e6}) {
    const auto st = truncation_stats(path, TruncationRule(d, 0.4));
    CHECK(st.n_kept >= prev);
    prev = st.n_kept;
  }
  CHECK(prev == 5000);
}

TEST_CASE("quasi_loglik closed-form values") {
  SUBCASE("identity") {
    const auto st = exact_stats(Matrix::Identity(4, 4), 50, 50);
    CHECK(quasi_loglik(make_implied(Matrix::Identity(4, 4)), st, 50) == doctest::Approx(-100.0));
  }
  SUBCASE("2 I versus I") {
    const auto st = exact_stats(Matrix::Identity(2, 2), 10, 10);
    const double h = quasi_loglik(make_implied(2.0 * Matrix::Identity(2, 2)), st, 10);
    CHECK(h == doctest::Approx(-5.0 - 5.0 * std::log(4.0)).epsilon(1e-14));
    CHECK(h == doctest::Approx(-11.93147).epsilon(1e-6));
  }
  SUBCASE("non positive definite") {
    Matrix s(2, 2);
    s << 1, 2, 2, 1;
    const auto st = exact_stats(Matrix::Identity(2, 2), 10, 10);
    CHECK_THROWS_AS(std::ignore = quasi_loglik(make_implied(s), st, 10), Error);
  }
}

TEST_CASE("direct form special cases") {
  const CheckedSpec spec = one_factor_spec(3);
  std::mt19937_64 rng(5);
  const Vector th = random_theta(spec, rng);
  const ThetaVector theta(spec, th);
  const auto implied = assemble_sigma(spec, theta);

  SUBCASE("zero data") {
    const PathData path(0.01, Matrix::Zero(21, 3));
    const double h = quasi_loglik_direct(spec, theta, path, TruncationRule(1, 0.4));
    CHECK(h == doctest::Approx(-10.0 * implied.log_det()).epsilon(1e-12));
  }
  SUBCASE("identity covariance") {
    StructuralSpec s = one_factor_spec(2).spec();
    s.lambda1(1, 0) = Cell::fixed(0.0);
    s.sigma_xi(0, 0) = Cell::fixed(0.0);
    s.sigma_delta(0, 0) = Cell::fixed(1.0);
    s.sigma_delta(1, 1) = Cell::fixed(1.0);
    const CheckedSpec c = validate_spec(s);
    const PathData path = gaussian_path(Matrix::Identity(2, 2), 100, 0.01, 8);
    const TruncationRule rule(1.0, 0.4);
    const auto st = truncation_stats(path, rule);
    double want = 0.0;
    for (Eigen::Index i = 0; i < 100; ++i) {
      if (!st.keep[static_cast<std::size_t>(i)]) continue;
      want -= (path.x().row(i + 1) - path.x().row(i)).squaredNorm() / (2 * 0.01);
    }
    CHECK(st.n_kept < 100);
    CHECK(quasi_loglik_direct(c, ThetaVector(c, Vector(0)), path, rule) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("reduced and direct forms agree on random inputs") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> pick_p(1, 15);
  std::uniform_int_distribution<std::size_t> pick_n(2, 1000);
  std::uniform_real_distribution<double> pick_d(0.5, 20.0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t p = pick_p(rng);
    const std::size_t n = pick_n(rng);
    const CheckedSpec spec = one_factor_spec(p);
    const ThetaVector theta(spec, random_theta(spec, rng));
    const Matrix cov = assemble_sigma(spec, ThetaVector(spec, random_theta(spec, rng))).sigma;
    const PathData path = gaussian_path(cov, n, 1.0 / static_cast<double>(n), rng());
    const TruncationRule rule(pick_d(rng), 0.4);
    const auto st = truncation_stats(path, rule);
    const double reduced = quasi_loglik(assemble_sigma(spec, theta), st, n);
    const double direct = quasi_loglik_direct(spec, theta, path, rule);
    CHECK(std::abs(reduced - direct) <= 1e-9 * std::abs(direct));
  }
}

TEST_CASE("gradient matches central differences") {
  SimConfig cfg{2000, 1.0, 123};
  const PathData path = simulate_observations(reference_true_model(), cfg);
  const auto st = truncation_stats(path, TruncationRule(10, 0.4));
  std::mt19937_64 rng(9);
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
      CHECK((g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) <= 1e-5);
    }
  }
}

TEST_CASE("scalar model: gradient and normalized Hessian") {
  const CheckedSpec spec = scalar_spec();
  const double s = 0.8;
  const auto st = exact_stats(Matrix::Constant(1, 1, s), 1000, 1000);
  for (double th : {0.3, 0.8, 2.0}) {
    const Vector g = grad_h(spec, ThetaVector(spec, Vector::Constant(1, th)), st, 1000);
    CHECK(g(0) == doctest::Approx(500.0 * (s / (th * th) - 1.0 / th)).epsilon(1e-12));
  }
  const Vector g0 = grad_h(spec, ThetaVector(spec, Vector::Constant(1, s)), st, 1000);
  CHECK(std::abs(g0(0)) <= 1e-10);
  const auto hess = normalized_hessian(spec, ThetaVector(spec, Vector::Constant(1, s)), st, 1000);
  CHECK(hess.gamma(0, 0) == doctest::Approx(1.0 / (2 * s * s)).epsilon(1e-6));
}

TEST_CASE("normalized Hessian is symmetric and PD at a fit") {
  const auto spec = model1_spec();
  const auto st = exact_stats(true_sigma(reference_true_model()), 100000, 100000);
  const auto hess = normalized_hessian(spec, ThetaVector(spec, model1_truth()), st, st.n);
  CHECK(hess.asymmetry <= 1e-6);
  CHECK(hess.gamma == hess.gamma.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hess.gamma);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("nesting transport of the quasi-likelihood") {
  SimConfig cfg{3000, 1.0, 321};
  const PathData path = simulate_observations(reference_true_model(), cfg);
  const auto st = truncation_stats(path, TruncationRule(10, 0.4));
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const NestingEmbedding emb = model1_in_model2();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector th1 = random_theta(s1, rng);
    const Vector th2 = emb.f * th1 + emb.c;
    const double h1 = quasi_loglik(assemble_sigma(s1, ThetaVector(s1, th1)), st, st.n);
    const double h2 = quasi_loglik(assemble_sigma(s2, ThetaVector(s2, th2)), st, st.n);
    CHECK(std::abs(h1 - h2) <= 1e-9 * std::abs(h1));
  }
}

TEST_CASE("H/n approaches the population objective without jumps") {
  const TrueModelSpec model = without_jumps(reference_true_model());
  const Matrix sigma0 = true_sigma(model);
  SimConfig cfg{100000, 1.0, 2718};
  const PathData path = simulate_observations(model, cfg);
  const auto st = truncation_stats(path, TruncationRule(10, 0.4));
  const auto spec = model1_spec();
  std::mt19937_64 rng(6);
  for (int t = 0; t < 3; ++t) {
    Vector th = model1_truth();
    // Stay close enough to the truth that Sigma is well conditioned.
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Eigen::Index k = 0; k < th.size(); ++k) th(k) += spec.positive()[static_cast<std::size_t>(k)] ? 0.0 : jitter(rng);
    const auto implied = assemble_sigma(spec, ThetaVector(spec, th));
    const Matrix inv = implied.sigma.inverse();
    const double pop = -0.5 * (inv * sigma0).trace() - 0.5 * implied.log_det();
    const double hn = quasi_loglik(implied, st, st.n) / static_cast<double>(st.n);
    CHECK(std::abs(hn - pop) <= 0.01);
  }
}
