#include "doctest.h"

#include "jdsem/error.hpp"
#include "jdsem/presets.hpp"
#include "jdsem/sem_core.hpp"
#include "jdsem/simulator.hpp"
#include "support.hpp"

#include <tuple>
#include <random>

using namespace jdsem;
using testing::scalar_spec;

namespace {

StructuralSpec all_fixed_spec(std::size_t p1, std::size_t p2) {
  StructuralSpec s;
  s.name = "fixed";
  s.p1 = p1;
  s.p2 = p2;
  s.k1 = 1;
  s.k2 = 1;
  s.lambda1 = EntryMap(p1, 1);
  s.lambda2 = EntryMap(p2, 1);
  s.b = EntryMap(1, 1);
  s.gamma = EntryMap(1, 1);
  s.sigma_xi = EntryMap(1, 1);
  s.sigma_zeta = EntryMap(1, 1);
  s.sigma_delta = EntryMap(p1, p1);
  s.sigma_eps = EntryMap(p2, p2);
  s.sigma_xi(0, 0) = Cell::fixed(1.0);
  s.sigma_zeta(0, 0) = Cell::fixed(1.0);
  for (std::size_t k = 0; k < p1; ++k) s.sigma_delta(k, k) = Cell::fixed(1.0);
  for (std::size_t k = 0; k < p2; ++k) s.sigma_eps(k, k) = Cell::fixed(1.0);
  return s;
}

Matrix fd_jacobian(const CheckedSpec& spec, const Vector& theta) {
  const auto q = static_cast<Eigen::Index>(spec.q());
  const auto p = static_cast<Eigen::Index>(spec.p());
  Matrix out(p * (p + 1) / 2, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    const double step = 1e-6 * std::max(1.0, std::abs(theta(k)));
    Vector up = theta, dn = theta;
    up(k) += step;
    dn(k) -= step;
    out.col(k) = (vech(assemble_sigma(spec, ThetaVector(spec, up)).sigma) -
                  vech(assemble_sigma(spec, ThetaVector(spec, dn)).sigma)) /
                 (2 * step);
  }
  return out;
}

}  // namespace

TEST_CASE("validate_spec counts parameters of the built-in models") {
  CHECK(model1_spec().q() == 32);
  CHECK(model2_spec().q() == 33);
  CHECK(model3_spec().q() == 31);
  CHECK(model1_spec().reused().empty());
}

TEST_CASE("validate_spec with every cell fixed has q = 0") {
  const CheckedSpec s = validate_spec(all_fixed_spec(2, 2));
  CHECK(s.q() == 0);
}

TEST_CASE("validate_spec flags volatility diagonals as positive") {
  const CheckedSpec s = model1_spec();
  for (std::size_t k = 0; k < 32; ++k) CHECK(s.positive()[k] == (k >= 14));
}

TEST_CASE("validate_spec rejects malformed specs") {
  SUBCASE("gap in indices") {
    StructuralSpec s = all_fixed_spec(2, 2);
    s.lambda1(1, 0) = Cell::free(1);
    CHECK_THROWS_AS(std::ignore = validate_spec(s), Error);
    try {
      std::ignore = validate_spec(s);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::GapInParamIndices);
    }
  }
  SUBCASE("asymmetric volatility") {
    StructuralSpec s = all_fixed_spec(2, 2);
    s.sigma_delta(1, 0) = Cell::fixed(0.3);
    s.sigma_delta(0, 1) = Cell::fixed(0.4);
    try {
      std::ignore = validate_spec(s);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::AsymmetricEntryMap);
    }
  }
  SUBCASE("lower triangle is mirrored") {
    StructuralSpec s = all_fixed_spec(2, 2);
    s.sigma_delta(1, 0) = Cell::fixed(0.3);
    const CheckedSpec c = validate_spec(s);
    CHECK(c.spec().sigma_delta(0, 1) == Cell::fixed(0.3));
  }
  SUBCASE("nonzero B diagonal") {
    StructuralSpec s = all_fixed_spec(2, 2);
    s.b(0, 0) = Cell::fixed(0.5);
    try {
      std::ignore = validate_spec(s);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonzeroBDiagonal);
    }
  }
  SUBCASE("shape mismatch") {
    StructuralSpec s = all_fixed_spec(2, 2);
    s.lambda1 = EntryMap(3, 1);
    try {
      std::ignore = validate_spec(s);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
  }
}

TEST_CASE("shared indices are allowed and reported") {
  StructuralSpec s = all_fixed_spec(3, 1);
  s.lambda1(1, 0) = Cell::free(0);
  s.lambda1(2, 0) = Cell::free(0);
  const CheckedSpec c = validate_spec(s);
  CHECK(c.q() == 1);
  REQUIRE(c.reused().size() == 1);
  CHECK(c.reused()[0] == 0);
  const Matrix d = sigma_derivatives(c, ThetaVector(c, Vector::Constant(1, 0.5)))[0];
  // Sigma(1,2) = l^2 -> 2 l
  CHECK(d(1, 2) == doctest::Approx(1.0));
}

TEST_CASE("ThetaVector enforces length and positivity") {
  const CheckedSpec s = model1_spec();
  CHECK_THROWS_AS(ThetaVector(s, Vector::Ones(31)), Error);
  Vector bad = model1_truth();
  bad(20) = -0.1;
  CHECK_THROWS_AS(ThetaVector(s, bad), Error);
  CHECK_FALSE(ThetaVector::admissible(s, bad));
  CHECK(ThetaVector::admissible(s, model1_truth()));
}

TEST_CASE("assemble_sigma reproduces the true covariance") {
  const Matrix sigma0 = true_sigma(reference_true_model());
  CHECK(sigma0(0, 0) == doctest::Approx(1.30).epsilon(1e-14));
  CHECK(sigma0(0, 5) == doctest::Approx(0.343).epsilon(1e-14));

  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const auto a = assemble_sigma(s1, ThetaVector(s1, model1_truth()));
  const auto b = assemble_sigma(s2, ThetaVector(s2, model2_truth()));
  CHECK((a.sigma - sigma0).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((b.sigma - sigma0).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(a.pd);
  CHECK(a.sigma(0, 0) == doctest::Approx(1.30));
  CHECK(a.sigma(0, 5) == doctest::Approx(0.343));
}

TEST_CASE("assemble_sigma collapses to the error covariances") {
  const CheckedSpec s = validate_spec(all_fixed_spec(3, 4));
  const auto implied = assemble_sigma(s, ThetaVector(s, Vector(0)));
  // sigma_xi and sigma_zeta are 1 but every loading is 0.
  CHECK(implied.sigma.isApprox(Matrix::Identity(7, 7)));
  CHECK(implied.log_det() == doctest::Approx(0.0));
}

TEST_CASE("assemble_sigma is exactly symmetric") {
  std::mt19937_64 rng(11);
  for (const auto& spec : {model1_spec(), model2_spec(), model3_spec()}) {
    for (int t = 0; t < 20; ++t) {
      const auto implied = assemble_sigma(spec, ThetaVector(spec, random_theta(spec, rng)));
      CHECK(implied.sigma == implied.sigma.transpose());
    }
  }
}

TEST_CASE("singular I - B is rejected") {
  StructuralSpec s = all_fixed_spec(1, 2);
  s.k2 = 2;
  s.lambda2 = EntryMap(2, 2);
  s.lambda2(0, 0) = Cell::fixed(1.0);
  s.lambda2(1, 1) = Cell::fixed(1.0);
  s.b = EntryMap(2, 2);
  s.b(0, 1) = Cell::fixed(1.0);
  s.b(1, 0) = Cell::fixed(1.0);
  s.gamma = EntryMap(2, 1);
  s.sigma_zeta = EntryMap(2, 2);
  s.sigma_zeta(0, 0) = Cell::fixed(1.0);
  s.sigma_zeta(1, 1) = Cell::fixed(1.0);
  const CheckedSpec c = validate_spec(s);
  try {
    std::ignore = assemble_sigma(c, ThetaVector(c, Vector(0)));
    FAIL("expected SingularPsi");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularPsi);
  }
}

TEST_CASE("nonzero B enters through (I - B)^-1") {
  StructuralSpec s = all_fixed_spec(1, 2);
  s.k2 = 2;
  s.lambda2 = EntryMap(2, 2);
  s.lambda2(0, 0) = Cell::fixed(1.0);
  s.lambda2(1, 1) = Cell::fixed(1.0);
  s.b = EntryMap(2, 2);
  s.b(1, 0) = Cell::free(0);
  s.gamma = EntryMap(2, 1);
  s.gamma(0, 0) = Cell::free(1);
  s.sigma_zeta = EntryMap(2, 2);
  s.sigma_zeta(0, 0) = Cell::fixed(1.0);
  s.sigma_zeta(1, 1) = Cell::fixed(1.0);
  s.lambda1(0, 0) = Cell::fixed(1.0);
  const CheckedSpec c = validate_spec(s);
  Vector th(2);
  th << 0.6, 0.8;
  const auto implied = assemble_sigma(c, ThetaVector(c, th));
  // eta1 = 0.8 xi + z1, eta2 = 0.6 eta1 + z2
  CHECK(implied.sigma(1, 1) == doctest::Approx(0.64 + 1 + 1));
  CHECK(implied.sigma(2, 2) == doctest::Approx(0.36 * 1.64 + 1 + 1));
  CHECK(implied.sigma(1, 2) == doctest::Approx(0.6 * 1.64));
  CHECK(implied.sigma(0, 2) == doctest::Approx(0.48));
  const Matrix jac = sigma_jacobian(c, ThetaVector(c, th));
  CHECK((jac - fd_jacobian(c, th)).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("sigma_jacobian matches finite differences at 20 random points per model") {
  std::mt19937_64 rng(2024);
  for (const auto& spec : {model1_spec(), model2_spec(), model3_spec()}) {
    for (int t = 0; t < 20; ++t) {
      const Vector th = random_theta(spec, rng);
      const Matrix an = sigma_jacobian(spec, ThetaVector(spec, th));
      const Matrix fd = fd_jacobian(spec, th);
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      CHECK((an - fd).cwiseAbs().maxCoeff() / scale <= 1e-6);
    }
  }
}

TEST_CASE("identifiability ranks") {
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  CHECK(identifiability_rank(s1, ThetaVector(s1, model1_truth())) == 32);
  CHECK(identifiability_rank(s2, ThetaVector(s2, model2_truth())) == 33);

  const CheckedSpec sc = scalar_spec();
  const Matrix jac = sigma_jacobian(sc, ThetaVector(sc, Vector::Constant(1, 0.7)));
  REQUIRE(jac.rows() == 1);
  REQUIRE(jac.cols() == 1);
  CHECK(jac(0, 0) == 1.0);
  CHECK(identifiability_rank(sc, ThetaVector(sc, Vector::Constant(1, 0.7))) == 1);
}

TEST_CASE("a loading multiplied by a zero factor loses rank") {
  const auto s1 = model1_spec();
  Vector th = model1_truth();
  th(14) = 1e-300;  // sigma_xi ~ 0 leaves the loadings on xi unidentified
  CHECK(identifiability_rank(s1, ThetaVector(s1, th)) < 32);
}

TEST_CASE("check_nesting") {
  const auto s1 = model1_spec();
  const auto s2 = model2_spec();
  const auto s3 = model3_spec();
  CHECK(check_nesting(s1, s2, model1_in_model2(), 20, 5));

  SUBCASE("padding by a parameter that is always multiplied by zero") {
    StructuralSpec base = all_fixed_spec(2, 2);
    base.lambda1(1, 0) = Cell::free(0);
    const CheckedSpec small = validate_spec(base);
    base.sigma_xi(0, 0) = Cell::fixed(1.0);
    base.gamma(0, 0) = Cell::free(1);
    base.lambda2(0, 0) = Cell::fixed(0.0);
    base.lambda2(1, 0) = Cell::fixed(0.0);
    const CheckedSpec padded = validate_spec(base);
    const std::vector<std::size_t> map = {0};
    // c = 0 is not required: the padded coordinate never matters.
    Vector c = Vector::Zero(2);
    c(1) = 0.37;
    CHECK(check_nesting(small, padded, coordinate_embedding(map, 2, c), 10, 1));
  }

  SUBCASE("model1 is not nested in model3") {
    std::vector<std::size_t> map(31);
    for (std::size_t k = 0; k < 31; ++k) map[k] = k;
    // q1 > q3, so the relation cannot hold.
    NestingEmbedding emb{Matrix::Zero(31, 32), Vector::Zero(31)};
    for (std::size_t k = 0; k < 31; ++k) emb.f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
    CHECK_FALSE(check_nesting(s1, s3, emb, 5, 1));
  }

  SUBCASE("model3 is not nested in model1 with the identity-like embedding") {
    std::vector<std::size_t> map(31);
    for (std::size_t k = 0; k < 31; ++k) map[k] = k;
    CHECK_FALSE(check_nesting(s3, s1, coordinate_embedding(map, 32, Vector::Zero(32)), 5, 1));
  }

  SUBCASE("non-orthonormal embedding") {
    NestingEmbedding emb = model1_in_model2();
    emb.f(0, 0) = 2.0;
    try {
      std::ignore = check_nesting(s1, s2, emb, 5, 1);
      FAIL("expected NonOrthonormalF");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NonOrthonormalF);
    }
  }
}

TEST_CASE("random_theta respects positivity") {
  std::mt19937_64 rng(3);
  const auto s = model2_spec();
  for (int t = 0; t < 50; ++t) CHECK(ThetaVector::admissible(s, random_theta(s, rng)));
}

TEST_CASE("vech order") {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  Vector v = vech(m);
  Vector want(6);
  want << 1, 2, 3, 4, 5, 6;
  CHECK(v == want);
}
