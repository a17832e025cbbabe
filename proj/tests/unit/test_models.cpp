#include <doctest.h>

#include <cmath>
#include <numbers>

#include "specpert/error.hpp"
#include "specpert/models.hpp"

using namespace specpert;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("law validation") {
  CHECK_NOTHROW(AsymptoticLaw{pi, -pi / 2, 2, 1}.validate());
  CHECK(code_of([] { AsymptoticLaw{-1, 3, 1, 1}.validate(); }) == ErrorCode::InvalidLaw);
  CHECK(code_of([] { AsymptoticLaw{1, -1, 1, 1}.validate(); }) == ErrorCode::InvalidLaw);
  CHECK(code_of([] { AsymptoticLaw{1, 0, 0, 1}.validate(); }) == ErrorCode::InvalidLaw);
  CHECK(code_of([] { AsymptoticLaw{1, 0, 1, 0}.validate(); }) == ErrorCode::InvalidLaw);
}

TEST_CASE("exact law eigenvalues") {
  const auto k = build_diagonal_K({pi, 0, 2, kInf}, 3);
  CHECK(k.lambda(1) == doctest::Approx(1 / (pi * pi)).epsilon(1e-15));
  CHECK(k.lambda(2) == doctest::Approx(1 / (4 * pi * pi)).epsilon(1e-15));
  CHECK(k.lambda(3) == doctest::Approx(1 / (9 * pi * pi)).epsilon(1e-15));
  CHECK(k.provenance() == Provenance::Diagonal);

  const auto h = build_diagonal_K({1, 0, 1, kInf}, 2);
  CHECK(h.lambda(1) == 1.0);
  CHECK(h.lambda(2) == 0.5);
}

TEST_CASE("deterministic wobble matches the formula") {
  const auto k = build_diagonal_K({pi, -pi / 2, 2, 1}, 5, DeterministicWobble{0.1});
  // (pi n - pi/2 + 0.1/n)^-2, long double evaluation
  const double expected[] = {0.35822259561771908, 0.044091032673113753, 0.016074653935192427,
                             0.0082336337967315213, 0.0049893881750749273};
  for (Index n = 1; n <= 5; ++n) CHECK(k.lambda(n) == doctest::Approx(expected[n - 1]).epsilon(1e-14));
  CHECK(k.wobble_c() == 0.1);
}

TEST_CASE("wobble envelope and exactness without wobble") {
  const AsymptoticLaw law{pi, -pi / 2, 2, 1};
  const auto rnd = build_diagonal_K(law, 400, RandomWobble{0.3, 17});
  const auto clean = build_diagonal_K(law, 400);
  for (Index n = 1; n <= 400; ++n) {
    const double affine = law.affine(static_cast<double>(n));
    CHECK(std::abs(std::pow(rnd.lambda(n), -0.5) - affine) <= 0.3 / static_cast<double>(n) * (1 + 1e-9));
    CHECK(std::abs(std::pow(clean.lambda(n), -0.5) - affine) <= 1e-12 * affine);
  }
  const auto again = build_diagonal_K(law, 400, RandomWobble{0.3, 17});
  CHECK(again.lambdas() == rnd.lambdas());
}

TEST_CASE("diagonal model errors") {
  CHECK(code_of([] { build_diagonal_K({1, 0, 1, 1}, 5, DeterministicWobble{-1.5}); }) == ErrorCode::InvalidLaw);
  CHECK(code_of([] { build_diagonal_K({1, 0, 1, 1}, 50, DeterministicWobble{4.0}); }) ==
        ErrorCode::NotDecreasing);
  Vector v(3);
  v << 1, 2, 0.5;
  CHECK(code_of([&] { SpectralModel(v, Provenance::Diagonal); }) == ErrorCode::NotDecreasing);
}

TEST_CASE("two-sequence merge") {
  const auto k = build_two_sequence_K({1, 0, 1, kInf}, {1, 0.5, 1, kInf}, 4);
  CHECK(k.provenance() == Provenance::TwoSequence);
  CHECK(k.lambda(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k.lambda(2) == doctest::Approx(1 / 2.5).epsilon(1e-15));
  CHECK(k.lambda(3) == doctest::Approx(1 / 3.0).epsilon(1e-15));
  CHECK(k.lambda(4) == doctest::Approx(1 / 4.5).epsilon(1e-15));
}

TEST_CASE("two-sequence with equal intercepts is the single law") {
  const auto two = build_two_sequence_K({pi, 0.3, 2, kInf}, {pi, 0.3, 2, kInf}, 50);
  const auto one = build_diagonal_K({pi, 0.3, 2, kInf}, 50);
  for (Index n = 1; n <= 50; ++n) CHECK(two.lambda(n) == doctest::Approx(one.lambda(n)).epsilon(1e-14));
}

TEST_CASE("two-sequence interleaving on the pi law") {
  const auto k = build_two_sequence_K({pi, -pi / 2, 2, 1}, {pi, 0, 2, 1}, 200);
  REQUIRE(k.dim() == 200);
  for (Index r = 1; r < 200; ++r) CHECK(k.lambda(r) > k.lambda(r + 1));
  for (Index n = 1; n <= 100; ++n) {
    CHECK(k.lambda(2 * n - 1) == doctest::Approx(std::pow((2 * n - 1) * pi - pi / 2, -2.0)).epsilon(1e-14));
    CHECK(k.lambda(2 * n) == doctest::Approx(std::pow(2 * n * pi, -2.0)).epsilon(1e-14));
  }
}

TEST_CASE("two-sequence rejects broken interleaving and mismatched laws") {
  CHECK(code_of([] { build_two_sequence_K({1, 0, 1, kInf}, {1, 1.5, 1, kInf}, 6); }) ==
        ErrorCode::InterleaveViolation);
  CHECK(code_of([] { build_two_sequence_K({1, 0, 1, kInf}, {2, 0, 1, kInf}, 6); }) != ErrorCode::Io);
}

TEST_CASE("rank-one perturbations") {
  const auto zero = build_rank_one_perturbation(0.0, 1.0, 5, RankOneMode::Theorem1);
  CHECK(zero.matrix().isZero(0));

  const auto t = build_rank_one_perturbation(0.1, 1.0, 2, RankOneMode::Theorem1);
  CHECK(t.matrix()(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(t.matrix()(0, 1) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(t.matrix()(1, 0) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(t.matrix()(1, 1) == doctest::Approx(0.025).epsilon(1e-15));
}

TEST_CASE("theorem1 mode saturates the entrywise bound") {
  for (double sigma : {0.1, -0.05}) {
    const double delta = 0.7;
    const auto b = build_rank_one_perturbation(sigma, delta, 60, RankOneMode::Theorem1);
    for (Index n = 1; n <= 60; ++n) {
      for (Index m = 1; m <= 60; ++m) {
        const double scaled = std::abs(b.matrix()(n - 1, m - 1)) * std::pow(double(n * m), (1 + delta) / 2);
        CHECK(scaled == doctest::Approx(std::abs(sigma)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("lemma1 mode column norms") {
  const double sigma = 0.1;
  const auto b = build_rank_one_perturbation(sigma, 1.0, 100, RankOneMode::Lemma1);
  double unorm = 0;
  for (Index n = 1; n <= 100; ++n) unorm += std::pow(double(n), -4.0);
  unorm = std::sqrt(unorm);
  for (Index n = 1; n <= 100; ++n) {
    const double r = b.matrix().col(n - 1).norm();
    CHECK(r == doctest::Approx(sigma * unorm * std::pow(double(n), -2.0)).epsilon(1e-13));
    CHECK(r * std::pow(double(n), 2.0) <= sigma * unorm * (1 + 1e-13));
  }
}

TEST_CASE("perturbation positivity is validated") {
  CHECK(code_of([] { build_rank_one_perturbation(-2.0, 1.0, 10, RankOneMode::Lemma1); }) ==
        ErrorCode::NotPositiveDefinite);
  CHECK(code_of([] { build_rank_one_perturbation(-1.0, 1.0, 1, RankOneMode::Theorem1); }) ==
        ErrorCode::NotPositiveDefinite);
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = -1.5;
  CHECK(code_of([&] { PerturbationMatrix(SymMatrix(m), "bad"); }) == ErrorCode::NotPositiveDefinite);
}

TEST_CASE("random-sign perturbation") {
  CHECK(build_random_sign_perturbation(0.0, 1.0, 4, 3).matrix().isZero(0));
  const auto a = build_random_sign_perturbation(0.05, 0.5, 3, 11);
  const auto b = build_random_sign_perturbation(0.05, 0.5, 3, 11);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix() == a.matrix().transpose());
  const auto big = build_random_sign_perturbation(0.05, 1.0, 80, 42);
  int positive = 0;
  for (Index n = 0; n < 80; ++n) {
    for (Index m = 0; m < 80; ++m) {
      const double scaled = std::abs(big.matrix()(n, m)) * double((n + 1) * (m + 1));
      CHECK(scaled == doctest::Approx(0.05).epsilon(1e-13));
      if (m >= n && big.matrix()(n, m) > 0) ++positive;
    }
  }
  // both signs occur in roughly equal numbers
  CHECK(positive > 1400);
  CHECK(positive < 1840);
  CHECK(build_random_sign_perturbation(0.05, 1.0, 80, 43).matrix() != big.matrix());
}

TEST_CASE("split_sign") {
  const auto psd = build_rank_one_perturbation(0.1, 1.0, 20, RankOneMode::Theorem1);
  const auto [p1, m1] = split_sign(psd);
  CHECK(p1.matrix() == psd.matrix());
  CHECK(m1.matrix().isZero(0));

  Vector d(2);
  d << 0.1, -0.1;
  const auto [p2, m2] = split_sign(PerturbationMatrix(SymMatrix::diagonal(d), "diag"));
  CHECK(p2.matrix()(0, 0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(std::abs(p2.matrix()(1, 1)) <= 1e-16);
  CHECK(m2.matrix()(1, 1) == doctest::Approx(-0.1).epsilon(1e-14));
  CHECK(std::abs(m2.matrix()(0, 0)) <= 1e-16);
  CHECK(std::abs(p2.matrix()(0, 1)) <= 1e-16);

  const auto b = build_random_sign_perturbation(0.05, 1.0, 50, 42);
  const auto [plus, minus] = split_sign(b);
  CHECK((plus.matrix() + minus.matrix() - b.matrix()).norm() <= 1e-12 * b.entries().frobenius_norm());
  const double scale = spectral_norm(b.entries());
  const Vector pv = sym_eigen(plus.entries(), {.compute_vectors = false}).values;
  const Vector mv = sym_eigen(minus.entries(), {.compute_vectors = false}).values;
  CHECK(pv.minCoeff() >= -1e-14 * scale);
  CHECK(mv.maxCoeff() <= 1e-14 * scale);
  CHECK(definiteness(b) == Definiteness::Indefinite);
  CHECK(definiteness(plus) == Definiteness::PositiveSemidefinite);
  CHECK(definiteness(minus) == Definiteness::NegativeSemidefinite);
  CHECK(definiteness(PerturbationMatrix::zero(3)) == Definiteness::Zero);

  const auto [again_plus, again_minus] = split_sign(plus);
  CHECK((again_plus.matrix() - plus.matrix()).norm() <= 1e-13 * scale);
  CHECK(again_minus.matrix().norm() <= 1e-13 * scale);
}

TEST_CASE("gram matrix") {
  const auto b = build_rank_one_perturbation(0.2, 1.0, 3, RankOneMode::Theorem1);
  const SymMatrix g = b.gram(0.5);
  CHECK(g(0, 0) == doctest::Approx(1.1));
  CHECK(g(0, 1) == doctest::Approx(0.05));
}

}  // TEST_SUITE
