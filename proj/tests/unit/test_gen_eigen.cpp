#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracle.hpp"
#include "specpert/error.hpp"
#include "specpert/gen_eigen.hpp"

using namespace specpert;
using std::numbers::pi;

namespace {

const AsymptoticLaw kLaw{pi, -pi / 2, 2, 1};

SpectralModel two_by_two() {
  Vector v(2);
  v << 1, 0.25;
  return SpectralModel(v, Provenance::Diagonal);
}

}  // namespace

TEST_SUITE("gen_eigen") {

TEST_CASE("hmetric") {
  const auto b = build_rank_one_perturbation(0.2, 1.0, 3, RankOneMode::Theorem1);
  const HMetric h(b);
  Vector x(3);
  x << 1, -2, 0.5;
  CHECK(h.norm(x) * h.norm(x) == doctest::Approx(x.dot(b.gram().matrix() * x)).epsilon(1e-14));
  CHECK(h.inner(x, x) > 0);
  CHECK((b.gram().matrix() * h.solve(x) - x).norm() <= 1e-14);
  const HMetric half(b, 0.5);
  CHECK(half.gram()(0, 0) == doctest::Approx(1.1));
}

TEST_CASE("zero perturbation returns the base spectrum") {
  const auto k = build_diagonal_K(kLaw, 300);
  const auto s = solve_generalized(k, PerturbationMatrix::zero(300));
  CHECK(s.epsilon == 1.0);
  CHECK(((s.values - k.lambdas()).array().abs() / k.lambdas().array()).maxCoeff() <= 1e-12);
}

TEST_CASE("commuting diagonal perturbation") {
  Vector d(2);
  d << 0.1, -0.1;
  const auto s = solve_generalized(two_by_two(), PerturbationMatrix(SymMatrix::diagonal(d), "diag"));
  CHECK(s.values(0) == doctest::Approx(1 / 1.1).epsilon(1e-14));
  CHECK(s.values(1) == doctest::Approx(0.25 / 0.9).epsilon(1e-14));
}

TEST_CASE("rank-one solve against the square-root reduction") {
  const auto k = build_diagonal_K(kLaw, 200);
  const auto b = build_rank_one_perturbation(0.1, 1.0, 200, RankOneMode::Theorem1);
  const auto s = solve_generalized(k, b);
  const auto ref = oracle::generalized_sqrt_reduction(k.lambdas(), b.gram().matrix());
  for (Index i = 0; i < 200; ++i) CHECK(std::abs(s.values(i) / ref[i] - 1) <= 1e-10);
  // frozen square-root reduction values
  CHECK(s.values(0) == doctest::Approx(0.37059225725214134).epsilon(1e-10));
  CHECK(s.values(9) == doctest::Approx(0.0011215536021533645).epsilon(1e-10));
  CHECK(s.values(99) == doctest::Approx(1.02341021628709e-05).epsilon(1e-10));
  CHECK(s.values(199) == doctest::Approx(2.545736017429996e-06).epsilon(1e-10));

  // eigenvector invariants
  const SymMatrix g = b.gram();
  for (Index j = 0; j < 200; j += 17) {
    const Vector v = s.vectors.col(j);
    const Vector r = k.lambdas().cwiseProduct(v) - s.values(j) * (g.matrix() * v);
    CHECK(r.norm() <= 1e-10 * k.lambda(1));
  }
  CHECK((s.vectors.transpose() * g.matrix() * s.vectors - Matrix::Identity(200, 200)).cwiseAbs().maxCoeff() <=
        1e-10);
  CHECK((s.values.array() > 0).all());
}

TEST_CASE("solve options and embedding") {
  const auto k = build_diagonal_K(kLaw, 50);
  const auto b = build_random_sign_perturbation(0.05, 1.0, 50, 3);
  const auto full = solve_generalized(k, b);
  const auto part = solve_generalized(k, b, {.compute_vectors = false, .ranks = RankRange{10, 19}});
  REQUIRE(part.values.size() == 10);
  for (Index i = 0; i < 10; ++i) CHECK(part.values(i) == doctest::Approx(full.values(10 + i)).epsilon(1e-12));
  CHECK(part.vectors.size() == 0);
  const Vector e = full.embedded(3, 50);
  CHECK(e.size() == 50);
  CHECK(e == full.vectors.col(3));
}

TEST_CASE("dimension mismatch") {
  const auto k = build_diagonal_K(kLaw, 5);
  CHECK_THROWS_AS(solve_generalized(k, PerturbationMatrix::zero(4)), Error);
}

TEST_CASE("projected problems") {
  const auto k = build_diagonal_K(kLaw, 120);
  const auto b = build_rank_one_perturbation(0.1, 1.0, 120, RankOneMode::Theorem1);
  const auto full = solve_generalized(k, b);

  const auto whole = projected_solve(k, b, Window::head(120));
  CHECK(((whole.values - full.values).array().abs() / full.values.array()).maxCoeff() <= 1e-12);

  const auto one = projected_solve(k, b, Window::head(1));
  REQUIRE(one.values.size() == 1);
  CHECK(one.values(0) == doctest::Approx(k.lambda(1) / (1 + b.matrix()(0, 0))).epsilon(1e-14));

  for (Index n : {1, 7, 40, 119}) {
    const auto tail = projected_solve(k, b, Window::tail(n));
    CHECK(tail.offset == n - 1);
    CHECK(tail.values.size() == 120 - n + 1);
    CHECK(tail.values(0) >= full.values(n - 1) * (1 - 1e-12));
    const auto head = projected_solve(k, b, Window::head(n));
    CHECK(head.offset == 0);
    CHECK(full.values(n - 1) >= head.values(n - 1) * (1 - 1e-12));
    const Vector emb = tail.embedded(0, 120);
    CHECK(emb.head(n - 1).isZero(0));
  }
  CHECK_THROWS_AS(projected_solve(k, b, Window::tail(121)), Error);
  CHECK_THROWS_AS(projected_solve(k, b, Window::head(0)), Error);
}

TEST_CASE("tail projection bound for negative perturbations") {
  const auto k = build_diagonal_K(kLaw, 100);
  const auto b = build_rank_one_perturbation(-0.1, 1.0, 100, RankOneMode::Theorem1);
  const auto full = solve_generalized(k, b);
  for (Index n = 1; n <= 100; n += 11) {
    const auto tail = projected_solve(k, b, Window::tail(n));
    for (Index j = 0; j < tail.values.size(); ++j) {
      CHECK(full.values(n - 1 + j) <= tail.values(j) * (1 + 1e-12));
    }
  }
}

TEST_CASE("monotone sandwich for sign-definite perturbations") {
  const auto k = build_diagonal_K(kLaw, 200);
  const auto plus = solve_generalized(k, build_rank_one_perturbation(0.1, 1.0, 200, RankOneMode::Lemma1));
  const auto minus = solve_generalized(k, build_rank_one_perturbation(-0.1, 1.0, 200, RankOneMode::Lemma1));
  for (Index n = 1; n <= 200; ++n) {
    CHECK(plus.values(n - 1) <= k.lambda(n) * (1 + 1e-12));
    CHECK(minus.values(n - 1) >= k.lambda(n) * (1 - 1e-12));
  }
}

TEST_CASE("min-max bracket under the sign split") {
  const auto k = build_diagonal_K(kLaw, 150);
  const auto b = build_random_sign_perturbation(0.05, 1.0, 150, 7);
  const auto [bp, bm] = split_sign(b);
  const auto mid = solve_generalized(k, b);
  const auto lo = solve_generalized(k, bp);
  const auto hi = solve_generalized(k, bm);
  for (Index i = 0; i < 150; ++i) {
    CHECK(lo.values(i) <= mid.values(i) * (1 + 1e-10));
    CHECK(mid.values(i) <= hi.values(i) * (1 + 1e-10));
  }
}

TEST_CASE("homotopy endpoints and constant paths") {
  const auto k = build_diagonal_K(kLaw, 60);
  const auto b = build_rank_one_perturbation(0.1, 1.0, 60, RankOneMode::Theorem1);
  const auto two = homotopy_track(k, b, 2);
  REQUIRE(two.steps.size() == 2);
  CHECK(two.steps[0].epsilon == 0.0);
  CHECK(two.steps[1].epsilon == 1.0);
  CHECK(((two.steps[0].values - k.lambdas()).array().abs() / k.lambdas().array()).maxCoeff() <= 1e-12);
  const auto full = solve_generalized(k, b, {.compute_vectors = false});
  CHECK(((two.steps[1].values - full.values).array().abs() / full.values.array()).maxCoeff() <= 1e-12);

  const auto flat = homotopy_track(k, PerturbationMatrix::zero(60), 5);
  CHECK(flat.steps.size() == 5);
  CHECK((flat.max_jump.array() <= 1e-12 * k.lambdas().array()).all());
  CHECK_FALSE(flat.crossing_detected);
  CHECK_THROWS_AS(homotopy_track(k, b, 1), Error);
}

TEST_CASE("homotopy jumps follow the first-order bound") {
  const Index n = 100;
  const auto k = build_diagonal_K(kLaw, n);
  const auto b = build_rank_one_perturbation(0.1, 1.0, n, RankOneMode::Theorem1);
  const auto track = homotopy_track(k, b, 11);
  const double norm = spectral_norm(b.entries());
  REQUIRE(norm < 1.0);
  for (Index i = 0; i < n; ++i) {
    CHECK(track.max_jump(i) <= norm / (1 - norm) * k.lambda(i + 1) * 0.1 * 1.1);
    // decreasing along eps for B >= 0
    for (std::size_t s = 1; s < track.steps.size(); ++s) {
      CHECK(track.steps[s].values(i) <= track.steps[s - 1].values(i) * (1 + 1e-12));
    }
  }
  CHECK(track.steps[5].epsilon == doctest::Approx(0.5));
}

TEST_CASE("homotopy paths increase for negative perturbations") {
  const auto k = build_diagonal_K(kLaw, 80);
  const auto b = build_rank_one_perturbation(-0.2, 1.0, 80, RankOneMode::Lemma1);
  const auto track = homotopy_track(k, b, 6);
  for (std::size_t s = 1; s < track.steps.size(); ++s) {
    CHECK((track.steps[s].values.array() >= track.steps[s - 1].values.array() * (1 - 1e-12)).all());
  }
}

TEST_CASE("homotopy flags crossing paths") {
  Vector v(2);
  v << 1, 0.5;
  const SpectralModel k(v, Provenance::Diagonal);
  Vector d(2);
  d << 1, 0;
  const auto track = homotopy_track(k, PerturbationMatrix(SymMatrix::diagonal(d), "diag"), 3);
  CHECK(track.crossing_detected);
  CHECK(track.crossing_index == 1);
}

}  // TEST_SUITE
