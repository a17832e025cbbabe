#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oracle.hpp"
#include "specpert/asymptotics.hpp"
#include "specpert/error.hpp"
#include "specpert/gen_eigen.hpp"

using namespace specpert;
using std::numbers::pi;

namespace {

std::vector<double> values_of(const SpectralModel& k) { return {k.lambdas().data(), k.lambdas().data() + k.dim()}; }

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

TEST_SUITE("asymptotics") {

TEST_CASE("default window") {
  CHECK(default_window(1000).first == 25);
  CHECK(default_window(1000).last == 500);
  CHECK(default_window(100).first == 10);
  CHECK(default_window(100).last == 50);
  CHECK(default_window(30).last == 15);
}

TEST_CASE("exact law recovers its parameters") {
  const auto v = values_of(build_diagonal_K({pi, 0, 2, kInf}, 600));
  const auto f = fit_two_term(v, 2.0, {10, 500});
  CHECK(std::abs(f.a_hat - pi) <= 1e-10);
  CHECK(std::abs(f.b_hat) <= 1e-8);
  CHECK(f.rmse <= 1e-10);
  CHECK(f.exact);
  CHECK(std::isinf(f.delta_hat));
  CHECK(f.exponent == 2.0);
  CHECK(f.residuals.size() == 491);
  CHECK(f.ranks.size() == 491);
  CHECK(f.ranks.front() == 10);
  CHECK(f.window.last == 500);
}

TEST_CASE("harmonic sequence") {
  std::vector<double> v;
  for (int n = 1; n <= 100; ++n) v.push_back(1.0 / n);
  const auto f = fit_two_term(v, 1.0, {2, 100});
  CHECK(f.a_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(f.b_hat) <= 1e-10);
  CHECK(f.exact);
}

TEST_CASE("wobbled law") {
  const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, 1}, 2000, DeterministicWobble{0.5}));
  const auto f = fit_two_term(v, 2.0, {50, 1000});
  CHECK(std::abs(f.a_hat - pi) <= 1e-3);
  CHECK(std::abs(f.b_hat + pi / 2) <= 2e-2);
  CHECK(std::abs(f.delta_hat - 1.0) <= 0.2);
  CHECK_FALSE(f.exact);
  // long double least squares on the same values
  CHECK(f.a_hat == doctest::Approx(3.1415882775815841).epsilon(1e-11));
  CHECK(f.b_hat == doctest::Approx(-1.5669183412431069).epsilon(1e-9));

  const auto g = fit_two_term(v, 2.0, {100, 1500});
  CHECK(std::abs(g.a_hat - pi) <= 1e-3);
  CHECK(std::abs(g.b_hat + pi / 2) <= 2e-2);
  CHECK(std::abs(g.delta_hat - 1.0) <= 0.2);
  CHECK(std::abs(g.a_hat - f.a_hat) <= 1e-3);
  CHECK(std::abs(g.b_hat - f.b_hat) <= 2e-2);
}

TEST_CASE("remainder exponent for other wobble decays") {
  for (double delta : {0.5, 2.0}) {
    const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, delta}, 2000, DeterministicWobble{0.5}));
    const auto f = fit_two_term(v, 2.0, {50, 1000});
    CAPTURE(delta);
    CHECK(std::abs(f.delta_hat - delta) <= 0.2);
  }
}

TEST_CASE("residual certificate") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, 1}, 1500, RandomWobble{0.4, seed}));
    const auto f = fit_two_term(v, 2.0, {40, 700});
    for (std::size_t i = 0; i < f.ranks.size(); ++i) {
      const double n = static_cast<double>(f.ranks[i]);
      const double mu = std::pow(v[f.ranks[i] - 1], -0.5);
      CHECK(std::abs(mu - (f.a_hat * n + f.b_hat)) <= f.c_hat * std::pow(n, -f.delta_hat) * (1 + 1e-12));
      CHECK(f.residuals(static_cast<Index>(i)) == doctest::Approx(mu - (f.a_hat * n + f.b_hat)).epsilon(1e-9));
    }
  }
}

TEST_CASE("window stability on exact laws") {
  const auto v = values_of(build_diagonal_K({2.0, 0.7, 1.5, kInf}, 1000));
  const auto a = fit_two_term(v, 1.5, {10, 200});
  const auto b = fit_two_term(v, 1.5, {300, 990});
  CHECK(std::abs(a.a_hat - b.a_hat) <= 1e-8);
  CHECK(std::abs(a.b_hat - b.b_hat) <= 1e-8);
}

TEST_CASE("scale equivariance") {
  const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, 1}, 800, DeterministicWobble{0.3}));
  const double s = 7.5;
  std::vector<double> w;
  for (double x : v) w.push_back(s * x);
  const auto f = fit_two_term(v, 2.0, {20, 400});
  const auto g = fit_two_term(w, 2.0, {20, 400});
  const double factor = std::pow(s, -0.5);
  CHECK(g.a_hat == doctest::Approx(factor * f.a_hat).epsilon(1e-12));
  CHECK(g.b_hat == doctest::Approx(factor * f.b_hat).epsilon(1e-10));

  const auto pv = values_of(build_diagonal_K({pi, -pi / 2 + 0.01, 2, 1}, 800, DeterministicWobble{0.3}));
  std::vector<double> pw;
  for (double x : pv) pw.push_back(s * x);
  const auto fp = fit_two_term(pv, 2.0, {20, 400});
  const auto gp = fit_two_term(pw, 2.0, {20, 400});
  const auto t1 = default_tolerances(f);
  const auto t2 = default_tolerances(g);
  CHECK(compare_fits(f, fp, t1.first, t1.second).preserved ==
        compare_fits(g, gp, t2.first * factor, t2.second * factor).preserved);
}

TEST_CASE("fit errors") {
  const auto v = values_of(build_diagonal_K({pi, 0, 2, kInf}, 100));
  CHECK(code_of([&] { fit_two_term(v, 2.0, {10, 18}); }) == ErrorCode::WindowTooSmall);
  std::vector<double> bad = v;
  bad[40] = -1.0;
  CHECK(code_of([&] { fit_two_term(bad, 2.0, {10, 60}); }) == ErrorCode::NonpositiveValue);
  CHECK(code_of([&] { fit_two_term(v, 2.0, {1, 60}); }) != ErrorCode::Io);
  CHECK(code_of([&] { fit_two_term(v, 2.0, {10, 101}); }) != ErrorCode::Io);
  CHECK(code_of([&] { fit_two_term(v, 0.0, {10, 60}); }) != ErrorCode::Io);
}

TEST_CASE("exponent estimate") {
  CHECK(estimate_exponent(values_of(build_diagonal_K({pi, 0, 2, kInf}, 1000))) ==
        doctest::Approx(2.0).epsilon(0.05));
  const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, kInf}, 1000));
  const double e = estimate_exponent(v);
  CHECK(e >= 1.9);
  CHECK(e <= 2.1);
  std::vector<double> h;
  for (int n = 1; n <= 200; ++n) h.push_back(1.0 / n);
  CHECK(std::abs(estimate_exponent(h) - 1.0) <= 0.05);
  const auto two = values_of(build_two_sequence_K({pi, -pi / 2, 2, 1}, {pi, 0, 2, 1}, 1000));
  const double t = estimate_exponent(two);
  CHECK(t >= 1.9);
  CHECK(t <= 2.1);
  for (Index n : {500, 1000, 2000}) {
    const double est = estimate_exponent(values_of(build_diagonal_K({1.3, 0.4, 1.7, kInf}, n)));
    CHECK(std::abs(est / 1.7 - 1) <= 0.05);
  }
  CHECK(code_of([] { estimate_exponent(std::vector<double>(10, 1.0)); }) != ErrorCode::Io);
  std::vector<double> neg(30, 1.0);
  neg[25] = 0.0;
  CHECK(code_of([&] { estimate_exponent(neg); }) == ErrorCode::NonpositiveValue);
}

TEST_CASE("two-sequence fit on an exact law") {
  const auto v = values_of(build_two_sequence_K({1, 0, 1, kInf}, {1, 0.5, 1, kInf}, 400));
  const auto f = fit_two_sequence(v, 1.0, {20, 300});
  CHECK(std::abs(f.odd.a_hat - 1.0) <= 1e-8);
  CHECK(std::abs(f.even.a_hat - 1.0) <= 1e-8);
  CHECK(std::abs(f.odd.b_hat) <= 1e-8);
  CHECK(std::abs(f.even.b_hat - 0.5) <= 1e-8);
  CHECK(f.slope_mismatch <= 1e-8);
  for (Index r : f.odd.ranks) CHECK(r % 2 == 1);
  for (Index r : f.even.ranks) CHECK(r % 2 == 0);
}

TEST_CASE("two-sequence fit with equal intercepts matches the single fit") {
  const auto v = values_of(build_two_sequence_K({pi, 0.2, 2, kInf}, {pi, 0.2, 2, kInf}, 400));
  const auto two = fit_two_sequence(v, 2.0, {20, 300});
  const auto one = fit_two_term(v, 2.0, {20, 300});
  CHECK(two.odd.a_hat == doctest::Approx(one.a_hat).epsilon(1e-10));
  CHECK(two.even.b_hat == doctest::Approx(one.b_hat).epsilon(1e-8));
  CHECK(two.odd.b_hat == doctest::Approx(one.b_hat).epsilon(1e-8));
}

TEST_CASE("two-sequence intercepts survive a perturbation") {
  const auto k = build_two_sequence_K({pi, -pi / 2, 2, 1}, {pi, 0, 2, 1}, 1000);
  const auto b = build_rank_one_perturbation(0.05, 1.0, 1000, RankOneMode::Theorem1);
  const auto s = solve_generalized(k, b, {.compute_vectors = false});
  const std::vector<double> pv(s.values.data(), s.values.data() + s.values.size());
  const auto base = fit_two_sequence(values_of(k), 2.0, {50, 500});
  const auto pert = fit_two_sequence(pv, 2.0, {50, 500});
  for (const auto& [bf, pf] : {std::pair{base.odd, pert.odd}, std::pair{base.even, pert.even}}) {
    const auto [ta, tb] = default_tolerances(bf);
    CHECK(compare_fits(bf, pf, ta, tb).preserved);
    CHECK(std::abs(pf.a_hat - pi) <= 1e-3);
  }
  CHECK(std::abs(pert.odd.b_hat + pi / 2) <= 2e-2);
  CHECK(std::abs(pert.even.b_hat) <= 2e-2);
}

TEST_CASE("comparison verdicts") {
  FitResult base;
  base.a_hat = pi;
  base.b_hat = -pi / 2;
  base.exponent = 2.0;
  const auto same = compare_fits(base, base, 1e-3, 1e-2);
  CHECK(same.preserved);
  CHECK(same.delta_a == 0.0);
  CHECK(same.delta_b == 0.0);

  FitResult moved = base;
  moved.a_hat += 2e-4;
  moved.b_hat += 5e-3;
  const auto near = compare_fits(base, moved, 1e-3, 1e-2);
  CHECK(near.preserved);
  CHECK(near.delta_a == doctest::Approx(2e-4));
  CHECK(near.tol_b == 1e-2);

  moved.b_hat = base.b_hat + 0.02;
  CHECK_FALSE(compare_fits(base, moved, 1e-3, 1e-2).preserved);

  FitResult other = base;
  other.exponent = 1.0;
  CHECK(code_of([&] { compare_fits(base, other, 1, 1); }) == ErrorCode::IncompatibleFits);

  const auto [ta, tb] = default_tolerances(base);
  CHECK(ta == doctest::Approx(5e-3 * pi));
  CHECK(tb == doctest::Approx(5e-2 * pi / 2));
  base.b_hat = 0.3;
  CHECK(default_tolerances(base).second == doctest::Approx(5e-2));
}

TEST_CASE("shifted intercept is detected") {
  const auto v = values_of(build_diagonal_K({pi, -pi / 2, 2, kInf}, 1000));
  const auto w = values_of(build_diagonal_K({pi, 0.3 - pi / 2, 2, kInf}, 1000));
  const auto f = fit_two_term(v, 2.0, {25, 500});
  const auto g = fit_two_term(w, 2.0, {25, 500});
  const auto verdict = compare_fits(f, g, 1e-3, 1e-2);
  CHECK(verdict.delta_b == doctest::Approx(0.3).epsilon(1e-8));
  CHECK(std::abs(verdict.delta_a) <= 1e-10);
  CHECK_FALSE(verdict.preserved);
}

}  // TEST_SUITE
