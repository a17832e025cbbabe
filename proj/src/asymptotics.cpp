#include "specpert/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "specpert/error.hpp"

namespace specpert {

FitWindow default_window(Index n) {
  return {std::max<Index>(10, n / 40), std::min<Index>(n / 2, n - 10)};
}

namespace {

constexpr Index kMinPoints = 10;
constexpr double kExactThreshold = 1e-10;

// Residual sum of squares of mu ~ alpha r + beta + gamma r^-delta.
double profile_rss(const Vector& r, const Vector& mu, double delta) {
  const Index m = r.size();
  Matrix design(m, 3);
  design.col(0) = r;
  design.col(1).setOnes();
  for (Index i = 0; i < m; ++i) design(i, 2) = std::pow(r(i), -delta);
  Vector scale(3);
  for (Index j = 0; j < 3; ++j) {
    scale(j) = design.col(j).norm();
    if (scale(j) > 0.0) design.col(j) /= scale(j);
  }
  const Vector coef = design.colPivHouseholderQr().solve(mu);
  return (design * coef - mu).squaredNorm();
}

// Remainder exponent by separable least squares over delta: coarse grid
// then golden-section refinement around the best grid point.
double estimate_remainder_exponent(const Vector& r, const Vector& mu) {
  constexpr double kLo = 0.05;
  constexpr double kHi = 8.0;
  constexpr double kStep = 0.05;
  double best = kLo;
  double best_rss = profile_rss(r, mu, kLo);
  for (double d = kLo + kStep; d <= kHi + 1e-12; d += kStep) {
    const double rss = profile_rss(r, mu, d);
    if (rss < best_rss) {
      best_rss = rss;
      best = d;
    }
  }
  double lo = std::max(kLo, best - kStep);
  double hi = std::min(kHi, best + kStep);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo);
  double x2 = lo + phi * (hi - lo);
  double f1 = profile_rss(r, mu, x1);
  double f2 = profile_rss(r, mu, x2);
  for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = profile_rss(r, mu, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = profile_rss(r, mu, x2);
    }
  }
  return 0.5 * (lo + hi);
}

FitResult fit_ranks(std::span<const double> values, double exponent, FitWindow window,
                    std::vector<Index> ranks) {
  if (!(exponent > 0.0)) throw Error(ErrorCode::InvalidArgument, "exponent must be positive");
  const auto count = static_cast<Index>(ranks.size());
  if (count < kMinPoints) {
    throw Error(ErrorCode::WindowTooSmall, "fit window holds " + std::to_string(count) +
                                               " points, at least 10 are required");
  }
  Vector r(count);
  Vector mu(count);
  for (Index i = 0; i < count; ++i) {
    const Index rank = ranks[static_cast<std::size_t>(i)];
    const double v = values[static_cast<std::size_t>(rank - 1)];
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::NonpositiveValue, "value at rank " + std::to_string(rank) +
                                                   " is not positive");
    }
    r(i) = static_cast<double>(rank);
    mu(i) = std::pow(v, -1.0 / exponent);
  }

  // Centered ordinary least squares.
  const double r_mean = r.mean();
  const double mu_mean = mu.mean();
  const Vector rc = r.array() - r_mean;
  const double a_hat = rc.dot(mu.array().matrix() - Vector::Constant(count, mu_mean)) / rc.squaredNorm();
  const double b_hat = mu_mean - a_hat * r_mean;

  FitResult fit;
  fit.a_hat = a_hat;
  fit.b_hat = b_hat;
  fit.exponent = exponent;
  fit.window = window;
  fit.ranks = std::move(ranks);
  fit.residuals = mu - (a_hat * r + Vector::Constant(count, b_hat));
  fit.rmse = std::sqrt(fit.residuals.squaredNorm() / static_cast<double>(count));

  // Tail running maximum E_n = max_{m >= n} |residual_m|.
  Vector envelope(count);
  double running = 0.0;
  for (Index i = count - 1; i >= 0; --i) {
    running = std::max(running, std::abs(fit.residuals(i)));
    envelope(i) = running;
  }
  const double scale = std::max(1.0, mu.cwiseAbs().maxCoeff());
  if (envelope(0) <= kExactThreshold * scale) {
    fit.exact = true;
    fit.delta_hat = std::numeric_limits<double>::infinity();
    fit.c_hat = envelope(0);
    return fit;
  }
  fit.delta_hat = estimate_remainder_exponent(r, mu);
  double c_hat = 0.0;
  for (Index i = 0; i < count; ++i) c_hat = std::max(c_hat, envelope(i) * std::pow(r(i), fit.delta_hat));
  fit.c_hat = c_hat;
  return fit;
}

void check_window(std::span<const double> values, FitWindow window) {
  const auto n = static_cast<Index>(values.size());
  if (window.first < 2 || window.last > n || window.last < window.first) {
    throw Error(ErrorCode::InvalidArgument, "fit window [" + std::to_string(window.first) + ", " +
                                                std::to_string(window.last) + "] invalid for " +
                                                std::to_string(n) + " values");
  }
}

}  // namespace

FitResult fit_two_term(std::span<const double> values, double exponent, FitWindow window) {
  check_window(values, window);
  std::vector<Index> ranks;
  for (Index r = window.first; r <= window.last; ++r) ranks.push_back(r);
  return fit_ranks(values, exponent, window, std::move(ranks));
}

TwoSequenceFit fit_two_sequence(std::span<const double> values, double exponent, FitWindow window) {
  check_window(values, window);
  std::vector<Index> odd;
  std::vector<Index> even;
  for (Index r = window.first; r <= window.last; ++r) (r % 2 == 1 ? odd : even).push_back(r);
  TwoSequenceFit out{fit_ranks(values, exponent, window, std::move(odd)),
                     fit_ranks(values, exponent, window, std::move(even)), 0.0};
  out.slope_mismatch = std::abs(out.odd.a_hat - out.even.a_hat);
  return out;
}

double estimate_exponent(std::span<const double> values) {
  const auto n = static_cast<Index>(values.size());
  if (n < 20) throw Error(ErrorCode::InvalidArgument, "exponent estimate needs at least 20 values");
  const Index first = n / 2 + 1;
  const Index count = n - first + 1;
  Vector x(count);
  Vector y(count);
  for (Index i = 0; i < count; ++i) {
    const double v = values[static_cast<std::size_t>(first + i - 1)];
    if (!(v > 0.0)) throw Error(ErrorCode::NonpositiveValue, "nonpositive value in exponent estimate");
    x(i) = std::log(static_cast<double>(first + i));
    y(i) = std::log(v);
  }
  const Vector xc = x.array() - x.mean();
  const double slope = xc.dot(y.array().matrix() - Vector::Constant(count, y.mean())) / xc.squaredNorm();
  return -slope;
}

std::pair<double, double> default_tolerances(const FitResult& base) {
  return {5e-3 * std::abs(base.a_hat), 5e-2 * std::max(1.0, std::abs(base.b_hat))};
}

ComparisonVerdict compare_fits(const FitResult& base, const FitResult& perturbed, double tol_a,
                               double tol_b) {
  if (base.exponent != perturbed.exponent) {
    throw Error(ErrorCode::IncompatibleFits, "fits use different exponents");
  }
  ComparisonVerdict v;
  v.delta_a = perturbed.a_hat - base.a_hat;
  v.delta_b = perturbed.b_hat - base.b_hat;
  v.tol_a = tol_a;
  v.tol_b = tol_b;
  v.preserved = std::abs(v.delta_a) <= tol_a && std::abs(v.delta_b) <= tol_b;
  return v;
}

}  // namespace specpert
