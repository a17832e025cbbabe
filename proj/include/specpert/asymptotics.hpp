#pragma once

// Two-term asymptotic fits lambda_n ~ (a n + b + O(n^-delta))^-B.

#include <span>
#include <utility>
#include <vector>

#include "specpert/linalg.hpp"

namespace specpert {

/// Inclusive 1-based rank window.
struct FitWindow {
  Index first = 10;
  Index last = 10;
};

/// nMin = max(10, N/40), nMax = min(N/2, N-10).
FitWindow default_window(Index n);

struct FitResult {
  double a_hat = 0.0;
  double b_hat = 0.0;
  double exponent = 1.0;
  /// Remainder exponent; +inf when `exact` is set.
  double delta_hat = 0.0;
  /// |mu_n - (a_hat n + b_hat)| <= c_hat n^-delta_hat on the window
  /// (c_hat bounds the residuals outright when `exact`).
  double c_hat = 0.0;
  FitWindow window;
  std::vector<Index> ranks;
  Vector residuals;
  double rmse = 0.0;
  /// Residual envelope below 1e-10 relative to the largest mu: the
  /// remainder exponent is not estimated.
  bool exact = false;
};

/// OLS line through (n, values_n^(-1/exponent)) over the window, followed
/// by the remainder estimate. Values are indexed by 1-based rank.
/// Throws WINDOW_TOO_SMALL (< 10 points) or NONPOSITIVE_VALUE.
FitResult fit_two_term(std::span<const double> values, double exponent, FitWindow window);

/// Negated slope of log values against log n over the upper half of the
/// index range. Requires at least 20 values.
double estimate_exponent(std::span<const double> values);

struct TwoSequenceFit {
  FitResult odd;   // ranks 2n-1: (a r + b1)
  FitResult even;  // ranks 2n:   (a r + b2)
  double slope_mismatch = 0.0;
};

/// Separate fits of the odd and even ranks inside the window, both against
/// the rank r itself so the intercepts are b1 and b2 directly.
TwoSequenceFit fit_two_sequence(std::span<const double> values, double exponent, FitWindow window);

struct ComparisonVerdict {
  double delta_a = 0.0;
  double delta_b = 0.0;
  bool preserved = false;
  double tol_a = 0.0;
  double tol_b = 0.0;
};

/// tolA = 5e-3 |a_hat|, tolB = 5e-2 max(1, |b_hat|) of the base fit.
std::pair<double, double> default_tolerances(const FitResult& base);

/// Throws INCOMPATIBLE_FITS if the exponents differ.
ComparisonVerdict compare_fits(const FitResult& base, const FitResult& perturbed, double tol_a,
                               double tol_b);

}  // namespace specpert
