#pragma once

// Numerical validators for the inequalities and identities behind the
// perturbation results. Each check returns a CheckReport; unspecified
// constants are fitted as the smallest admissible value over the tested
// indices and growth is detected by log-log regression slopes.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "specpert/gen_eigen.hpp"
#include "specpert/models.hpp"

namespace specpert {

struct IndexMargin {
  Index n = 0;
  double margin = 0.0;
};

struct CheckReport {
  std::string name;
  bool passed = true;
  std::map<std::string, double> constants;
  /// Per-index margins; >= -slack means satisfied.
  std::vector<IndexMargin> margins;
  /// Global criteria (regression slopes, onset indices) with the same sign
  /// convention as margins.
  std::map<std::string, double> criteria;
  Index worst_index = 0;  // 0 when there are no per-index margins
  double slack = 0.0;
  std::vector<std::string> flags;
  std::string notes;

  /// Sets worst_index and passed from margins, criteria and slack.
  void finalize();
  double worst_margin() const;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Column norms r_n of B; c = max r_n n^(1+delta); fails when the slope of
/// log r_n over the nonzero columns exceeds -(1+delta) + 0.1.
CheckReport check_lemma1_condition(const PerturbationMatrix& b, double delta);

/// c = max |b_nm| (nm)^((1+delta)/2); fails when the slope of
/// s_n = max_m |b_nm| m^((1+delta)/2) exceeds -(1+delta)/2 + 0.1.
CheckReport check_theorem1_condition(const PerturbationMatrix& b, double delta);

struct ResidualRadii {
  /// radius_n = |||Bh_n - lambda_n h_n||| / |||h_n||| in the H-metric.
  Vector radius;
  /// c1 lambda_n n^-(1+delta)
  Vector bound;
  double c1 = 0.0;
};

/// All residual radii with a single factorization of I + B.
/// c1 = c_lemma1 / lambda_min(I + B) makes bound >= radius rigorous.
ResidualRadii residual_radii(const SpectralModel& k, const PerturbationMatrix& b, double delta);

/// Single index (1-based) wrapper around residual_radii.
std::pair<double, double> residual_radius(const SpectralModel& k, const PerturbationMatrix& b, Index n,
                                          double delta);

/// Existence of a perturbed eigenvalue within each residual radius, the
/// fitted localization constant c2, the disjointness onset n0 and a growth
/// slope on the resolved indices.
CheckReport localization_check(const SpectralModel& base, const PerturbationMatrix& b,
                               const PerturbedSpectrum& perturbed, double delta);

/// lambda^+_n <= lambda_n <= lambda^-_n for the sign split of B.
CheckReport sandwich_check(const SpectralModel& k, const PerturbationMatrix& b);

/// Monotone paths (sign-definite B) and per-step jump bounds along the
/// eps-homotopy.
CheckReport homotopy_check(const SpectralModel& k, const PerturbationMatrix& b, Index steps = 11);

/// (x^T diag(lambda) x) / (x^T (I + B) x). Throws ZERO_VECTOR.
double rayleigh(const SpectralModel& k, const PerturbationMatrix& b, const Vector& x);

struct RayleighPoint {
  Window window;
  /// Full-length coordinates in the K-eigenbasis, unit Euclidean norm,
  /// x_n > 0.
  Vector x;
  double j = 0.0;
  /// |x_k|
  Vector a_coeffs;
};

/// Minimizer of the Rayleigh quotient over span(h_1..h_n).
RayleighPoint head_extremizer(const SpectralModel& k, const PerturbationMatrix& b, Index n);
/// Maximizer of the Rayleigh quotient over span(h_n..h_N).
RayleighPoint tail_extremizer(const SpectralModel& k, const PerturbationMatrix& b, Index n);

/// x_k = [J / (lambda_k - J)] (Bx)_k for k != n in the window; residuals
/// are relative to max_k |x_k|. Nearly singular k are skipped (DEGENERATE).
CheckReport stationarity_check(const SpectralModel& k, const PerturbationMatrix& b,
                               const RayleighPoint& point);

struct FrakC {
  double value = 0.0;
  double bound = 0.0;
  /// Fitted constant in lambda_n/|lambda_k - lambda_n| <=
  /// rho ((k/n)^B/|1 - (k/n)^B| + n^-min(1,B)).
  double rho = 0.0;
  /// bound = c_integral log(n) / n^min(1, delta, B)
  double c_integral = 0.0;
  double integral = 0.0;
  /// TAIL sum stopped at the model dimension (no law to extend it).
  bool truncated = false;
};

/// HEAD: sum_{k<n} c [lambda_n/(lambda_k - lambda_n)] k^-(1+delta).
/// TAIL: sum_{k>n} c [lambda_n/(lambda_n - lambda_k)] k^-(1+delta), summed
/// to k = 100 n through the model's law with an analytic remainder.
/// Throws DEGENERATE_GAP on a repeated eigenvalue.
FrakC frak_C(const SpectralModel& k, Index n, double delta, double c, Window::Side side);
FrakC frak_C(const AsymptoticLaw& law, Index n, double delta, double c, Window::Side side);

/// Verifies the coefficient chain for a head (B >= 0) or tail (B <= 0)
/// extremizer with c taken from check_theorem1_condition. Flags
/// FRAK_C_TOO_LARGE when the conclusion step is out of reach.
CheckReport coefficient_sum_check(const SpectralModel& k, const PerturbationMatrix& b,
                                  const RayleighPoint& point, double delta);

/// |J - lambda_n| / lambda_n <= c n^-(1+delta) on the head branch (B >= 0)
/// or the tail branch (B <= 0). Throws WRONG_SIGN for indefinite B.
CheckReport extremal_J_check(const SpectralModel& k, const PerturbationMatrix& b, double delta,
                             const std::vector<Index>& ns);

/// Default extremal-J index grid: 50, 100, ..., 500 clipped to N - 1.
std::vector<Index> default_extremal_indices(Index n);

}  // namespace specpert
