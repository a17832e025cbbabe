#include "specpert/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "specpert/asymptotics.hpp"
#include "specpert/error.hpp"

namespace specpert {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kSlopeAllowance = 0.1;
// Relative deviations below this are indistinguishable from rounding.
constexpr double kResolvedFloor = 1e-11;
// Entries below this fraction of the largest are rounding noise.
constexpr double kEntryFloor = 1e-13;

double dn(Index n) { return static_cast<double>(n); }

void add_note(CheckReport& r, const std::string& note) {
  if (!r.notes.empty()) r.notes += "; ";
  r.notes += note;
}

void add_flag(CheckReport& r, const std::string& flag) {
  if (std::find(r.flags.begin(), r.flags.end(), flag) == r.flags.end()) r.flags.push_back(flag);
}

// Records the slope criterion `limit - slope` when at least three points
// are available, otherwise leaves a note.
void slope_criterion(CheckReport& r, const std::string& name, const std::vector<double>& x,
                     const std::vector<double>& y, double limit) {
  if (x.size() < 3) {
    add_note(r, name + " skipped: fewer than 3 resolved indices");
    return;
  }
  const double slope = loglog_slope(x, y);
  r.constants[name] = slope;
  r.criteria[name] = limit - slope;
}

}  // namespace

void CheckReport::finalize() {
  passed = true;
  worst_index = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& m : margins) {
    if (m.margin < worst) {
      worst = m.margin;
      worst_index = m.n;
    }
    if (!(m.margin >= -slack)) passed = false;
  }
  for (const auto& [key, value] : criteria) {
    if (!(value >= -slack)) passed = false;
  }
}

double CheckReport::worst_margin() const {
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& m : margins) worst = std::min(worst, m.margin);
  return worst;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return kNan;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : kNan;
}

CheckReport check_lemma1_condition(const PerturbationMatrix& b, double delta) {
  CheckReport r;
  r.name = "lemma1_condition";
  const Index n = b.dim();
  const Vector norms = b.matrix().colwise().norm().transpose();
  double c = 0.0;
  for (Index i = 0; i < n; ++i) c = std::max(c, norms(i) * std::pow(dn(i + 1), 1.0 + delta));
  const double floor = kEntryFloor * norms.maxCoeff();
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index i = 0; i < n; ++i) {
    const double scaled = norms(i) * std::pow(dn(i + 1), 1.0 + delta);
    r.margins.push_back({i + 1, c > 0.0 ? 1.0 - scaled / c : 1.0});
    if (norms(i) > floor) {
      xs.push_back(dn(i + 1));
      ys.push_back(norms(i));
    }
  }
  r.constants["c"] = c;
  r.constants["delta"] = delta;
  if (c == 0.0) {
    add_note(r, "B = 0");
  } else {
    slope_criterion(r, "decay_slope", xs, ys, -(1.0 + delta) + kSlopeAllowance);
  }
  r.finalize();
  return r;
}

CheckReport check_theorem1_condition(const PerturbationMatrix& b, double delta) {
  CheckReport r;
  r.name = "theorem1_condition";
  const Index n = b.dim();
  const double e = 0.5 * (1.0 + delta);
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = std::pow(dn(i + 1), e);
  const Matrix& m = b.matrix();
  double c = 0.0;
  Vector s = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double a = std::abs(m(i, j));
      c = std::max(c, a * w(i) * w(j));
      s(i) = std::max(s(i), a * w(j));
    }
  }
  const double floor = kEntryFloor * m.cwiseAbs().maxCoeff();
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index i = 0; i < n; ++i) {
    r.margins.push_back({i + 1, c > 0.0 ? 1.0 - s(i) * w(i) / c : 1.0});
    if (m.col(i).cwiseAbs().maxCoeff() > floor) {
      xs.push_back(dn(i + 1));
      ys.push_back(s(i));
    }
  }
  r.constants["c"] = c;
  r.constants["delta"] = delta;
  if (!std::isfinite(c)) r.criteria["finite_c"] = -1.0;
  if (c == 0.0) {
    add_note(r, "B = 0");
  } else {
    slope_criterion(r, "decay_slope", xs, ys, -e + kSlopeAllowance);
  }
  r.finalize();
  return r;
}

ResidualRadii residual_radii(const SpectralModel& k, const PerturbationMatrix& b, double delta) {
  const Index n = k.dim();
  if (b.dim() != n) throw Error(ErrorCode::InvalidArgument, "dimension mismatch in residual_radii");
  const SymMatrix g = b.gram();
  const Matrix l = cholesky(g);
  const Matrix z = l.triangularView<Eigen::Lower>().solve(b.matrix());
  const double lambda_min =
      sym_eigen(g, {.compute_vectors = false, .ranks = RankRange{n - 1, n - 1}}).values(0);
  const double c_lemma = check_lemma1_condition(b, delta).constants.at("c");
  ResidualRadii out;
  out.c1 = c_lemma / lambda_min;
  out.radius.resize(n);
  out.bound.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double lam = k.lambdas()(i);
    out.radius(i) = lam * z.col(i).norm() / std::sqrt(1.0 + b.matrix()(i, i));
    out.bound(i) = out.c1 * lam * std::pow(dn(i + 1), -(1.0 + delta));
  }
  return out;
}

std::pair<double, double> residual_radius(const SpectralModel& k, const PerturbationMatrix& b, Index n,
                                          double delta) {
  if (n < 1 || n > k.dim()) throw Error(ErrorCode::InvalidArgument, "index outside the model");
  const auto all = residual_radii(k, b, delta);
  return {all.radius(n - 1), all.bound(n - 1)};
}

CheckReport localization_check(const SpectralModel& base, const PerturbationMatrix& b,
                               const PerturbedSpectrum& perturbed, double delta) {
  const Index n = base.dim();
  if (perturbed.values.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "perturbed spectrum length does not match the model");
  }
  CheckReport r;
  r.name = "localization";
  r.slack = 1e-12;
  const auto radii = residual_radii(base, b, delta);
  const Vector& lam = base.lambdas();
  const Vector& mu = perturbed.values;

  const double rounding = std::numeric_limits<double>::epsilon() * base.lambda(1);
  // Ascending copy for nearest-value lookup.
  std::vector<double> sorted(mu.data(), mu.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double c2 = 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index i = 0; i < n; ++i) {
    const double target = lam(i);
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), target);
    double dist = std::numeric_limits<double>::infinity();
    if (it != sorted.end()) dist = std::min(dist, *it - target);
    if (it != sorted.begin()) dist = std::min(dist, target - *std::prev(it));
    r.margins.push_back({i + 1, (radii.radius(i) + rounding - dist) / target});

    const double rel = std::abs(mu(i) / target - 1.0);
    const double scaled = rel * std::pow(dn(i + 1), 1.0 + delta);
    if (rel > kResolvedFloor) {
      c2 = std::max(c2, scaled);
      xs.push_back(dn(i + 1));
      ys.push_back(scaled);
    }
  }

  // Smallest n0 with Delta_k and Delta_{k+1} disjoint for every k >= n0.
  Index n0 = 1;
  for (Index i = n - 2; i >= 0; --i) {
    const double upper_next = lam(i + 1) * (1.0 + c2 * std::pow(dn(i + 2), -(1.0 + delta)));
    const double lower_here = lam(i) * (1.0 - c2 * std::pow(dn(i + 1), -(1.0 + delta)));
    if (upper_next > lower_here) {
      n0 = i + 2;
      break;
    }
  }
  r.constants["c1"] = radii.c1;
  r.constants["c2"] = c2;
  r.constants["n0"] = dn(n0);
  r.constants["delta"] = delta;
  const Index half_limit = (n + 1) / 2 - 1;  // largest n0 with n0 < N/2
  r.criteria["onset"] = dn(half_limit - n0) / dn(n);
  if (c2 > 0.0) slope_criterion(r, "growth_slope", xs, ys, kSlopeAllowance);
  r.finalize();
  return r;
}

CheckReport sandwich_check(const SpectralModel& k, const PerturbationMatrix& b) {
  CheckReport r;
  r.name = "sandwich";
  r.slack = 1e-10;
  const auto [plus, minus] = split_sign(b);
  const SolveOptions values_only{.compute_vectors = false};
  const Vector mid = solve_generalized(k, b, values_only).values;
  const Vector lo = solve_generalized(k, plus, values_only).values;
  const Vector hi = solve_generalized(k, minus, values_only).values;
  double worst_low = std::numeric_limits<double>::infinity();
  double worst_high = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < k.dim(); ++i) {
    const double low_gap = (mid(i) - lo(i)) / mid(i);
    const double high_gap = (hi(i) - mid(i)) / mid(i);
    worst_low = std::min(worst_low, low_gap);
    worst_high = std::min(worst_high, high_gap);
    r.margins.push_back({i + 1, std::min(low_gap, high_gap)});
  }
  r.constants["min_lower_gap"] = worst_low;
  r.constants["min_upper_gap"] = worst_high;
  r.constants["norm_plus"] = spectral_norm(plus.entries());
  r.constants["norm_minus"] = spectral_norm(minus.entries());
  r.finalize();
  return r;
}

CheckReport homotopy_check(const SpectralModel& k, const PerturbationMatrix& b, Index steps) {
  CheckReport r;
  r.name = "homotopy";
  r.slack = 1e-12;
  const Index n = k.dim();
  const Definiteness sign = definiteness(b);
  const double norm = spectral_norm(b.entries());
  const auto track = homotopy_track(k, b, steps);
  const double step = 1.0 / dn(steps - 1);
  const bool positive = sign == Definiteness::PositiveSemidefinite || sign == Definiteness::Zero;
  const bool negative = sign == Definiteness::NegativeSemidefinite;
  const double rounding = std::numeric_limits<double>::epsilon() * k.lambda(1);

  double factor = kNan;
  if (positive) {
    factor = norm * step * 1.1;
  } else if (norm < 1.0) {
    factor = norm / ((1.0 - norm) * (1.0 - norm)) * step * 1.1;
  } else {
    add_note(r, "jump bound skipped: ||B|| >= 1");
  }
  if (!positive && !negative) add_note(r, "B indefinite: monotonicity not asserted");

  for (Index i = 0; i < n; ++i) {
    const double lam = k.lambdas()(i);
    double margin = std::numeric_limits<double>::infinity();
    if (positive || negative) {
      for (std::size_t s = 0; s + 1 < track.steps.size(); ++s) {
        const double diff = track.steps[s + 1].values(i) - track.steps[s].values(i);
        margin = std::min(margin, ((positive ? -diff : diff) + rounding) / lam);
      }
    }
    if (std::isfinite(factor)) {
      const double bound = factor * lam;
      margin = std::min(margin, bound > 0.0 ? (bound - track.max_jump(i)) / bound
                                            : -track.max_jump(i) / lam);
    }
    r.margins.push_back({i + 1, std::isfinite(margin) ? margin : 0.0});
  }
  r.constants["norm_b"] = norm;
  r.constants["steps"] = dn(steps);
  r.constants["max_jump_rel"] = (track.max_jump.array() / k.lambdas().array()).maxCoeff();
  if (track.crossing_detected) {
    add_flag(r, "CROSSING_DETECTED");
    r.constants["crossing_index"] = dn(track.crossing_index);
  }
  r.finalize();
  return r;
}

double rayleigh(const SpectralModel& k, const PerturbationMatrix& b, const Vector& x) {
  if (x.size() != k.dim()) throw Error(ErrorCode::InvalidArgument, "vector length does not match the model");
  const double xx = x.squaredNorm();
  if (xx == 0.0) throw Error(ErrorCode::ZeroVector, "Rayleigh quotient of the zero vector");
  const double num = (k.lambdas().array() * x.array().square()).sum();
  return num / (xx + x.dot(b.matrix() * x));
}

namespace {

RayleighPoint make_point(const SpectralModel& k, const PerturbationMatrix& b, Window window,
                         Index rank) {
  const PerturbedSpectrum ps =
      projected_solve(k, b, window, {.compute_vectors = true, .ranks = RankRange{rank, rank}});
  RayleighPoint p;
  p.window = window;
  p.x = ps.embedded(0, k.dim());
  p.x.normalize();
  Index pivot = window.n - 1;
  if (p.x(pivot) == 0.0) p.x.cwiseAbs().maxCoeff(&pivot);
  if (p.x(pivot) < 0.0) p.x = -p.x;
  p.j = rayleigh(k, b, p.x);
  p.a_coeffs = p.x.cwiseAbs();
  return p;
}

}  // namespace

RayleighPoint head_extremizer(const SpectralModel& k, const PerturbationMatrix& b, Index n) {
  return make_point(k, b, Window::head(n), n - 1);
}

RayleighPoint tail_extremizer(const SpectralModel& k, const PerturbationMatrix& b, Index n) {
  return make_point(k, b, Window::tail(n), 0);
}

CheckReport stationarity_check(const SpectralModel& k, const PerturbationMatrix& b,
                               const RayleighPoint& point) {
  CheckReport r;
  r.name = point.window.side == Window::Side::Head ? "stationarity_head" : "stationarity_tail";
  constexpr double kTol = 1e-8;
  const Index n = point.window.n;
  const Index total = k.dim();
  const Index first = point.window.side == Window::Side::Head ? 1 : n;
  const Index last = point.window.side == Window::Side::Head ? n : total;
  const Vector bx = b.matrix() * point.x;
  const double scale = point.x.cwiseAbs().maxCoeff();
  const double floor = 1e-13 * k.lambda(1);
  double worst = 0.0;
  Index skipped = 0;
  for (Index kk = first; kk <= last; ++kk) {
    if (kk == n) continue;
    const double gap = k.lambda(kk) - point.j;
    if (std::abs(gap) < floor) {
      ++skipped;
      add_flag(r, "DEGENERATE");
      continue;
    }
    const double rhs = point.j / gap * bx(kk - 1);
    const double resid = std::abs(point.x(kk - 1) - rhs) / scale;
    worst = std::max(worst, resid);
    r.margins.push_back({kk, (kTol - resid) / kTol});
  }
  r.constants["n"] = dn(n);
  r.constants["J"] = point.j;
  r.constants["max_residual"] = worst;
  if (skipped > 0) r.constants["skipped"] = dn(skipped);
  r.finalize();
  return r;
}

namespace {

// Adaptive Simpson quadrature with an absolute tolerance.
double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                    double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 48);
}

// Splits [a, b] geometrically towards a singular endpoint so each piece
// is well resolved.
double integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& cuts,
                        double tol) {
  double total = 0.0;
  const double piece_tol = tol / static_cast<double>(std::max<std::size_t>(1, cuts.size() - 1));
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += adaptive_simpson(f, cuts[i], cuts[i + 1], piece_tol);
  return total;
}

constexpr double kQuadTol = 1e-10;

struct SpectrumSource {
  std::function<double(Index)> lambda;  // 1-based
  Index available = 0;                  // largest usable index
  bool unlimited = false;
  double exponent = 1.0;
};

FrakC frak_core(const SpectrumSource& src, Index n, double delta, double c, Window::Side side) {
  if (n < 1 || (!src.unlimited && n > src.available)) {
    throw Error(ErrorCode::InvalidArgument, "frak_C index outside the spectrum");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "frak_C requires delta > 0");
  FrakC out;
  const double bexp = src.exponent;
  const double m = std::min(1.0, bexp);
  const double p = bexp - 1.0 - delta;
  const double nn = dn(n);
  const double lam_n = src.lambda(n);
  const double nm = std::pow(nn, -m);
  auto gap_error = [&](Index kk) {
    return Error(ErrorCode::DegenerateGap, "lambda_" + std::to_string(kk) + " equals lambda_" + std::to_string(n));
  };

  double value = 0.0;
  double rho = 0.0;
  if (side == Window::Side::Head) {
    for (Index kk = 1; kk < n; ++kk) {
      const double gap = src.lambda(kk) - lam_n;
      if (!(gap > 0.0)) throw gap_error(kk);
      const double ratio = lam_n / gap;
      value += ratio * std::pow(dn(kk), -(1.0 + delta));
      const double t = dn(kk) / nn;
      const double tb = std::pow(t, bexp);
      rho = std::max(rho, ratio / (tb / (1.0 - tb) + nm));
    }
    const auto g = [&](double t) { return std::pow(t, p) / (1.0 - std::pow(t, bexp)); };
    if (n >= 2) {
      const double a = 1.0 / nn;
      const double b = 1.0 - 1.0 / nn;
      std::vector<double> cuts;
      if (b > a) {
        cuts.push_back(a);
        for (double x = 2.0 * a; x < 0.5; x *= 2.0) cuts.push_back(x);
        if (0.5 > a && 0.5 < b) cuts.push_back(0.5);
        for (double h = 0.25; 1.0 - h < b; h *= 0.5) {
          if (1.0 - h > cuts.back()) cuts.push_back(1.0 - h);
        }
        cuts.push_back(b);
        out.integral = integrate_pieces(g, cuts, kQuadTol);
      }
      const double endpoints = (g(a) + g(b)) / nn;
      out.bound = c * rho * (std::pow(nn, -delta) * (out.integral + endpoints) + nm * std::riemann_zeta(1.0 + delta));
    }
  } else {
    const Index limit = src.unlimited ? 100 * n : std::min<Index>(100 * n, src.available);
    out.truncated = !src.unlimited;
    for (Index kk = n + 1; kk <= limit; ++kk) {
      const double gap = lam_n - src.lambda(kk);
      if (!(gap > 0.0)) throw gap_error(kk);
      const double ratio = lam_n / gap;
      value += ratio * std::pow(dn(kk), -(1.0 + delta));
      const double tb = std::pow(dn(kk) / nn, bexp);
      rho = std::max(rho, ratio / (tb / (tb - 1.0) + nm));
    }
    if (src.unlimited) {
      const double last_ratio = lam_n / (lam_n - src.lambda(limit));
      value += last_ratio * std::pow(dn(limit), -delta) / delta;
      rho = std::max(rho, last_ratio / (1.0 + nm));
    }
    const auto g = [&](double t) { return std::pow(t, p) / (std::pow(t, bexp) - 1.0); };
    const double a = 1.0 + 1.0 / nn;
    const double top = std::max(1e3, 10.0 * a);
    std::vector<double> cuts{a};
    for (double h = 2.0 / nn; 1.0 + h < 2.0; h *= 2.0) cuts.push_back(1.0 + h);
    for (double x = 2.0; x < top; x *= 2.0) {
      if (x > cuts.back()) cuts.push_back(x);
    }
    cuts.push_back(top);
    const double analytic_tail = std::pow(top, -delta) / (delta * (1.0 - std::pow(top, -bexp)));
    out.integral = integrate_pieces(g, cuts, kQuadTol) + analytic_tail;
    out.bound = c * rho * (std::pow(nn, -delta) * (out.integral + g(a) / nn) + nm * std::pow(nn, -delta) / delta);
  }
  out.value = c * value;
  out.rho = rho;
  if (n >= 2) {
    out.c_integral = out.bound * std::pow(nn, std::min({1.0, delta, bexp})) / std::log(nn);
  }
  return out;
}

}  // namespace

FrakC frak_C(const SpectralModel& k, Index n, double delta, double c, Window::Side side) {
  SpectrumSource src;
  src.available = k.dim();
  if (k.law()) {
    const AsymptoticLaw law = *k.law();
    src.exponent = law.exponent;
    src.unlimited = k.provenance() != Provenance::TwoSequence;
    src.lambda = [&k, law](Index i) { return i <= k.dim() ? k.lambda(i) : law.eigenvalue(dn(i)); };
  } else {
    src.exponent = estimate_exponent(std::span<const double>(k.lambdas().data(), k.dim()));
    src.lambda = [&k](Index i) { return k.lambda(i); };
  }
  return frak_core(src, n, delta, c, side);
}

FrakC frak_C(const AsymptoticLaw& law, Index n, double delta, double c, Window::Side side) {
  law.validate();
  SpectrumSource src;
  src.exponent = law.exponent;
  src.unlimited = true;
  src.lambda = [law](Index i) { return law.eigenvalue(dn(i)); };
  return frak_core(src, n, delta, c, side);
}

CheckReport coefficient_sum_check(const SpectralModel& k, const PerturbationMatrix& b,
                                  const RayleighPoint& point, double delta) {
  CheckReport r;
  const bool head = point.window.side == Window::Side::Head;
  r.name = head ? "coefficient_sum_head" : "coefficient_sum_tail";
  r.slack = 1e-10;
  const Index n = point.window.n;
  const Index first = head ? 1 : n;
  const Index last = head ? n : k.dim();
  const double e = 0.5 * (1.0 + delta);
  const double c = check_theorem1_condition(b, delta).constants.at("c");
  const Vector& a = point.a_coeffs;
  const double lam_n = k.lambda(n);

  double big_a = 0.0;
  for (Index kk = first; kk <= last; ++kk) big_a += a(kk - 1) * std::pow(dn(kk), -e);
  const double a_n_term = a(n - 1) * std::pow(dn(n), -e);
  const double scale = a.segment(first - 1, last - first + 1).maxCoeff();

  for (Index kk = first; kk <= last; ++kk) {
    if (kk == n) continue;
    const double gap = head ? k.lambda(kk) - lam_n : lam_n - k.lambda(kk);
    if (!(gap > 0.0)) throw Error(ErrorCode::DegenerateGap, "repeated eigenvalue at index " + std::to_string(kk));
    const double rhs = lam_n / gap * c * std::pow(dn(kk), -e) * big_a;
    r.margins.push_back({kk, (rhs - a(kk - 1)) / scale});
  }

  const FrakC fc = frak_C(k, n, delta, c, point.window.side);
  const double chain = big_a * fc.value + a_n_term;
  r.criteria["chain"] = (chain - big_a) / big_a;
  r.constants["A"] = big_a;
  r.constants["frak_c"] = fc.value;
  r.constants["frak_c_bound"] = fc.bound;
  r.constants["c"] = c;
  r.constants["n"] = dn(n);
  r.constants["conclusion_constant"] = big_a / a_n_term;
  if (fc.value < 0.5) {
    const double conclusion = a_n_term / (1.0 - fc.value);
    r.criteria["conclusion"] = (conclusion - big_a) / big_a;
  }
  if (fc.value >= 1.0) add_flag(r, "FRAK_C_TOO_LARGE");
  if (fc.truncated && !head) add_note(r, "tail sum truncated at N");
  r.finalize();
  return r;
}

std::vector<Index> default_extremal_indices(Index n) {
  std::vector<Index> out;
  for (Index i = 50; i <= 500 && i < n; i += 50) out.push_back(i);
  return out;
}

CheckReport extremal_J_check(const SpectralModel& k, const PerturbationMatrix& b, double delta,
                             const std::vector<Index>& ns) {
  const Definiteness sign = definiteness(b);
  if (sign == Definiteness::Indefinite) {
    throw Error(ErrorCode::WrongSign, "extremal_J_check needs a sign-definite B; split it first");
  }
  const bool head = sign != Definiteness::NegativeSemidefinite;
  CheckReport r;
  r.name = head ? "extremal_j_head" : "extremal_j_tail";
  r.slack = 1e-12;
  double c = 0.0;
  std::vector<double> xs;
  std::vector<double> ys;
  for (Index n : ns) {
    if (n < 1 || n > k.dim()) throw Error(ErrorCode::InvalidArgument, "extremal index outside the model");
    const RayleighPoint pt = head ? head_extremizer(k, b, n) : tail_extremizer(k, b, n);
    const double lam = k.lambda(n);
    const double rel = std::abs(pt.j - lam) / lam;
    const double scaled = rel * std::pow(dn(n), 1.0 + delta);
    c = std::max(c, scaled);
    r.margins.push_back({n, (head ? lam - pt.j : pt.j - lam) / lam});
    if (rel > kResolvedFloor) {
      xs.push_back(dn(n));
      ys.push_back(scaled);
    }
  }
  r.constants["c"] = c;
  r.constants["delta"] = delta;
  if (c > 0.0) slope_criterion(r, "growth_slope", xs, ys, kSlopeAllowance);
  r.finalize();
  return r;
}

}  // namespace specpert
