#include "specpert/gen_eigen.hpp"

#include <cmath>
#include <string>

#include "specpert/error.hpp"

namespace specpert {

HMetric::HMetric(const PerturbationMatrix& b, double eps) : gram_(b.gram(eps)), chol_(cholesky(gram_)) {}

double HMetric::inner(const Vector& h, const Vector& g) const { return h.dot(gram_.matrix() * g); }

double HMetric::norm(const Vector& h) const { return std::sqrt(inner(h, h)); }

Vector HMetric::solve(const Vector& v) const {
  const auto lower = chol_.triangularView<Eigen::Lower>();
  return chol_.transpose().triangularView<Eigen::Upper>().solve(lower.solve(v));
}

Vector PerturbedSpectrum::embedded(Index k, Index n) const {
  Vector x = Vector::Zero(n);
  x.segment(offset, vectors.rows()) = vectors.col(k);
  return x;
}

namespace {

PerturbedSpectrum solve_block(const Vector& lambdas, const Matrix& b, Index offset, double eps,
                              const SolveOptions& options) {
  const Index n = lambdas.size();
  const SymMatrix g(Matrix(Matrix::Identity(n, n) + eps * b));
  EigenOptions eo;
  eo.compute_vectors = options.compute_vectors;
  eo.ranks = options.ranks;
  auto dec = generalized_diagonal_eigen(lambdas, g, eo);
  PerturbedSpectrum out;
  out.values = std::move(dec.values);
  out.vectors = std::move(dec.vectors);
  out.epsilon = eps;
  out.offset = offset;
  return out;
}

void check_dims(const SpectralModel& k, const PerturbationMatrix& b) {
  if (k.dim() != b.dim()) {
    throw Error(ErrorCode::InvalidArgument, "model dimension " + std::to_string(k.dim()) +
                                                " does not match perturbation dimension " +
                                                std::to_string(b.dim()));
  }
}

}  // namespace

PerturbedSpectrum solve_generalized(const SpectralModel& k, const PerturbationMatrix& b,
                                    const SolveOptions& options) {
  check_dims(k, b);
  return solve_block(k.lambdas(), b.matrix(), 0, 1.0, options);
}

PerturbedSpectrum projected_solve(const SpectralModel& k, const PerturbationMatrix& b, Window window,
                                  const SolveOptions& options) {
  check_dims(k, b);
  const Index n_total = k.dim();
  if (window.n < 1 || window.n > n_total) {
    throw Error(ErrorCode::InvalidArgument, "window index " + std::to_string(window.n) +
                                                " outside 1.." + std::to_string(n_total));
  }
  const Index offset = window.side == Window::Side::Head ? 0 : window.n - 1;
  const Index size = window.side == Window::Side::Head ? window.n : n_total - window.n + 1;
  return solve_block(k.lambdas().segment(offset, size), b.matrix().block(offset, offset, size, size),
                     offset, 1.0, options);
}

HomotopyResult homotopy_track(const SpectralModel& k, const PerturbationMatrix& b, Index steps) {
  check_dims(k, b);
  if (steps < 2) throw Error(ErrorCode::InvalidArgument, "homotopy needs at least 2 steps");
  const Index n = k.dim();
  HomotopyResult result;
  result.steps.reserve(static_cast<std::size_t>(steps));
  for (Index i = 0; i < steps; ++i) {
    const double eps = static_cast<double>(i) / static_cast<double>(steps - 1);
    if (i == 0) {
      PerturbedSpectrum base;
      base.values = k.lambdas();
      base.epsilon = 0.0;
      result.steps.push_back(std::move(base));
      continue;
    }
    result.steps.push_back(solve_block(k.lambdas(), b.matrix(), 0, eps, {.compute_vectors = false}));
  }

  result.max_jump = Vector::Zero(n);
  const double gap_floor = 1e-14 * k.lambda(1);
  for (std::size_t i = 0; i < result.steps.size(); ++i) {
    const Vector& v = result.steps[i].values;
    if (i + 1 < result.steps.size()) {
      result.max_jump = result.max_jump.cwiseMax((result.steps[i + 1].values - v).cwiseAbs());
    }
    for (Index j = 0; j + 1 < n && !result.crossing_detected; ++j) {
      if (v(j) - v(j + 1) < gap_floor) {
        result.crossing_detected = true;
        result.crossing_index = j + 1;
      }
    }
  }
  return result;
}

}  // namespace specpert
