#include "specpert/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "specpert/error.hpp"

namespace specpert {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::InvalidArgument, "SymMatrix requires a square matrix, got " +
                                                std::to_string(m.rows()) + "x" +
                                                std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw Error(ErrorCode::InvalidArgument, "SymMatrix entries must be finite");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

Matrix cholesky(const SymMatrix& m, double pivot_floor_rel) {
  const Index n = m.dim();
  if (n == 0) return Matrix();
  Matrix l = m.matrix();
  const lapack_int info = LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n),
                                         l.data(), static_cast<lapack_int>(n));
  if (info < 0) throw Error(ErrorCode::InvalidArgument, "dpotrf rejected its arguments");
  if (info > 0) {
    throw Error(ErrorCode::NotPositiveDefinite,
                "nonpositive pivot at row " + std::to_string(info - 1));
  }
  const double floor = pivot_floor_rel * m.matrix().diagonal().maxCoeff();
  for (Index j = 0; j < n; ++j) {
    if (l(j, j) * l(j, j) <= floor) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(l(j, j) * l(j, j)) + " at row " + std::to_string(j) +
                      " is below the floor " + std::to_string(floor));
    }
  }
  return l.triangularView<Eigen::Lower>();
}

namespace {

// dsyevr returns ascending values; reorder descending, equal values keeping
// the solver's column order.
EigenDecomposition sorted_descending(const Vector& w, const Matrix& z, bool with_vectors) {
  const Index m = w.size();
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return w(i) > w(j); });

  EigenDecomposition out;
  out.values.resize(m);
  if (with_vectors) out.vectors.resize(z.rows(), m);
  for (Index k = 0; k < m; ++k) {
    out.values(k) = w(order[static_cast<std::size_t>(k)]);
    if (with_vectors) out.vectors.col(k) = z.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

EigenDecomposition sym_eigen(const SymMatrix& m, const EigenOptions& options) {
  const Index n = m.dim();
  if (n == 0) return {};
  Matrix a = m.matrix();

  char range = 'A';
  lapack_int il = 1;
  lapack_int iu = static_cast<lapack_int>(n);
  if (options.ranks) {
    const auto [first, last] = *options.ranks;
    if (first < 0 || last < first || last >= n) {
      throw Error(ErrorCode::InvalidArgument, "rank range out of bounds");
    }
    range = 'I';
    il = static_cast<lapack_int>(n - last);
    iu = static_cast<lapack_int>(n - first);
  }
  const lapack_int count = iu - il + 1;
  const char jobz = options.compute_vectors ? 'V' : 'N';

  Vector w(n);
  Matrix z;
  if (options.compute_vectors) z.resize(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(std::max<lapack_int>(count, 1)));
  lapack_int found = 0;
  const lapack_int ldz = options.compute_vectors ? static_cast<lapack_int>(n) : 1;
  double dummy = 0.0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, jobz, range, 'L', static_cast<lapack_int>(n), a.data(),
      static_cast<lapack_int>(n), 0.0, 0.0, il, iu, 0.0, &found, w.data(),
      options.compute_vectors ? z.data() : &dummy, ldz, support.data());
  if (info < 0) throw Error(ErrorCode::InvalidArgument, "dsyevr rejected its arguments");
  if (info > 0) throw Error(ErrorCode::NoConvergence, "dsyevr failed to converge");

  auto out = sorted_descending(w.head(found), z, options.compute_vectors);
  out.metric = Metric::Euclidean;
  return out;
}

namespace {

EigenDecomposition back_transform(EigenDecomposition reduced, const Matrix& l, const SymMatrix& g,
                                  bool with_vectors) {
  if (with_vectors) {
    // x = L^{-T} y, so x^T G x = y^T y.
    reduced.vectors = l.transpose().triangularView<Eigen::Upper>().solve(reduced.vectors);
  }
  reduced.metric = Metric::HMetric;
  reduced.metric_matrix = g;
  return reduced;
}

}  // namespace

EigenDecomposition generalized_sym_eigen(const SymMatrix& a, const SymMatrix& g,
                                         const EigenOptions& options) {
  if (a.dim() != g.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  const Matrix l = cholesky(g, options.pivot_floor_rel);
  const auto lower = l.triangularView<Eigen::Lower>();
  const Matrix half = lower.solve(a.matrix());
  const Matrix c = lower.solve(Matrix(half.transpose()));
  return back_transform(sym_eigen(SymMatrix(c), options), l, g, options.compute_vectors);
}

EigenDecomposition generalized_diagonal_eigen(const Vector& d, const SymMatrix& g,
                                              const EigenOptions& options) {
  if (d.size() != g.dim()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  if ((d.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "diagonal left-hand side must be nonnegative");
  }
  const Index n = d.size();
  const Matrix l = cholesky(g, options.pivot_floor_rel);
  Matrix w = l.triangularView<Eigen::Lower>().solve(Matrix(d.cwiseSqrt().asDiagonal()));
  Matrix c = Matrix::Zero(n, n);
  c.selfadjointView<Eigen::Lower>().rankUpdate(w);
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return back_transform(sym_eigen(SymMatrix(c), options), l, g, options.compute_vectors);
}

DecompositionQuality assess(const SymMatrix& a, const EigenDecomposition& dec) {
  DecompositionQuality q;
  if (dec.vectors.size() == 0) return q;
  const Index n = a.dim();
  const Matrix g = dec.metric == Metric::HMetric && dec.metric_matrix
                       ? dec.metric_matrix->matrix()
                       : Matrix(Matrix::Identity(n, n));
  const Matrix av = a.matrix() * dec.vectors;
  const Matrix gv = g * dec.vectors;
  for (Index k = 0; k < dec.vectors.cols(); ++k) {
    q.max_residual = std::max(q.max_residual, (av.col(k) - dec.values(k) * gv.col(k)).norm());
  }
  const Matrix gram = dec.vectors.transpose() * gv;
  q.orthonormality_error =
      (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  return q;
}

}  // namespace specpert
