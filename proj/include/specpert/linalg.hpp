#pragma once

// Dense symmetric kernels: Cholesky, symmetric eigendecomposition and the
// symmetric-definite generalized problem A x = lambda G x.

#include <Eigen/Dense>

#include <optional>

namespace specpert {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square real symmetric matrix with finite entries. Construction
/// symmetrizes the input as (M + M^T) / 2 so the stored entries are
/// bitwise symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Index n);
  static SymMatrix zero(Index n);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }
  double frobenius_norm() const { return m_.norm(); }

 private:
  Matrix m_;
};

enum class Metric { Euclidean, HMetric };

/// Eigenpairs sorted by descending value. Column k of `vectors` belongs to
/// values[k] and the columns are orthonormal under `metric` (the identity
/// for Euclidean, `metric_matrix` otherwise). `vectors` is empty when only
/// eigenvalues were requested.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;
  Metric metric = Metric::Euclidean;
  std::optional<SymMatrix> metric_matrix;
};

/// Inclusive range of descending ranks (0-based): {0, 0} is the largest
/// eigenpair, {n-1, n-1} the smallest.
struct RankRange {
  Index first = 0;
  Index last = 0;
};

struct EigenOptions {
  bool compute_vectors = true;
  std::optional<RankRange> ranks;
  /// Cholesky pivots at or below pivot_floor_rel * max diagonal are rejected.
  double pivot_floor_rel = 1e-12;
};

/// Lower-triangular L with M = L L^T.
/// Throws NOT_POSITIVE_DEFINITE when a pivot is at or below
/// pivot_floor_rel * max_i M(i,i).
Matrix cholesky(const SymMatrix& m, double pivot_floor_rel = 1e-12);

/// Symmetric eigendecomposition (Householder tridiagonalization followed by
/// the LAPACK MRRR tridiagonal solver). Ties are ordered by ascending
/// solver column. Throws NO_CONVERGENCE if LAPACK reports failure.
EigenDecomposition sym_eigen(const SymMatrix& m, const EigenOptions& options = {});

/// Solves A x = lambda G x for G positive definite by congruence with the
/// Cholesky factor of G. The returned vectors are G-orthonormal.
EigenDecomposition generalized_sym_eigen(const SymMatrix& a, const SymMatrix& g,
                                         const EigenOptions& options = {});

/// Same as generalized_sym_eigen for A = diag(d) with d > 0, which avoids
/// forming the dense left-hand side: with G = L L^T, the reduced matrix is
/// W W^T where W = L^{-1} diag(sqrt(d)).
EigenDecomposition generalized_diagonal_eigen(const Vector& d, const SymMatrix& g,
                                              const EigenOptions& options = {});

/// Worst residual and orthonormality defect of a decomposition of A
/// (against its declared metric).
struct DecompositionQuality {
  double max_residual = 0.0;       // max_k ||A v_k - values[k] G v_k||_2
  double orthonormality_error = 0.0;  // max |V^T G V - I|
};

DecompositionQuality assess(const SymMatrix& a, const EigenDecomposition& dec);

}  // namespace specpert
