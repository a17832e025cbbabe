#pragma once

// The generalized eigenproblem K h = lambda (h + B h) in the K-eigenbasis,
// its head/tail projections, and the eps-homotopy from B = 0 to B.

#include <vector>

#include "specpert/models.hpp"

namespace specpert {

/// Inner product <h, g> = h^T (I + B) g with a cached Cholesky factor.
class HMetric {
 public:
  explicit HMetric(const PerturbationMatrix& b, double eps = 1.0);

  const SymMatrix& gram() const noexcept { return gram_; }
  const Matrix& cholesky_factor() const noexcept { return chol_; }

  double inner(const Vector& h, const Vector& g) const;
  double norm(const Vector& h) const;
  /// (I + B)^{-1} v
  Vector solve(const Vector& v) const;

 private:
  SymMatrix gram_;
  Matrix chol_;
};

/// Values lambda_1 >= ... of a (possibly projected) generalized problem.
/// Vectors, when present, are H-orthonormal columns of length
/// `vectors.rows()` and live on coordinates [offset, offset + rows).
struct PerturbedSpectrum {
  Vector values;
  Matrix vectors;
  double epsilon = 1.0;
  Index offset = 0;

  /// Column k embedded into a full coordinate vector of length n.
  Vector embedded(Index k, Index n) const;
};

/// HEAD(n): coordinates 1..n. TAIL(n): coordinates n..N. (1-based)
struct Window {
  enum class Side { Head, Tail };
  Side side = Side::Head;
  Index n = 1;

  static Window head(Index n) { return {Side::Head, n}; }
  static Window tail(Index n) { return {Side::Tail, n}; }
};

struct SolveOptions {
  bool compute_vectors = true;
  /// Restrict to a range of descending ranks (see RankRange).
  std::optional<RankRange> ranks;
};

PerturbedSpectrum solve_generalized(const SpectralModel& k, const PerturbationMatrix& b,
                                    const SolveOptions& options = {});

/// Same problem with K and B restricted to the window's principal
/// submatrix (the K-eigenbasis makes this the orthoprojected problem).
PerturbedSpectrum projected_solve(const SpectralModel& k, const PerturbationMatrix& b, Window window,
                                  const SolveOptions& options = {});

struct HomotopyResult {
  /// Ordered by eps = 0, 1/(steps-1), ..., 1; eigenvalues only.
  std::vector<PerturbedSpectrum> steps;
  /// max_i |lambda_n(eps_{i+1}) - lambda_n(eps_i)| per index.
  Vector max_jump;
  /// Adjacent paths came within 1e-14 * lambda_1 at some step.
  bool crossing_detected = false;
  Index crossing_index = 0;  // 1-based, 0 if none
};

/// Solves K h = lambda (I + eps B) h on an even eps grid, identifying paths
/// by sorted rank. Throws NOT_POSITIVE_DEFINITE if I + eps B fails at a step.
HomotopyResult homotopy_track(const SpectralModel& k, const PerturbationMatrix& b, Index steps = 11);

}  // namespace specpert
