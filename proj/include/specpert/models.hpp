#pragma once

// Finite-dimensional instances of the unperturbed operator K (through its
// eigenvalues) and of the metric perturbation B (through its matrix in the
// K-eigenbasis).

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "specpert/linalg.hpp"

namespace specpert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// lambda_n = (a n + b + O(n^-delta))^-exponent, n = 1, 2, ...
/// delta = +inf marks a law without remainder.
struct AsymptoticLaw {
  double a = 1.0;
  double b = 0.0;
  double exponent = 1.0;
  double delta = kInf;

  /// Throws INVALID_LAW unless a, exponent, delta > 0 and a + b > 0.
  void validate() const;

  double affine(double n) const { return a * n + b; }
  /// Wobble-free eigenvalue at 1-based index n.
  double eigenvalue(double n) const;
};

struct NoWobble {};
/// w_n = c * n^-delta
struct DeterministicWobble {
  double c = 0.0;
};
/// w_n uniform in [-c n^-delta, c n^-delta], drawn from a seeded mt19937_64.
struct RandomWobble {
  double c = 0.0;
  std::uint64_t seed = 0;
};
using Wobble = std::variant<NoWobble, DeterministicWobble, RandomWobble>;

enum class Provenance { Diagonal, Nystrom, TwoSequence };

std::string to_string(Provenance p);

/// Nystrom discretization data. Column n of `vectors` is the unit
/// eigenvector of the weighted kernel matrix; the eigenfunction value at a
/// node is phi_n(x_i) = vectors(i, n) / sqrt(weights(i)).
struct NystromData {
  Vector nodes;
  Vector weights;
  Matrix vectors;
};

/// Truncated K in its own eigenbasis: strictly decreasing positive
/// eigenvalues; basis vector h_n is canonical column n.
class SpectralModel {
 public:
  /// Validates that lambdas are positive and strictly decreasing
  /// (NOT_DECREASING otherwise).
  SpectralModel(Vector lambdas, Provenance provenance);

  Index dim() const noexcept { return lambdas_.size(); }
  const Vector& lambdas() const noexcept { return lambdas_; }
  /// 1-based access, matching the usual eigenvalue enumeration.
  double lambda(Index n) const { return lambdas_(n - 1); }
  Provenance provenance() const noexcept { return provenance_; }

  const std::optional<AsymptoticLaw>& law() const noexcept { return law_; }
  const std::optional<AsymptoticLaw>& second_law() const noexcept { return second_law_; }
  double wobble_c() const noexcept { return wobble_c_; }
  const std::optional<NystromData>& nystrom() const noexcept { return nystrom_; }

  SpectralModel& with_law(AsymptoticLaw law, double wobble_c = 0.0);
  SpectralModel& with_second_law(AsymptoticLaw law);
  SpectralModel& with_nystrom(NystromData data);

 private:
  Vector lambdas_;
  Provenance provenance_;
  std::optional<AsymptoticLaw> law_;
  std::optional<AsymptoticLaw> second_law_;
  double wobble_c_ = 0.0;
  std::optional<NystromData> nystrom_;
};

/// Symmetric matrix b_nm = (B h_n, h_m) with I + B positive definite,
/// checked at construction.
class PerturbationMatrix {
 public:
  /// Throws NOT_POSITIVE_DEFINITE if I + entries is not positive definite.
  PerturbationMatrix(SymMatrix entries, std::string tag);

  static PerturbationMatrix zero(Index n);

  Index dim() const noexcept { return entries_.dim(); }
  const SymMatrix& entries() const noexcept { return entries_; }
  const Matrix& matrix() const noexcept { return entries_.matrix(); }
  const std::string& tag() const noexcept { return tag_; }

  /// I + eps * B.
  SymMatrix gram(double eps = 1.0) const;

 private:
  SymMatrix entries_;
  std::string tag_;
};

enum class RankOneMode { Lemma1, Theorem1 };

SpectralModel build_diagonal_K(const AsymptoticLaw& law, Index n, const Wobble& wobble = NoWobble{});

/// Odd rank 2n-1 follows law1 at index n, even rank 2n follows law2:
/// ((2n-1)a + b1)^-B and (2na + b2)^-B. Requires strict interleaving.
SpectralModel build_two_sequence_K(const AsymptoticLaw& law1, const AsymptoticLaw& law2, Index n);

/// Lemma1:   b_nm = sigma u_n u_m, u_n = n^-(1+delta).
/// Theorem1: b_nm = sigma (nm)^-(1+delta)/2.
PerturbationMatrix build_rank_one_perturbation(double sigma, double delta, Index n, RankOneMode mode);

/// b_nm = sigma eps_nm (nm)^-(1+delta)/2 with symmetric random signs.
PerturbationMatrix build_random_sign_perturbation(double sigma, double delta, Index n,
                                                  std::uint64_t seed);

/// Spectral projection of B onto its nonnegative and negative eigenspaces.
std::pair<PerturbationMatrix, PerturbationMatrix> split_sign(const PerturbationMatrix& b);

/// Sign of B up to a relative tolerance on its extreme eigenvalues.
enum class Definiteness { Zero, PositiveSemidefinite, NegativeSemidefinite, Indefinite };
Definiteness definiteness(const PerturbationMatrix& b, double rel_tol = 1e-12);

/// Spectral norm.
double spectral_norm(const SymMatrix& m);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw; used
/// instead of std::uniform_real_distribution so streams are portable.
double unit_uniform(std::uint64_t bits);

}  // namespace specpert
