#include "specpert/models.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "specpert/error.hpp"

namespace specpert {

namespace {

std::string fmt_params(std::initializer_list<std::pair<const char*, double>> params) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (const auto& [name, value] : params) {
    if (!first) os << ',';
    os << name << '=' << value;
    first = false;
  }
  return os.str();
}

}  // namespace

void AsymptoticLaw::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw Error(ErrorCode::InvalidLaw, "slope a must be positive");
  if (!(exponent > 0.0) || !std::isfinite(exponent)) {
    throw Error(ErrorCode::InvalidLaw, "exponent must be positive");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidLaw, "remainder exponent delta must be positive");
  if (!std::isfinite(b)) throw Error(ErrorCode::InvalidLaw, "intercept b must be finite");
  if (!(a + b > 0.0)) throw Error(ErrorCode::InvalidLaw, "a + b must be positive");
}

double AsymptoticLaw::eigenvalue(double n) const { return std::pow(affine(n), -exponent); }

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Diagonal: return "diagonal";
    case Provenance::Nystrom: return "nystrom";
    case Provenance::TwoSequence: return "two_sequence";
  }
  return "unknown";
}

SpectralModel::SpectralModel(Vector lambdas, Provenance provenance)
    : lambdas_(std::move(lambdas)), provenance_(provenance) {
  if (lambdas_.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty spectrum");
  for (Index i = 0; i < lambdas_.size(); ++i) {
    if (!(lambdas_(i) > 0.0) || !std::isfinite(lambdas_(i))) {
      throw Error(ErrorCode::NonpositiveValue, "eigenvalue " + std::to_string(i + 1) +
                                                   " is not a positive finite number");
    }
    if (i > 0 && !(lambdas_(i) < lambdas_(i - 1))) {
      throw Error(ErrorCode::NotDecreasing,
                  "eigenvalues not strictly decreasing at index " + std::to_string(i + 1));
    }
  }
}

SpectralModel& SpectralModel::with_law(AsymptoticLaw law, double wobble_c) {
  law_ = law;
  wobble_c_ = wobble_c;
  return *this;
}

SpectralModel& SpectralModel::with_second_law(AsymptoticLaw law) {
  second_law_ = law;
  return *this;
}

SpectralModel& SpectralModel::with_nystrom(NystromData data) {
  nystrom_ = std::move(data);
  return *this;
}

PerturbationMatrix::PerturbationMatrix(SymMatrix entries, std::string tag)
    : entries_(std::move(entries)), tag_(std::move(tag)) {
  // cholesky throws NOT_POSITIVE_DEFINITE with the failing pivot.
  (void)cholesky(gram());
}

PerturbationMatrix PerturbationMatrix::zero(Index n) { return {SymMatrix::zero(n), "zero"}; }

SymMatrix PerturbationMatrix::gram(double eps) const {
  const Index n = dim();
  return SymMatrix(Matrix(Matrix::Identity(n, n) + eps * entries_.matrix()));
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

SpectralModel build_diagonal_K(const AsymptoticLaw& law, Index n, const Wobble& wobble) {
  law.validate();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "model size must be positive");

  std::mt19937_64 rng(std::holds_alternative<RandomWobble>(wobble) ? std::get<RandomWobble>(wobble).seed
                                                                   : 0);
  double wobble_c = 0.0;
  Vector lambdas(n);
  for (Index k = 1; k <= n; ++k) {
    const double decay = std::isinf(law.delta) ? 0.0 : std::pow(static_cast<double>(k), -law.delta);
    double w = 0.0;
    if (const auto* d = std::get_if<DeterministicWobble>(&wobble)) {
      w = d->c * decay;
      wobble_c = std::abs(d->c);
    } else if (const auto* r = std::get_if<RandomWobble>(&wobble)) {
      w = r->c * decay * (2.0 * unit_uniform(rng()) - 1.0);
      wobble_c = std::abs(r->c);
    }
    const double mu = law.affine(static_cast<double>(k)) + w;
    if (!(mu > 0.0)) {
      throw Error(ErrorCode::InvalidLaw, "a n + b + w_n is not positive at n = " + std::to_string(k));
    }
    lambdas(k - 1) = std::pow(mu, -law.exponent);
    if (k > 1 && !(lambdas(k - 1) < lambdas(k - 2))) {
      throw Error(ErrorCode::NotDecreasing,
                  "wobble breaks monotonicity at n = " + std::to_string(k));
    }
  }
  SpectralModel model(std::move(lambdas), Provenance::Diagonal);
  model.with_law(law, wobble_c);
  return model;
}

SpectralModel build_two_sequence_K(const AsymptoticLaw& law1, const AsymptoticLaw& law2, Index n) {
  law1.validate();
  law2.validate();
  if (law1.a != law2.a || law1.exponent != law2.exponent || law1.delta != law2.delta) {
    throw Error(ErrorCode::InvalidLaw, "two-sequence laws must share a, exponent and delta");
  }
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "model size must be positive");
  // With rank r: odd r = 2n-1 gives (a r + b1), even r = 2n gives (a r + b2).
  Vector lambdas(n);
  for (Index r = 1; r <= n; ++r) {
    const AsymptoticLaw& law = (r % 2 == 1) ? law1 : law2;
    const double mu = law.affine(static_cast<double>(r));
    if (!(mu > 0.0)) {
      throw Error(ErrorCode::InvalidLaw, "affine term not positive at rank " + std::to_string(r));
    }
    lambdas(r - 1) = std::pow(mu, -law.exponent);
    if (r > 1 && !(lambdas(r - 1) < lambdas(r - 2))) {
      throw Error(ErrorCode::InterleaveViolation,
                  "sequences do not strictly interleave at rank " + std::to_string(r));
    }
  }
  SpectralModel model(std::move(lambdas), Provenance::TwoSequence);
  model.with_law(law1).with_second_law(law2);
  return model;
}

PerturbationMatrix build_rank_one_perturbation(double sigma, double delta, Index n, RankOneMode mode) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "perturbation size must be positive");
  if (!std::isfinite(sigma) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidArgument, "sigma and delta must be finite");
  }
  const double power = mode == RankOneMode::Lemma1 ? (1.0 + delta) : 0.5 * (1.0 + delta);
  Matrix b(n, n);
  if (mode == RankOneMode::Lemma1) {
    Vector u(n);
    for (Index k = 0; k < n; ++k) u(k) = std::pow(static_cast<double>(k + 1), -power);
    b = sigma * (u * u.transpose());
  } else {
    // Evaluate (nm)^-p directly so |b_nm| (nm)^p reproduces |sigma| to rounding.
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        b(i, j) = sigma * std::pow(static_cast<double>(i + 1) * static_cast<double>(j + 1), -power);
      }
    }
  }
  const char* name = mode == RankOneMode::Lemma1 ? "rank_one_lemma1" : "rank_one_theorem1";
  return {SymMatrix(b), std::string(name) + "(" + fmt_params({{"sigma", sigma}, {"delta", delta}}) + ")"};
}

PerturbationMatrix build_random_sign_perturbation(double sigma, double delta, Index n,
                                                  std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "perturbation size must be positive");
  const double power = 0.5 * (1.0 + delta);
  std::mt19937_64 rng(seed);
  Matrix b(n, n);
  // Upper triangle in row-major order, one draw per entry; sign = top bit.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double sign = (rng() >> 63) != 0 ? 1.0 : -1.0;
      const double v =
          sigma * sign * std::pow(static_cast<double>(i + 1) * static_cast<double>(j + 1), -power);
      b(i, j) = v;
      b(j, i) = v;
    }
  }
  return {SymMatrix(b), "random_sign(" +
                            fmt_params({{"sigma", sigma},
                                        {"delta", delta},
                                        {"seed", static_cast<double>(seed)}}) +
                            ")"};
}

double spectral_norm(const SymMatrix& m) {
  if (m.dim() == 0) return 0.0;
  const Vector v = sym_eigen(m, {.compute_vectors = false}).values;
  return std::max(std::abs(v(0)), std::abs(v(v.size() - 1)));
}

Definiteness definiteness(const PerturbationMatrix& b, double rel_tol) {
  const Vector v = sym_eigen(b.entries(), {.compute_vectors = false}).values;
  const double hi = v(0);
  const double lo = v(v.size() - 1);
  const double scale = std::max(std::abs(hi), std::abs(lo));
  if (scale == 0.0) return Definiteness::Zero;
  const bool nonneg = lo >= -rel_tol * scale;
  const bool nonpos = hi <= rel_tol * scale;
  if (nonneg) return Definiteness::PositiveSemidefinite;
  if (nonpos) return Definiteness::NegativeSemidefinite;
  return Definiteness::Indefinite;
}

std::pair<PerturbationMatrix, PerturbationMatrix> split_sign(const PerturbationMatrix& b) {
  const Index n = b.dim();
  const auto dec = sym_eigen(b.entries());
  const double hi = dec.values(0);
  const double lo = dec.values(n - 1);
  const double scale = std::max(std::abs(hi), std::abs(lo));
  const std::string& tag = b.tag();
  // Eigenvalues within rounding of zero on one side mean B is already
  // sign-definite; return it unchanged rather than clipping noise.
  constexpr double kRoundoff = 1e-14;
  if (scale == 0.0 || lo >= -kRoundoff * scale) {
    return {PerturbationMatrix(b.entries(), tag + "+"), PerturbationMatrix(SymMatrix::zero(n), tag + "-")};
  }
  if (hi <= kRoundoff * scale) {
    return {PerturbationMatrix(SymMatrix::zero(n), tag + "+"), PerturbationMatrix(b.entries(), tag + "-")};
  }
  const Vector pos = dec.values.cwiseMax(0.0);
  const Vector neg = dec.values.cwiseMin(0.0);
  const Matrix plus = dec.vectors * pos.asDiagonal() * dec.vectors.transpose();
  const Matrix minus = dec.vectors * neg.asDiagonal() * dec.vectors.transpose();
  return {PerturbationMatrix(SymMatrix(plus), tag + "+"), PerturbationMatrix(SymMatrix(minus), tag + "-")};
}

}  // namespace specpert
