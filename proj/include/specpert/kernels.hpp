#pragma once

// Covariance kernels on [0,1]^2, their Nystrom discretization, and
// perturbations B given as integral operators with kernel rho(s,t).

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "specpert/models.hpp"

namespace specpert {

/// Compiled arithmetic expression over the variables s and t.
///
/// Grammar:
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | primary
///   primary := number | 's' | 't' | 'pi' | 'e'
///            | ('min' | 'max' | 'pow') '(' expr ',' expr ')'
///            | '(' expr ')'
/// Whitespace is ignored. Throws PARSE_ERROR with the offending position.
class Expression {
 public:
  explicit Expression(std::string_view source);

  double operator()(double s, double t) const;
  const std::string& source() const noexcept { return source_; }
  bool uses_variables() const noexcept { return uses_variables_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
  bool uses_variables_ = false;
};

/// Evaluates a constant expression such as "-pi/2". Throws PARSE_ERROR if it
/// mentions s or t.
double evaluate_constant(std::string_view source);

enum class KernelName { BrownianMotion, BrownianBridge, Custom };

std::string to_string(KernelName name);

/// Symmetric kernel G(s,t) on [0,1]^2.
class KernelSpec {
 public:
  static KernelSpec brownian_motion();
  static KernelSpec brownian_bridge();
  /// Throws KERNEL_NOT_SYMMETRIC if G(s,t) != G(t,s) beyond 1e-14 on a
  /// 17x17 grid.
  static KernelSpec custom(std::string_view expression);
  static KernelSpec custom(std::function<double(double, double)> fn, std::string label);

  KernelName name() const noexcept { return name_; }
  const std::string& label() const noexcept { return label_; }
  double operator()(double s, double t) const { return fn_(s, t); }

 private:
  KernelSpec(KernelName name, std::function<double(double, double)> fn, std::string label);

  KernelName name_;
  std::function<double(double, double)> fn_;
  std::string label_;
};

enum class QuadratureRule { GaussLegendre, Midpoint };

struct Quadrature {
  Vector nodes;    // ascending, in (0, 1)
  Vector weights;  // positive, summing to 1
};

Quadrature make_quadrature(QuadratureRule rule, Index n);

struct NystromOptions {
  /// Keep node-coordinate eigenvectors (needed by
  /// metric_perturbation_from_kernel and eigenfunction()).
  bool store_vectors = true;
  /// Eigenvalues at or below truncation_rel * lambda_1 are dropped.
  double truncation_rel = 1e-14;
  /// Eigenvalues below -negative_tol_rel * lambda_1 count as negative.
  double negative_tol_rel = 1e-10;
  /// KERNEL_NOT_PSD when more than this fraction of eigenvalues is negative.
  double max_negative_fraction = 0.01;
};

/// Eigenvalues of A_ij = sqrt(w_i w_j) G(x_i, x_j). Eigenvector signs are
/// fixed so the first node component with magnitude above 1e-6 of the
/// column maximum is positive.
SpectralModel nystrom_model(const KernelSpec& kernel, Index n, QuadratureRule rule = QuadratureRule::GaussLegendre,
                            const NystromOptions& options = {});

/// Nystrom interpolation of eigenfunction `index` (1-based) of the kernel
/// used to build `model`: phi(s) = (1/lambda) sum_j sqrt(w_j) G(s, x_j) v_j.
double eigenfunction(const SpectralModel& model, const KernelSpec& kernel, Index index, double s);

/// Quadrature approximation of the double integral of phi_n(s) rho(s,t) phi_m(t):
/// b_nm = sum_ij v_n(i) sqrt(w_i) rho(x_i, x_j) sqrt(w_j) v_m(j), with v the
/// stored unit eigenvectors. Requires a Nystrom model with stored vectors.
PerturbationMatrix metric_perturbation_from_kernel(const SpectralModel& model, const KernelSpec& rho);

}  // namespace specpert
