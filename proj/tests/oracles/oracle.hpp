#pragma once

// Reference computations used to derive and freeze expected test values.
// Deliberately independent of the library: long double arithmetic,
// tridiagonal bisection, closed forms and Eigen's own solvers.

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// Symmetric test matrix (R + R^T)/2 with R_ij uniform in [-1, 1) from
/// mt19937_64(seed), row-major draws, 53-bit mantissa mapping.
Eigen::MatrixXd random_symmetric(long n, unsigned long long seed);

/// Householder tridiagonalization (long double), then Sturm-sequence
/// bisection for every eigenvalue. Descending order.
std::vector<long double> sturm_eigenvalues(const Eigen::MatrixXd& m);

/// Roots of det(A - x G) = 0 for 2x2 symmetric A, G, descending.
std::pair<long double, long double> generalized_2x2(long double a11, long double a12, long double a22,
                                                    long double g11, long double g12, long double g22);

/// Lower Cholesky factor of [[m11, m12], [m12, m22]]: (l11, l21, l22).
struct Chol2 {
  long double l11, l21, l22;
};
Chol2 cholesky_2x2(long double m11, long double m12, long double m22);

/// diag(lambda) x = mu G x through the symmetric square root G^{-1/2}
/// (Eigen's self-adjoint solver), descending.
std::vector<double> generalized_sqrt_reduction(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& g);

/// Ordinary least squares y ~ slope x + intercept.
std::pair<long double, long double> ols(const std::vector<long double>& x, const std::vector<long double>& y);

/// |||(I+B)^{-1} diag(lambda) e_n - lambda_n e_n||| / |||e_n||| with an explicit
/// LU inverse; n is 1-based.
long double residual_radius_direct(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& b, int n);

/// x^T diag(lambda) x / x^T (I + B) x
long double rayleigh_direct(const Eigen::VectorXd& lambdas, const Eigen::MatrixXd& b, const Eigen::VectorXd& x);

/// sum_{k<n} c lambda_n / (lambda_k - lambda_n) k^-(1+delta)
long double frak_c_head(const std::function<long double(long)>& lambda, long n, long double delta, long double c);

/// b_nm of rho(s,t) = scale s t in the Brownian-motion eigenbasis, up to
/// the eigenvector signs: 2 scale / (omega_n^2 omega_m^2), omega = (n - 1/2) pi.
long double brownian_st_entry(int n, int m, long double scale);

}  // namespace oracle
