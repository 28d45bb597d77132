#pragma once

#include <span>
#include <vector>

namespace torusrecon {

/// Kernel hyperparameters on the unit-period torus [0,1)^d.
///
/// The prior over each vector-field component is a product of one-dimensional
/// periodic Matérn kernels. Every axis factor is a unit-amplitude correlation, so
/// the product kernel has amplitude `sigma2` regardless of dimension.
struct Hyperparameters {
  double nu = 1.5;                         // smoothness, 1/2 or 3/2
  std::vector<double> kappa{0.04, 0.04, 0.04};  // per-axis length scale
  double sigma2 = 1.0;                     // kernel amplitude
  double noise2 = 1e-4;                    // observation noise variance
  int dim = 3;

  /// Same length scale on every axis; noise defaults to 1e-4 * sigma2.
  static Hyperparameters isotropic(int dim, double kappa, double sigma2 = 1.0,
                                   double nu = 1.5);

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
};

/// Un-normalised Whittle–Matérn weight (2ν/κ² + 4π²n²)^{-(ν+1/2)}.
double matern_weight(double nu, double kappa, long n);

/// Closed-form Σ_{n∈Z} matern_weight(nu, kappa, n).
double matern_weight_sum(double nu, double kappa);

/// ρ(n) of the one-dimensional kernel on `axis` with amplitude sigma2, i.e.
/// normalised so that Σ_n ρ(n) = sigma2.
double spectral_weight(const Hyperparameters& hp, int axis, long n);

/// Unit-amplitude periodic Matérn correlation at lag `lag` (any real; reduced mod 1).
/// Evaluated with exponentials of non-positive arguments only, so it stays finite
/// for arbitrarily small length scales.
double matern_correlation(double nu, double kappa, double lag);

/// One-dimensional kernel k(x, x') on `axis`; k(x, x) = sigma2.
double kernel_value_1d(const Hyperparameters& hp, int axis, double x, double x_prime);

/// sigma2 · Π_a correlation_a(x_a − x'_a). Throws InputError on dimension mismatch.
double product_kernel_value(const Hyperparameters& hp, std::span<const double> x,
                            std::span<const double> x_prime);

}  // namespace torusrecon
