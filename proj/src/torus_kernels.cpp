#include "torusrecon/torus_kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "torusrecon/errors.hpp"

namespace torusrecon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_half(double nu) { return nu == 0.5; }
bool is_three_halves(double nu) { return nu == 1.5; }

void require_supported(double nu) {
  if (!is_half(nu) && !is_three_halves(nu)) {
    throw ConfigError("unsupported smoothness nu=" + std::to_string(nu) +
                      " (supported: 0.5, 1.5)");
  }
}

// Reduces a lag to s = |Δ mod 1| − 1/2 ∈ [−1/2, 1/2).
double centred_lag(double lag) {
  double r = lag - std::floor(lag);
  return r - 0.5;
}

}  // namespace

Hyperparameters Hyperparameters::isotropic(int dim, double kappa, double sigma2, double nu) {
  Hyperparameters hp;
  hp.dim = dim;
  hp.nu = nu;
  hp.kappa.assign(static_cast<std::size_t>(dim > 0 ? dim : 0), kappa);
  hp.sigma2 = sigma2;
  hp.noise2 = 1e-4 * sigma2;
  return hp;
}

void Hyperparameters::validate() const {
  if (dim < 1) throw ConfigError("dimension must be >= 1");
  require_supported(nu);
  if (kappa.size() != static_cast<std::size_t>(dim)) {
    throw ConfigError("expected " + std::to_string(dim) + " length scales, got " +
                      std::to_string(kappa.size()));
  }
  for (double k : kappa) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("length scales must be > 0");
  }
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be > 0");
  if (!(noise2 >= 0.0) || !std::isfinite(noise2)) throw ConfigError("noise2 must be >= 0");
}

double matern_weight(double nu, double kappa, long n) {
  require_supported(nu);
  const double nn = static_cast<double>(n);
  const double base = 2.0 * nu / (kappa * kappa) + kTwoPi * kTwoPi * nn * nn;
  return is_half(nu) ? 1.0 / base : 1.0 / (base * base);
}

double matern_weight_sum(double nu, double kappa) {
  require_supported(nu);
  // Σ 1/(a² + 4π²n²) = coth(a/2) / (2a); the ν = 3/2 sum is −(1/2a) d/da of it.
  if (is_half(nu)) {
    const double a = 1.0 / kappa;
    return 1.0 / (2.0 * a * std::tanh(0.5 * a));
  }
  const double a = std::sqrt(3.0) / kappa;
  const double em = std::exp(-a);
  const double one_minus = -std::expm1(-a);
  // 1/sinh²(a/2) = 4e^{-a}/(1 − e^{-a})²
  const double csch2 = 4.0 * em / (one_minus * one_minus);
  return 1.0 / (4.0 * a * a * a * std::tanh(0.5 * a)) + csch2 / (8.0 * a * a);
}

double spectral_weight(const Hyperparameters& hp, int axis, long n) {
  hp.validate();
  if (axis < 0 || axis >= hp.dim) throw InputError("axis out of range");
  const double k = hp.kappa[static_cast<std::size_t>(axis)];
  return hp.sigma2 * matern_weight(hp.nu, k, n) / matern_weight_sum(hp.nu, k);
}

double matern_correlation(double nu, double kappa, double lag) {
  require_supported(nu);
  const double s = centred_lag(lag);
  if (is_half(nu)) {
    // cosh(a s) / cosh(a/2)
    const double a = 1.0 / kappa;
    const double num = std::exp(a * (s - 0.5)) + std::exp(a * (-s - 0.5));
    return num / (1.0 + std::exp(-a));
  }
  const double a = std::sqrt(3.0) / kappa;
  const double one_minus = -std::expm1(-a);
  const double ep = std::exp(a * (s - 0.5));
  const double en = std::exp(a * (-s - 0.5));
  const double ch = (ep + en) / one_minus;  // cosh(a s) / sinh(a/2)
  const double sh = (ep - en) / one_minus;  // sinh(a s) / sinh(a/2)
  const double coth_half = 1.0 / std::tanh(0.5 * a);
  const double value = ch * (2.0 + a * coth_half) - 2.0 * a * s * sh;
  const double csch2 = 4.0 * std::exp(-a) / (one_minus * one_minus);
  const double at_zero = 2.0 * coth_half + a * csch2;
  return value / at_zero;
}

double kernel_value_1d(const Hyperparameters& hp, int axis, double x, double x_prime) {
  hp.validate();
  if (axis < 0 || axis >= hp.dim) throw InputError("axis out of range");
  return hp.sigma2 *
         matern_correlation(hp.nu, hp.kappa[static_cast<std::size_t>(axis)], x - x_prime);
}

double product_kernel_value(const Hyperparameters& hp, std::span<const double> x,
                            std::span<const double> x_prime) {
  if (x.size() != static_cast<std::size_t>(hp.dim) || x_prime.size() != x.size()) {
    throw InputError("point dimension does not match hyperparameters");
  }
  double value = hp.sigma2;
  for (std::size_t a = 0; a < x.size(); ++a) {
    value *= matern_correlation(hp.nu, hp.kappa[a], x[a] - x_prime[a]);
  }
  return value;
}

}  // namespace torusrecon
