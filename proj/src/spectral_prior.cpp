#include "torusrecon/spectral_prior.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "torusrecon/errors.hpp"
#include "torusrecon/rng.hpp"

namespace torusrecon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> axis_weights(const Hyperparameters& hp, int axis, int bound) {
  const double kappa = hp.kappa[static_cast<std::size_t>(axis)];
  const double total = matern_weight_sum(hp.nu, kappa);
  std::vector<double> w(static_cast<std::size_t>(2 * bound + 1));
  for (int m = -bound; m <= bound; ++m) {
    w[static_cast<std::size_t>(m + bound)] = matern_weight(hp.nu, kappa, m) / total;
  }
  return w;
}

std::vector<double> lag(std::span<const double> x, std::span<const double> x_prime) {
  if (x.size() != x_prime.size()) throw InputError("point dimensions differ");
  std::vector<double> d(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) d[a] = x[a] - x_prime[a];
  return d;
}

}  // namespace

PriorCoefficients::PriorCoefficients(std::uint64_t seed, FrequencySet freqs, int components)
    : seed_(seed), freqs_(freqs), components_(components) {
  if (components < 1) throw InputError("component count must be >= 1");
  values_.resize(freqs_.size() * static_cast<std::size_t>(components) * 2);
  std::vector<int> n(static_cast<std::size_t>(freqs_.dim()));
  for (std::size_t k = 0; k < freqs_.size(); ++k) {
    freqs_.frequency(k, n);
    for (int i = 0; i < components; ++i) {
      const auto [a, b] = draw(seed, i, n);
      const std::size_t base = (k * static_cast<std::size_t>(components) + static_cast<std::size_t>(i)) * 2;
      values_[base] = a;
      values_[base + 1] = b;
    }
  }
}

std::pair<double, double> PriorCoefficients::draw(std::uint64_t seed, int component,
                                                  std::span<const int> n) {
  std::uint64_t key = stream_key(seed, RngStream::kPriorCoefficients);
  key = CounterRng::combine(key, static_cast<std::uint64_t>(component));
  for (int m : n) key = CounterRng::combine(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(m)));
  return CounterRng::normal_pair(key);
}

double product_spectral_weight(const Hyperparameters& hp, std::span<const int> n) {
  if (n.size() != static_cast<std::size_t>(hp.dim)) throw InputError("frequency dimension mismatch");
  double rho = hp.sigma2;
  for (std::size_t a = 0; a < n.size(); ++a) {
    rho *= matern_weight(hp.nu, hp.kappa[a], n[a]) / matern_weight_sum(hp.nu, hp.kappa[a]);
  }
  return rho;
}

SpectralSeries::SpectralSeries(const Hyperparameters& hp, FrequencySet freqs)
    : hp_(hp), freqs_(freqs) {
  hp_.validate();
  if (freqs_.dim() != hp_.dim) throw InputError("frequency set dimension does not match hyperparameters");
  const int d = freqs_.dim();
  const int bound = freqs_.bound();
  const std::size_t count = freqs_.size();
  std::vector<std::vector<double>> w;
  for (int a = 0; a < d; ++a) w.push_back(axis_weights(hp_, a, bound));

  rho_.resize(count);
  sqrt_rho_.resize(count);
  phi_.resize(count);
  cross_.assign(count * static_cast<std::size_t>(d), 0.0);
  fcoef_.assign(count * static_cast<std::size_t>(d), 0.0);
  std::vector<int> n(static_cast<std::size_t>(d));
  CompensatedSum variance;
  for (std::size_t k = 0; k < count; ++k) {
    freqs_.frequency(k, n);
    double rho = hp_.sigma2;
    double norm2 = 0.0;
    for (int a = 0; a < d; ++a) {
      const int m = n[static_cast<std::size_t>(a)];
      rho *= w[static_cast<std::size_t>(a)][static_cast<std::size_t>(m + bound)];
      norm2 += static_cast<double>(m) * m;
    }
    rho_[k] = rho;
    sqrt_rho_[k] = std::sqrt(rho);
    if (norm2 == 0.0) {
      phi_[k] = 0.0;
      continue;
    }
    phi_[k] = rho / (kTwoPi * kTwoPi * norm2);
    variance.add(phi_[k]);
    for (int i = 0; i < d; ++i) {
      const double ni = n[static_cast<std::size_t>(i)];
      cross_[static_cast<std::size_t>(i) * count + k] = ni * rho / (kTwoPi * norm2);
      fcoef_[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
          ni * sqrt_rho_[k] / (kTwoPi * norm2);
    }
  }
  f_variance_ = variance.value();
}

double SpectralSeries::f_kernel(std::span<const double> x, std::span<const double> x_prime) const {
  const auto delta = lag(x, x_prime);
  const AxisPhases ph(freqs_.bound(), delta);
  CompensatedSum sum;
  const double* phi = phi_.data();
  for_each_mode(freqs_, ph, [&](std::size_t k, double c, double) { sum.add(phi[k] * c); });
  return sum.value();
}

double SpectralSeries::cross_covariance(int i, std::span<const double> x,
                                        std::span<const double> x_prime) const {
  if (i < 0 || i >= dim()) throw InputError("component index out of range");
  const auto delta = lag(x, x_prime);
  const AxisPhases ph(freqs_.bound(), delta);
  CompensatedSum sum;
  const double* w = cross_weights(i).data();
  for_each_mode(freqs_, ph, [&](std::size_t k, double, double s) { sum.add(w[k] * s); });
  return sum.value();
}

void SpectralSeries::cross_covariance(std::span<const double> x, std::span<const double> x_prime,
                                      std::span<double> out) const {
  const int d = dim();
  const auto delta = lag(x, x_prime);
  const AxisPhases ph(freqs_.bound(), delta);
  std::array<CompensatedSum, kMaxDim> sums{};
  const std::size_t count = size();
  for_each_mode(freqs_, ph, [&](std::size_t k, double, double s) {
    for (int i = 0; i < d; ++i) sums[static_cast<std::size_t>(i)].add(cross_[static_cast<std::size_t>(i) * count + k] * s);
  });
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = sums[static_cast<std::size_t>(i)].value();
}

void SpectralSeries::check_coefficients(const PriorCoefficients& coeffs) const {
  const auto& cf = coeffs.frequencies();
  const bool same_shape = cf.bound() == freqs_.bound() && cf.dim() == freqs_.dim();
  const bool covers_zero = !cf.excludes_zero() || freqs_.excludes_zero();
  if (!same_shape || !covers_zero || coeffs.components() != dim()) {
    throw InputError("prior coefficients do not cover the frequency set (bound " +
                     std::to_string(cf.bound()) + " vs " + std::to_string(freqs_.bound()) + ")");
  }
}

std::size_t SpectralSeries::coefficient_index(const PriorCoefficients& coeffs, std::size_t k) const {
  if (coeffs.frequencies().excludes_zero() == freqs_.excludes_zero()) return k;
  // coefficients include n = 0, this series does not
  return k < (freqs_.full_size() - 1) / 2 ? k : k + 1;
}

void SpectralSeries::sample_v(const PriorCoefficients& coeffs, std::span<const double> x,
                              std::span<double> out) const {
  check_coefficients(coeffs);
  const int d = dim();
  const AxisPhases ph(freqs_.bound(), x);
  std::array<CompensatedSum, kMaxDim> sums{};
  const bool shifted = coeffs.frequencies().excludes_zero() != freqs_.excludes_zero();
  const std::size_t zero = (freqs_.full_size() - 1) / 2;
  const double* xi = coeffs.raw().data();
  for_each_mode(freqs_, ph, [&](std::size_t k, double c, double s) {
    const std::size_t kc = shifted && k >= zero ? k + 1 : k;
    const double* row = xi + kc * static_cast<std::size_t>(d) * 2;
    const double r = sqrt_rho_[k];
    for (int i = 0; i < d; ++i) {
      sums[static_cast<std::size_t>(i)].add(r * (row[2 * i] * c + row[2 * i + 1] * s));
    }
  });
  for (int i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = sums[static_cast<std::size_t>(i)].value();
}

double SpectralSeries::sample_f(const PriorCoefficients& coeffs, std::span<const double> x) const {
  check_coefficients(coeffs);
  const int d = dim();
  const AxisPhases ph(freqs_.bound(), x);
  CompensatedSum sum;
  const bool shifted = coeffs.frequencies().excludes_zero() != freqs_.excludes_zero();
  const std::size_t zero = (freqs_.full_size() - 1) / 2;
  const double* xi = coeffs.raw().data();
  for_each_mode(freqs_, ph, [&](std::size_t k, double c, double s) {
    const std::size_t kc = shifted && k >= zero ? k + 1 : k;
    const double* row = xi + kc * static_cast<std::size_t>(d) * 2;
    const double* g = fcoef_.data() + k * static_cast<std::size_t>(d);
    double term = 0.0;
    for (int i = 0; i < d; ++i) term += g[i] * (row[2 * i] * s - row[2 * i + 1] * c);
    sum.add(term);
  });
  return sum.value();
}

PriorCoefficients draw_prior_coefficients(std::uint64_t seed, const FrequencySet& freqs,
                                          int components) {
  return PriorCoefficients(seed, freqs, components);
}

std::vector<double> sample_prior_v(const PriorCoefficients& coeffs, const Hyperparameters& hp,
                                   const FrequencySet& freqs, std::span<const double> x) {
  const SpectralSeries series(hp, freqs);
  std::vector<double> out(static_cast<std::size_t>(hp.dim));
  series.sample_v(coeffs, x, out);
  return out;
}

double sample_prior_f(const PriorCoefficients& coeffs, const Hyperparameters& hp,
                      const FrequencySet& freqs, std::span<const double> x) {
  if (!freqs.excludes_zero()) throw InputError("the f series is undefined at n = 0; exclude it");
  return SpectralSeries(hp, freqs).sample_f(coeffs, x);
}

double prior_f_kernel(const Hyperparameters& hp, const FrequencySet& freqs,
                      std::span<const double> x, std::span<const double> x_prime) {
  if (!freqs.excludes_zero()) throw InputError("the f kernel is undefined at n = 0; exclude it");
  return SpectralSeries(hp, freqs).f_kernel(x, x_prime);
}

double cross_covariance(const Hyperparameters& hp, const FrequencySet& freqs, int i,
                        std::span<const double> x, std::span<const double> x_prime) {
  if (!freqs.excludes_zero()) throw InputError("the cross-covariance is undefined at n = 0; exclude it");
  if (i < 0 || i >= hp.dim) throw InputError("component index out of range");
  return SpectralSeries(hp, freqs).cross_covariance(i, x, x_prime);
}

}  // namespace torusrecon
