#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "torusrecon/frequency_set.hpp"
#include "torusrecon/torus_kernels.hpp"

namespace torusrecon {

/// Standard-normal coefficients ξ_{i,n,j} of one joint prior draw of (v, f).
///
/// Each pair (ξ_{i,n,1}, ξ_{i,n,2}) is keyed by (seed, i, n), so the values do not
/// depend on the truncation bound, the evaluation order or the thread count.
class PriorCoefficients {
 public:
  PriorCoefficients(std::uint64_t seed, FrequencySet freqs, int components);

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const FrequencySet& frequencies() const noexcept { return freqs_; }
  [[nodiscard]] int components() const noexcept { return components_; }

  /// ξ_{i,n_k,j} for j ∈ {0, 1}.
  [[nodiscard]] double xi(std::size_t k, int i, int j) const {
    return values_[(k * static_cast<std::size_t>(components_) + static_cast<std::size_t>(i)) * 2 +
                   static_cast<std::size_t>(j)];
  }
  [[nodiscard]] std::span<const double> raw() const noexcept { return values_; }

  /// Coefficient for a single key, without materialising a set.
  static std::pair<double, double> draw(std::uint64_t seed, int component, std::span<const int> n);

 private:
  std::uint64_t seed_;
  FrequencySet freqs_;
  int components_;
  std::vector<double> values_;  // [k][i][j]
};

/// Fourier-domain quantities of the prior pair (v, f) with Δf = ∇·v on the
/// unit-period torus, for one truncation.
///
/// With ρ(n) the product spectral measure of every component of v:
///   v_i(x) = Σ_n √ρ(n) (ξ_{i,n,1} cos 2π⟨n,x⟩ + ξ_{i,n,2} sin 2π⟨n,x⟩)
///   f(x)   = Σ_{n≠0} Σ_i g_i(n) (ξ_{i,n,1} sin 2π⟨n,x⟩ − ξ_{i,n,2} cos 2π⟨n,x⟩)
/// with g_i(n) = n_i √ρ(n) / (2π‖n‖²). The 1/(2π) makes the Poisson equation hold
/// in unit-period coordinates. Consequences of the joint series:
///   Cov(f(x), v_i(x')) = Σ_{n≠0} n_i ρ(n) / (2π‖n‖²) · sin 2π⟨n, x − x'⟩
///   Cov(f(x), f(x'))   = Σ_{n≠0} φ(n) cos 2π⟨n, x − x'⟩,  φ(n) = ρ(n) / (4π²‖n‖²)
class SpectralSeries {
 public:
  SpectralSeries(const Hyperparameters& hp, FrequencySet freqs);

  [[nodiscard]] const FrequencySet& frequencies() const noexcept { return freqs_; }
  [[nodiscard]] const Hyperparameters& hyperparameters() const noexcept { return hp_; }
  [[nodiscard]] int dim() const noexcept { return freqs_.dim(); }
  [[nodiscard]] std::size_t size() const noexcept { return freqs_.size(); }

  [[nodiscard]] std::span<const double> rho() const noexcept { return rho_; }
  [[nodiscard]] std::span<const double> phi() const noexcept { return phi_; }
  /// n_i ρ(n) / (2π‖n‖²); zero at n = 0.
  [[nodiscard]] std::span<const double> cross_weights(int i) const {
    return {cross_.data() + static_cast<std::size_t>(i) * size(), size()};
  }

  /// Σ φ(n): prior variance of f under this truncation.
  [[nodiscard]] double f_variance() const noexcept { return f_variance_; }

  [[nodiscard]] double f_kernel(std::span<const double> x, std::span<const double> x_prime) const;
  [[nodiscard]] double cross_covariance(int i, std::span<const double> x,
                                        std::span<const double> x_prime) const;
  /// All components at once; `out` has dim() entries.
  void cross_covariance(std::span<const double> x, std::span<const double> x_prime,
                        std::span<double> out) const;

  /// Prior draws. `coeffs` must share the bound and dimension of this series.
  void sample_v(const PriorCoefficients& coeffs, std::span<const double> x,
                std::span<double> out) const;
  [[nodiscard]] double sample_f(const PriorCoefficients& coeffs, std::span<const double> x) const;

 private:
  void check_coefficients(const PriorCoefficients& coeffs) const;
  [[nodiscard]] std::size_t coefficient_index(const PriorCoefficients& coeffs, std::size_t k) const;

  Hyperparameters hp_;
  FrequencySet freqs_;
  std::vector<double> rho_;
  std::vector<double> sqrt_rho_;
  std::vector<double> phi_;
  std::vector<double> cross_;   // [i][k]
  std::vector<double> fcoef_;   // [k][i], g_i(n)
  double f_variance_ = 0.0;
};

/// Product spectral measure ρ(n) = sigma2 · Π_a ρ̃_a(n_a) for one frequency vector.
double product_spectral_weight(const Hyperparameters& hp, std::span<const int> n);

PriorCoefficients draw_prior_coefficients(std::uint64_t seed, const FrequencySet& freqs,
                                          int components);

std::vector<double> sample_prior_v(const PriorCoefficients& coeffs, const Hyperparameters& hp,
                                   const FrequencySet& freqs, std::span<const double> x);
/// Throws InputError when `freqs` contains n = 0.
double sample_prior_f(const PriorCoefficients& coeffs, const Hyperparameters& hp,
                      const FrequencySet& freqs, std::span<const double> x);
double prior_f_kernel(const Hyperparameters& hp, const FrequencySet& freqs,
                      std::span<const double> x, std::span<const double> x_prime);
/// Cov(f(x), v_i(x')). Throws InputError for a bad component or a set containing 0.
double cross_covariance(const Hyperparameters& hp, const FrequencySet& freqs, int i,
                        std::span<const double> x, std::span<const double> x_prime);

}  // namespace torusrecon
