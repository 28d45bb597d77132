#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "torusrecon/surface_field.hpp"

namespace torusrecon {

/// Straight ray sampled at t = 0, step, 2·step, ... ≤ t_max.
struct Ray {
  std::vector<double> origin;
  std::vector<double> direction;  // unit length
  double t_max = 1.0;
  double step = 0.01;

  /// Throws InputError unless ‖direction‖ = 1 ± 1e-9 and 0 < step ≤ t_max.
  void validate(int dim) const;
  [[nodiscard]] std::vector<double> parameters() const;
  [[nodiscard]] PointMatrix points() const;
};

struct QueryEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

/// Posterior samples shared across queries, so related queries see common random numbers.
class SamplePool {
 public:
  SamplePool(const SurfaceDistribution& dist, int n_samples, std::uint64_t seed);

  [[nodiscard]] int size() const noexcept { return static_cast<int>(samples_.size()); }
  [[nodiscard]] const SurfaceSample& operator[](int k) const { return *samples_[static_cast<std::size_t>(k)]; }

  /// Seed of the k-th sample of a pool drawn with `seed`.
  static std::uint64_t sample_seed(std::uint64_t seed, int k);

 private:
  std::vector<std::unique_ptr<SurfaceSample>> samples_;
};

/// Φ(μ/σ); with σ = 0 the indicator of μ > 0. Analytic, so std_error = 0.
QueryEstimate occupancy_probability(const SurfaceDistribution& dist, std::span<const double> x);
std::vector<double> occupancy_probabilities(const SurfaceDistribution& dist, const PointMatrix& x);

enum class CollisionMode {
  kAny,  // at least one probe inside
  kAll,  // every probe inside
};

/// Fraction of posterior samples with f > 0 at any/all probes; binomial standard error.
QueryEstimate collision_probability(const SurfaceDistribution& dist, const PointMatrix& probes,
                                    CollisionMode mode, int n_samples, std::uint64_t seed);
QueryEstimate collision_probability(const SamplePool& pool, const PointMatrix& probes,
                                    CollisionMode mode);

struct TransmittancePoint {
  double t = 0.0;
  double value = 0.0;      // fraction of samples with f ≤ 0 at every ray point up to t
  double std_error = 0.0;
};

/// Nonincreasing in t for every run: hit detection is a running maximum over the ray.
std::vector<TransmittancePoint> transmittance(const SurfaceDistribution& dist, const Ray& ray,
                                              int n_samples, std::uint64_t seed);
std::vector<TransmittancePoint> transmittance(const SamplePool& pool, const Ray& ray);

/// step · #{t : eps ≤ T(t) ≤ 1 − eps}; lower is better. Jackknife standard error
/// over samples. Throws InputError unless 0 < eps < 1/2.
QueryEstimate next_view_score(const SurfaceDistribution& dist, const Ray& ray, double eps,
                              int n_samples, std::uint64_t seed);
QueryEstimate next_view_score(const SamplePool& pool, const Ray& ray, double eps);

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Monte Carlo estimate of ∫_box (1/2 − |P(x ∈ Ω) − 1/2|) dx over `n_points`
/// uniform points keyed by `seed`. Throws InputError for an empty or out-of-chart box.
QueryEstimate total_uncertainty(const SurfaceDistribution& dist, const Box& box, int n_points,
                                std::uint64_t seed);

/// g(x) = μ(x) − η σ(x). Throws InputError for η < 0.
std::vector<double> hitbox_field(const SurfaceDistribution& dist, double eta, const PointMatrix& x);
double hitbox_field(const SurfaceDistribution& dist, double eta, std::span<const double> x);

}  // namespace torusrecon
