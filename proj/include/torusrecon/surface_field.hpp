#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "torusrecon/kernel_solver.hpp"

namespace torusrecon {

/// One realisation of a random implicit function, evaluable anywhere.
class SurfaceSample {
 public:
  virtual ~SurfaceSample() = default;
  [[nodiscard]] virtual std::vector<double> evaluate(const PointMatrix& x) const = 0;
};

/// A Gaussian random implicit function f with f > 0 inside the surface.
/// Queries only see this interface, so they can run against stand-in models.
class SurfaceDistribution {
 public:
  virtual ~SurfaceDistribution() = default;
  [[nodiscard]] virtual int dim() const = 0;
  [[nodiscard]] virtual std::vector<double> mean(const PointMatrix& x) const = 0;
  [[nodiscard]] virtual std::vector<double> variance(const PointMatrix& x) const = 0;
  /// Deterministic in `seed`.
  [[nodiscard]] virtual std::unique_ptr<SurfaceSample> draw(std::uint64_t seed) const = 0;
};

}  // namespace torusrecon
