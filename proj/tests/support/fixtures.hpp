#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "torusrecon/contouring.hpp"
#include "torusrecon/kernel_solver.hpp"
#include "torusrecon/surface_field.hpp"

namespace fixtures {

using torusrecon::PointMatrix;

struct Cloud {
  PointMatrix points;
  PointMatrix normals;  // outward, unit
};

/// Fibonacci-lattice sphere, outward normals.
Cloud sphere_cloud(int n, double radius = 0.35, double cx = 0.5, double cy = 0.5, double cz = 0.5);

/// The points of sphere_cloud(n) whose outward normal satisfies normal · dir ≥ threshold.
Cloud sphere_cap(int n, const double* dir, double threshold, double radius = 0.35);

/// Uniform points in [lo, hi]^d from a fixed seed.
PointMatrix uniform_points(int m, int d, double lo, double hi, std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

/// Deterministic stand-in distribution: every sample equals the mean, variance 0.
class DeterministicField : public torusrecon::SurfaceDistribution {
 public:
  DeterministicField(int dim, std::function<double(const double*)> f) : dim_(dim), f_(std::move(f)) {}
  [[nodiscard]] int dim() const override { return dim_; }
  [[nodiscard]] std::vector<double> mean(const PointMatrix& x) const override;
  [[nodiscard]] std::vector<double> variance(const PointMatrix& x) const override;
  [[nodiscard]] std::unique_ptr<torusrecon::SurfaceSample> draw(std::uint64_t seed) const override;

 private:
  int dim_;
  std::function<double(const double*)> f_;
};

/// Mean function plus a per-sample constant offset s·N(0,1) drawn from the seed,
/// variance s². Samples are ordered by their offsets, so events nest.
class ShiftedField : public torusrecon::SurfaceDistribution {
 public:
  ShiftedField(int dim, std::function<double(const double*)> f, double sd) : dim_(dim), f_(std::move(f)), sd_(sd) {}
  [[nodiscard]] int dim() const override { return dim_; }
  [[nodiscard]] std::vector<double> mean(const PointMatrix& x) const override;
  [[nodiscard]] std::vector<double> variance(const PointMatrix& x) const override;
  [[nodiscard]] std::unique_ptr<torusrecon::SurfaceSample> draw(std::uint64_t seed) const override;

 private:
  int dim_;
  std::function<double(const double*)> f_;
  double sd_;
};

/// Analytic field r − |x − c| on a lattice (positive inside).
torusrecon::ScalarFieldGrid sphere_grid(int n, double lo, double hi, double radius, double c = 0.5);

}  // namespace fixtures
