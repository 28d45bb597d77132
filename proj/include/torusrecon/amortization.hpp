#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "torusrecon/spectral_prior.hpp"

namespace torusrecon {

/// Lag-indexed samples of the cross-covariance k_{f,v_i} on a warped lattice,
/// evaluated elsewhere by multilinear interpolation.
///
/// Per-axis nodes are t = u⁵/2 for `grid_n` uniform u in [-1, 1]; an even
/// `grid_n` also gets t = 0, so zero lag is always a node. The two ends ±1/2
/// are the same torus point and share storage, leaving `grid_n` (even) or
/// `grid_n - 1` (odd) distinct nodes per axis.
class AmortizationTable {
 public:
  static AmortizationTable build(const SpectralSeries& cross, int grid_n);
  static AmortizationTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  [[nodiscard]] int grid_n() const noexcept { return grid_n_; }
  [[nodiscard]] int dim() const noexcept { return hp_.dim; }
  [[nodiscard]] int components() const noexcept { return hp_.dim; }
  [[nodiscard]] int frequency_bound() const noexcept { return frequency_bound_; }
  [[nodiscard]] const Hyperparameters& hyperparameters() const noexcept { return hp_; }

  /// Distinct node offsets along one axis, ascending from -1/2.
  [[nodiscard]] std::span<const double> axis_nodes() const noexcept {
    return {positions_.data(), positions_.size() - 1};
  }
  [[nodiscard]] std::size_t node_count() const noexcept;
  /// Stored value at a node given per-axis node indices.
  [[nodiscard]] double node_value(std::span<const int> node, int component) const;

  /// Interpolated Cov(f(x), v_i(x')) for the lag x - x'.
  [[nodiscard]] double lookup(int component, std::span<const double> x,
                              std::span<const double> x_prime) const;
  /// All components at the lag `offset` (wrapped to [-1/2, 1/2)).
  void lookup_all(std::span<const double> offset, std::span<double> out) const;

  /// Three-dimensional fast path: Σ_i w_i k_{f,v_i}(offset).
  [[nodiscard]] double weighted_lookup3(const double* offset, const double* weights) const;

 private:
  AmortizationTable(Hyperparameters hp, int grid_n, int frequency_bound);

  struct Cell {
    int lo;     // storage index of the lower node
    int hi;     // storage index of the upper node
    double w;   // weight of the upper node
  };
  [[nodiscard]] Cell locate(double offset) const;

  Hyperparameters hp_;
  int grid_n_;
  int frequency_bound_;
  std::vector<double> positions_;  // ascending, first -1/2, last +1/2
  std::vector<int> bin_start_;
  std::vector<double> values_;     // node-major (x fastest), component-minor
};

inline AmortizationTable build_amortization_table(const SpectralSeries& cross, int grid_n) {
  return AmortizationTable::build(cross, grid_n);
}

/// Interpolated cross-covariance, exact at nodes. Throws InputError for a bad component.
double cross_covariance_amortized(const AmortizationTable& table, int component,
                                  std::span<const double> x, std::span<const double> x_prime);

}  // namespace torusrecon
