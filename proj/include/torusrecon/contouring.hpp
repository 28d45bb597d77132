#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <vector>

#include "torusrecon/kernel_solver.hpp"

namespace torusrecon {

/// Regular 3-d lattice origin + spacing ⊙ (i, j, k), 0 ≤ i < dims[0], ...
struct GridSpec {
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::array<int, 3> dims{2, 2, 2};

  /// Lattice of n points per axis spanning [lo, hi] on every axis.
  static GridSpec cube(double lo, double hi, int n);
  /// Throws InputError unless every dims entry is ≥ 2 and spacings are > 0.
  void validate() const;
  [[nodiscard]] std::size_t node_count() const noexcept;
  /// All lattice points, x fastest.
  [[nodiscard]] PointMatrix nodes() const;
};

/// Field values on a lattice, x fastest. Creation is counted by Instrumentation.
class ScalarFieldGrid {
 public:
  ScalarFieldGrid(GridSpec spec, std::vector<double> values);

  [[nodiscard]] const GridSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double at(int i, int j, int k) const {
    return values_[static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(spec_.dims[0]) *
                       (static_cast<std::size_t>(j) + static_cast<std::size_t>(spec_.dims[1]) * static_cast<std::size_t>(k))];
  }

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

using FieldEvaluator = std::function<std::vector<double>(const PointMatrix&)>;

/// Evaluates `field` once at every lattice node.
ScalarFieldGrid sample_field(const FieldEvaluator& field, const GridSpec& spec);

struct TriangleMesh {
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Level set {f = iso} by table-driven marching cubes with linear edge
/// interpolation. Vertices on shared edges are merged; triangle normals point
/// towards decreasing f. Saddle faces use the table's default split, so tunnels
/// are possible on ambiguous cells.
TriangleMesh marching_cubes(const ScalarFieldGrid& grid, double iso = 0.0);

/// ASCII OBJ, 1-based face indices, 17 significant digits.
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

}  // namespace torusrecon
