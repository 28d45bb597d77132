#include "torusrecon/contouring.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <unordered_map>

#include "torusrecon/errors.hpp"
#include "torusrecon/instrumentation.hpp"

namespace torusrecon {

namespace {

#include "mc_tables.inc"

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

double triangle_area2(const std::array<double, 3>& a, const std::array<double, 3>& b,
                      const std::array<double, 3>& c) {
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double v[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double n[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  return std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

}  // namespace

GridSpec GridSpec::cube(double lo, double hi, int n) {
  GridSpec spec;
  const double h = n > 1 ? (hi - lo) / (n - 1) : 0.0;
  spec.origin = {lo, lo, lo};
  spec.spacing = {h, h, h};
  spec.dims = {n, n, n};
  return spec;
}

void GridSpec::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (dims[static_cast<std::size_t>(a)] < 2) throw InputError("grid needs at least 2 nodes per axis");
    if (!(spacing[static_cast<std::size_t>(a)] > 0.0) || !std::isfinite(spacing[static_cast<std::size_t>(a)])) {
      throw InputError("grid spacing must be > 0");
    }
    if (!std::isfinite(origin[static_cast<std::size_t>(a)])) throw InputError("grid origin must be finite");
  }
}

std::size_t GridSpec::node_count() const noexcept {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
         static_cast<std::size_t>(dims[2]);
}

PointMatrix GridSpec::nodes() const {
  PointMatrix p(static_cast<Eigen::Index>(node_count()), 3);
  Eigen::Index r = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i, ++r) {
        p(r, 0) = origin[0] + spacing[0] * i;
        p(r, 1) = origin[1] + spacing[1] * j;
        p(r, 2) = origin[2] + spacing[2] * k;
      }
    }
  }
  return p;
}

ScalarFieldGrid::ScalarFieldGrid(GridSpec spec, std::vector<double> values)
    : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.node_count()) throw InputError("grid value count does not match dims");
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("grid values must be finite");
  }
  Instrumentation::count_grid_allocation();
}

ScalarFieldGrid sample_field(const FieldEvaluator& field, const GridSpec& spec) {
  spec.validate();
  auto values = field(spec.nodes());
  return ScalarFieldGrid(spec, std::move(values));
}

TriangleMesh marching_cubes(const ScalarFieldGrid& grid, double iso) {
  const auto& spec = grid.spec();
  const int nx = spec.dims[0];
  const int ny = spec.dims[1];
  const int nz = spec.dims[2];
  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  const auto node_id = [&](int i, int j, int k) {
    return static_cast<std::uint64_t>(i) +
           static_cast<std::uint64_t>(nx) * (static_cast<std::uint64_t>(j) + static_cast<std::uint64_t>(ny) * static_cast<std::uint64_t>(k));
  };

  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        double value[8];
        int config = 0;
        for (int c = 0; c < 8; ++c) {
          value[c] = grid.at(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (value[c] < iso) config |= 1 << c;
        }
        const int* row = kTriTable[config];
        if (row[0] < 0) continue;
        int vertex_of_edge[12];
        for (int e = 0; e < 12; ++e) vertex_of_edge[e] = -1;
        for (int t = 0; row[t] >= 0; ++t) {
          const int e = row[t];
          if (vertex_of_edge[e] >= 0) continue;
          const int c0 = kEdge[e][0];
          const int c1 = kEdge[e][1];
          // Lower-index end of the edge in lattice order, and its axis.
          int lo = c0;
          int hi = c1;
          int axis = 0;
          for (int a = 0; a < 3; ++a) {
            if (kCorner[c0][a] != kCorner[c1][a]) axis = a;
          }
          if (kCorner[c0][axis] > kCorner[c1][axis]) std::swap(lo, hi);
          const std::uint64_t key =
              3 * node_id(i + kCorner[lo][0], j + kCorner[lo][1], k + kCorner[lo][2]) + static_cast<std::uint64_t>(axis);
          const auto found = edge_vertex.find(key);
          if (found != edge_vertex.end()) {
            vertex_of_edge[e] = found->second;
            continue;
          }
          const double t_param = (iso - value[lo]) / (value[hi] - value[lo]);
          std::array<double, 3> p{};
          for (int a = 0; a < 3; ++a) {
            const double base = static_cast<double>((a == 0 ? i : a == 1 ? j : k) + kCorner[lo][a]);
            const double coord = a == axis ? base + t_param : base;
            p[static_cast<std::size_t>(a)] =
                spec.origin[static_cast<std::size_t>(a)] + spec.spacing[static_cast<std::size_t>(a)] * coord;
          }
          const int index = static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(p);
          edge_vertex.emplace(key, index);
          vertex_of_edge[e] = index;
        }
        for (int t = 0; row[t] >= 0; t += 3) {
          // With corners below the level flagged, the table's winding faces decreasing f.
          const std::array<int, 3> tri{vertex_of_edge[row[t]], vertex_of_edge[row[t + 1]],
                                       vertex_of_edge[row[t + 2]]};
          if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
          const auto& va = mesh.vertices[static_cast<std::size_t>(tri[0])];
          const auto& vb = mesh.vertices[static_cast<std::size_t>(tri[1])];
          const auto& vc = mesh.vertices[static_cast<std::size_t>(tri[2])];
          if (triangle_area2(va, vb, vc) <= 2e-12) continue;
          mesh.triangles.push_back(tri);
        }
      }
    }
  }
  return mesh;
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace torusrecon
