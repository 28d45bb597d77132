#include "fixtures.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fixtures {

namespace {

class FunctionSample : public torusrecon::SurfaceSample {
 public:
  FunctionSample(int dim, std::function<double(const double*)> f, double offset)
      : dim_(dim), f_(std::move(f)), offset_(offset) {}
  [[nodiscard]] std::vector<double> evaluate(const PointMatrix& x) const override {
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = f_(x.data() + r * dim_) + offset_;
    return out;
  }

 private:
  int dim_;
  std::function<double(const double*)> f_;
  double offset_;
};

std::vector<double> apply(int dim, const std::function<double(const double*)>& f, const PointMatrix& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = f(x.data() + r * dim);
  return out;
}

}  // namespace

Cloud sphere_cloud(int n, double radius, double cx, double cy, double cz) {
  Cloud c;
  c.points.resize(n, 3);
  c.normals.resize(n, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const double phi = golden * k;
    const double nx = r * std::cos(phi);
    const double ny = r * std::sin(phi);
    c.normals.row(k) << nx, ny, z;
    c.points.row(k) << cx + radius * nx, cy + radius * ny, cz + radius * z;
  }
  return c;
}

Cloud sphere_cap(int n, const double* dir, double threshold, double radius) {
  const Cloud full = sphere_cloud(n, radius);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < full.normals.rows(); ++r) {
    const double dot = full.normals(r, 0) * dir[0] + full.normals(r, 1) * dir[1] + full.normals(r, 2) * dir[2];
    if (dot >= threshold) keep.push_back(r);
  }
  Cloud c;
  c.points.resize(static_cast<Eigen::Index>(keep.size()), 3);
  c.normals.resize(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    c.points.row(static_cast<Eigen::Index>(k)) = full.points.row(keep[k]);
    c.normals.row(static_cast<Eigen::Index>(k)) = full.normals.row(keep[k]);
  }
  return c;
}

PointMatrix uniform_points(int m, int d, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  PointMatrix x(m, d);
  for (int r = 0; r < m; ++r) {
    for (int a = 0; a < d; ++a) x(r, a) = u(gen);
  }
  return x;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("torusrecon_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<double> DeterministicField::mean(const PointMatrix& x) const { return apply(dim_, f_, x); }

std::vector<double> DeterministicField::variance(const PointMatrix& x) const {
  return std::vector<double>(static_cast<std::size_t>(x.rows()), 0.0);
}

std::unique_ptr<torusrecon::SurfaceSample> DeterministicField::draw(std::uint64_t) const {
  return std::make_unique<FunctionSample>(dim_, f_, 0.0);
}

std::vector<double> ShiftedField::mean(const PointMatrix& x) const { return apply(dim_, f_, x); }

std::vector<double> ShiftedField::variance(const PointMatrix& x) const {
  return std::vector<double>(static_cast<std::size_t>(x.rows()), sd_ * sd_);
}

std::unique_ptr<torusrecon::SurfaceSample> ShiftedField::draw(std::uint64_t seed) const {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  return std::make_unique<FunctionSample>(dim_, f_, sd_ * z(gen));
}

torusrecon::ScalarFieldGrid sphere_grid(int n, double lo, double hi, double radius, double c) {
  const auto spec = torusrecon::GridSpec::cube(lo, hi, n);
  const auto nodes = spec.nodes();
  std::vector<double> v(static_cast<std::size_t>(nodes.rows()));
  for (Eigen::Index r = 0; r < nodes.rows(); ++r) {
    const double dx = nodes(r, 0) - c;
    const double dy = nodes(r, 1) - c;
    const double dz = nodes(r, 2) - c;
    v[static_cast<std::size_t>(r)] = radius - std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return torusrecon::ScalarFieldGrid(spec, std::move(v));
}

}  // namespace fixtures
