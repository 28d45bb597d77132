#include "oracles.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace oracle {

namespace {

const double kPi = std::numbers::pi;

using cd = std::complex<double>;

// Every n in [−F, F]^d except 0, first axis slowest.
std::vector<std::vector<int>> lattice(int bound, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> n(static_cast<std::size_t>(d), -bound);
  while (true) {
    bool zero = true;
    for (int v : n) zero = zero && v == 0;
    if (!zero) out.push_back(n);
    int a = d - 1;
    while (a >= 0 && n[static_cast<std::size_t>(a)] == bound) {
      n[static_cast<std::size_t>(a)] = -bound;
      --a;
    }
    if (a < 0) break;
    ++n[static_cast<std::size_t>(a)];
  }
  return out;
}

double norm2(const std::vector<int>& n) {
  double s = 0.0;
  for (int v : n) s += static_cast<double>(v) * v;
  return s;
}

}  // namespace

double raw_weight(double nu, double kappa, long n) {
  const double nn = static_cast<double>(n);
  return std::pow(2.0 * nu / (kappa * kappa) + 4.0 * kPi * kPi * nn * nn, -(nu + 0.5));
}

double summed_normalizer(double nu, double kappa) {
  static std::mutex mu;
  static std::map<std::pair<double, double>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(nu, kappa);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  constexpr long kTerms = 1000000;
  long double sum = 0.0L;
  for (long n = kTerms; n >= 1; --n) sum += 2.0L * raw_weight(nu, kappa, n);
  sum += raw_weight(nu, kappa, 0);
  // Both tails, midpoint-rule integral of (4π²x²)^{−(ν+1/2)} from kTerms + 1/2.
  const double x = kTerms + 0.5;
  const double p = 2.0 * nu + 1.0;
  const double tail = 2.0 * std::pow(4.0 * kPi * kPi, -(nu + 0.5)) * std::pow(x, 1.0 - p) / (p - 1.0);
  const double total = static_cast<double>(sum) + tail;
  cache.emplace(key, total);
  return total;
}

double mercer_correlation(double nu, double kappa, double lag, long bound) {
  const double s = summed_normalizer(nu, kappa);
  long double sum = 0.0L;
  for (long n = bound; n >= 1; --n) {
    sum += 2.0L * raw_weight(nu, kappa, n) * std::cos(2.0 * kPi * static_cast<double>(n) * lag);
  }
  sum += raw_weight(nu, kappa, 0);
  return static_cast<double>(sum) / s;
}

double mercer_tail(double nu, double kappa, long bound) {
  const double p = 2.0 * nu + 1.0;
  const double f = static_cast<double>(bound);
  return 2.0 * std::pow(4.0 * kPi * kPi, -(nu + 0.5)) * std::pow(f, 1.0 - p) / (p - 1.0) /
         summed_normalizer(nu, kappa);
}

double naive_matern32_unnormalized(double kappa, double lag) {
  const double r = lag - std::floor(lag);
  const double u = std::sqrt(3.0) * (r - 0.5) / kappa;
  const double c = kPi * kPi * kappa / 3.0 * (2.0 * kappa + std::sqrt(3.0) / std::tanh(std::sqrt(3.0) / (2.0 * kappa)));
  return c * std::cosh(u) - 2.0 * kPi * kPi * kappa * kappa / 3.0 * u * std::sinh(u);
}

double naive_matern32(double kappa, double lag) {
  return naive_matern32_unnormalized(kappa, lag) / naive_matern32_unnormalized(kappa, 0.0);
}

double lattice_rho(const Hyperparameters& hp, const std::vector<int>& n) {
  double rho = hp.sigma2;
  for (std::size_t a = 0; a < n.size(); ++a) {
    rho *= raw_weight(hp.nu, hp.kappa[a], n[a]) / summed_normalizer(hp.nu, hp.kappa[a]);
  }
  return rho;
}

double cross_covariance(const Hyperparameters& hp, int bound, int i, const double* x, const double* xp) {
  double sum = 0.0;
  for (const auto& n : lattice(bound, hp.dim)) {
    double phase = 0.0;
    for (int a = 0; a < hp.dim; ++a) phase += n[static_cast<std::size_t>(a)] * (x[a] - xp[a]);
    sum += n[static_cast<std::size_t>(i)] * lattice_rho(hp, n) / (2.0 * kPi * norm2(n)) * std::sin(2.0 * kPi * phase);
  }
  return sum;
}

double f_kernel(const Hyperparameters& hp, int bound, const double* x, const double* xp) {
  double sum = 0.0;
  for (const auto& n : lattice(bound, hp.dim)) {
    double phase = 0.0;
    for (int a = 0; a < hp.dim; ++a) phase += n[static_cast<std::size_t>(a)] * (x[a] - xp[a]);
    sum += lattice_rho(hp, n) / (4.0 * kPi * kPi * norm2(n)) * std::cos(2.0 * kPi * phase);
  }
  return sum;
}

DensePosterior::DensePosterior(const PointMatrix& points, const PointMatrix& normals,
                               const Hyperparameters& hp, int bound, long vv_bound)
    : points_(points), hp_(hp), bound_(bound) {
  const int d = hp.dim;
  const auto n = static_cast<int>(points.rows());
  system_ = Eigen::MatrixXd::Zero(n * d, n * d);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      double k = hp.sigma2;
      for (int ax = 0; ax < d; ++ax) {
        k *= mercer_correlation(hp.nu, hp.kappa[static_cast<std::size_t>(ax)], points(a, ax) - points(b, ax), vv_bound);
      }
      for (int i = 0; i < d; ++i) system_(a * d + i, b * d + i) = k;
    }
  }
  system_.diagonal().array() += hp.noise2;
  lu_.compute(system_);
  Eigen::VectorXd v(n * d);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < d; ++i) v[a * d + i] = -normals(a, i);
  }
  weights_ = lu_.solve(v);
  double sum = 0.0;
  for (int a = 0; a < n; ++a) sum += raw_mean(points.data() + a * d);
  isovalue_ = sum / n;
}

Eigen::VectorXd DensePosterior::cross_row(const double* x) const {
  const int d = hp_.dim;
  const auto n = static_cast<int>(points_.rows());
  Eigen::VectorXd row(n * d);
  for (int a = 0; a < n; ++a) {
    for (int i = 0; i < d; ++i) row[a * d + i] = cross_covariance(hp_, bound_, i, x, points_.data() + a * d);
  }
  return row;
}

double DensePosterior::raw_mean(const double* x) const { return cross_row(x).dot(weights_); }

double DensePosterior::covariance(const double* x, const double* xp) const {
  const Eigen::VectorXd r = cross_row(x);
  const Eigen::VectorXd rp = cross_row(xp);
  return f_kernel(hp_, bound_, x, xp) - r.dot(lu_.solve(rp));
}

std::vector<double> series_on_grid(const Hyperparameters& hp, int bound, const PointMatrix& points,
                                   const PointMatrix& alpha, double offset,
                                   const torusrecon::GridSpec& spec) {
  const int p = 2 * bound + 1;
  const std::size_t cube = static_cast<std::size_t>(p) * p * p;
  std::vector<cd> g(cube, cd(0.0, 0.0));
  // G(n) = Σ_i w_i(n) Σ_a α(a,i) e^{−2πi⟨n, x_a⟩}
  std::vector<std::array<cd, 3>> d(cube);
  for (auto& v : d) v = {cd(0), cd(0), cd(0)};
  std::vector<cd> e0(static_cast<std::size_t>(p)), e1(static_cast<std::size_t>(p)), e2(static_cast<std::size_t>(p));
  for (Eigen::Index a = 0; a < points.rows(); ++a) {
    for (int m = 0; m < p; ++m) {
      const double k = m - bound;
      e0[static_cast<std::size_t>(m)] = std::polar(1.0, -2.0 * kPi * k * points(a, 0));
      e1[static_cast<std::size_t>(m)] = std::polar(1.0, -2.0 * kPi * k * points(a, 1));
      e2[static_cast<std::size_t>(m)] = std::polar(1.0, -2.0 * kPi * k * points(a, 2));
    }
    const double al[3] = {alpha(a, 0), alpha(a, 1), alpha(a, 2)};
    std::size_t idx = 0;
    for (int m0 = 0; m0 < p; ++m0) {
      for (int m1 = 0; m1 < p; ++m1) {
        const cd e01 = e0[static_cast<std::size_t>(m0)] * e1[static_cast<std::size_t>(m1)];
        for (int m2 = 0; m2 < p; ++m2, ++idx) {
          const cd e = e01 * e2[static_cast<std::size_t>(m2)];
          auto& dv = d[idx];
          dv[0] += al[0] * e;
          dv[1] += al[1] * e;
          dv[2] += al[2] * e;
        }
      }
    }
  }
  std::vector<double> w1d[3];
  for (int ax = 0; ax < 3; ++ax) {
    const double s = summed_normalizer(hp.nu, hp.kappa[static_cast<std::size_t>(ax)]);
    for (int m = 0; m < p; ++m) w1d[ax].push_back(raw_weight(hp.nu, hp.kappa[static_cast<std::size_t>(ax)], m - bound) / s);
  }
  std::size_t idx = 0;
  for (int m0 = 0; m0 < p; ++m0) {
    for (int m1 = 0; m1 < p; ++m1) {
      for (int m2 = 0; m2 < p; ++m2, ++idx) {
        const double n[3] = {double(m0 - bound), double(m1 - bound), double(m2 - bound)};
        const double nn = n[0] * n[0] + n[1] * n[1] + n[2] * n[2];
        if (nn == 0.0) continue;
        const double rho = hp.sigma2 * w1d[0][static_cast<std::size_t>(m0)] * w1d[1][static_cast<std::size_t>(m1)] *
                           w1d[2][static_cast<std::size_t>(m2)];
        const double scale = rho / (2.0 * kPi * nn);
        g[idx] = scale * (n[0] * d[idx][0] + n[1] * d[idx][1] + n[2] * d[idx][2]);
      }
    }
  }
  // value(x) = Σ_n Im(e^{2πi⟨n,x⟩} G(n)), contracted one axis at a time.
  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const auto axis_phase = [&](int ax, int count) {
    std::vector<cd> ph(static_cast<std::size_t>(count) * p);
    for (int j = 0; j < count; ++j) {
      const double coord = spec.origin[static_cast<std::size_t>(ax)] + spec.spacing[static_cast<std::size_t>(ax)] * j;
      for (int m = 0; m < p; ++m) ph[static_cast<std::size_t>(j) * p + m] = std::polar(1.0, 2.0 * kPi * (m - bound) * coord);
    }
    return ph;
  };
  const auto px = axis_phase(0, nx), py = axis_phase(1, ny), pz = axis_phase(2, nz);
  std::vector<cd> h1(static_cast<std::size_t>(p) * p * nz);  // [m0][m1][k]
  for (int m0 = 0; m0 < p; ++m0) {
    for (int m1 = 0; m1 < p; ++m1) {
      const cd* row = &g[(static_cast<std::size_t>(m0) * p + m1) * p];
      for (int k = 0; k < nz; ++k) {
        cd s(0.0);
        for (int m2 = 0; m2 < p; ++m2) s += row[m2] * pz[static_cast<std::size_t>(k) * p + m2];
        h1[(static_cast<std::size_t>(m0) * p + m1) * nz + k] = s;
      }
    }
  }
  std::vector<cd> h2(static_cast<std::size_t>(p) * ny * nz);  // [m0][j][k]
  for (int m0 = 0; m0 < p; ++m0) {
    for (int j = 0; j < ny; ++j) {
      for (int k = 0; k < nz; ++k) {
        cd s(0.0);
        for (int m1 = 0; m1 < p; ++m1) s += h1[(static_cast<std::size_t>(m0) * p + m1) * nz + k] * py[static_cast<std::size_t>(j) * p + m1];
        h2[(static_cast<std::size_t>(m0) * ny + j) * nz + k] = s;
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        cd s(0.0);
        for (int m0 = 0; m0 < p; ++m0) s += h2[(static_cast<std::size_t>(m0) * ny + j) * nz + k] * px[static_cast<std::size_t>(i) * p + m0];
        out[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k)] = s.imag() - offset;
      }
    }
  }
  return out;
}

double point_triangle_distance(const std::array<double, 3>& p, const std::array<double, 3>& a,
                               const std::array<double, 3>& b, const std::array<double, 3>& c) {
  using V = Eigen::Vector3d;
  const V P(p[0], p[1], p[2]), A(a[0], a[1], a[2]), B(b[0], b[1], b[2]), C(c[0], c[1], c[2]);
  const V ab = B - A, ac = C - A, ap = P - A;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return (P - A).norm();
  const V bp = P - B;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return (P - B).norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return (P - (A + d1 / (d1 - d3) * ab)).norm();
  const V cp = P - C;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return (P - C).norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return (P - (A + d2 / (d2 - d6) * ac)).norm();
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    return (P - (B + (d4 - d3) / ((d4 - d3) + (d5 - d6)) * (C - B))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  return (P - (A + ab * (vb * denom) + ac * (vc * denom))).norm();
}

double hausdorff_to_sphere(const torusrecon::TriangleMesh& mesh, const std::array<double, 3>& centre,
                           double radius, int samples) {
  if (mesh.triangles.empty()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  const auto radial = [&](const std::array<double, 3>& v) {
    const double dx = v[0] - centre[0], dy = v[1] - centre[1], dz = v[2] - centre[2];
    return std::abs(std::sqrt(dx * dx + dy * dy + dz * dz) - radius);
  };
  for (const auto& t : mesh.triangles) {
    const auto& a = mesh.vertices[static_cast<std::size_t>(t[0])];
    const auto& b = mesh.vertices[static_cast<std::size_t>(t[1])];
    const auto& c = mesh.vertices[static_cast<std::size_t>(t[2])];
    const std::array<double, 3> g{(a[0] + b[0] + c[0]) / 3, (a[1] + b[1] + c[1]) / 3, (a[2] + b[2] + c[2]) / 3};
    worst = std::max({worst, radial(a), radial(b), radial(c), radial(g)});
  }
  // Sphere side: nearest triangle to each sample, pruned by centroid bounds.
  struct Tri {
    std::array<double, 3> a, b, c, g;
    double r;
  };
  std::vector<Tri> tris;
  for (const auto& t : mesh.triangles) {
    Tri tr{mesh.vertices[static_cast<std::size_t>(t[0])], mesh.vertices[static_cast<std::size_t>(t[1])],
           mesh.vertices[static_cast<std::size_t>(t[2])], {}, 0.0};
    for (int k = 0; k < 3; ++k) tr.g[static_cast<std::size_t>(k)] = (tr.a[static_cast<std::size_t>(k)] + tr.b[static_cast<std::size_t>(k)] + tr.c[static_cast<std::size_t>(k)]) / 3;
    const auto dist = [](const std::array<double, 3>& u, const std::array<double, 3>& v) {
      return std::sqrt((u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) + (u[2] - v[2]) * (u[2] - v[2]));
    };
    tr.r = std::max({dist(tr.g, tr.a), dist(tr.g, tr.b), dist(tr.g, tr.c)});
    tris.push_back(tr);
  }
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < samples; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / samples;
    const double rr = std::sqrt(1.0 - z * z);
    const std::array<double, 3> p{centre[0] + radius * rr * std::cos(golden * k),
                                  centre[1] + radius * rr * std::sin(golden * k), centre[2] + radius * z};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& tr : tris) {
      const double dg = std::sqrt((p[0] - tr.g[0]) * (p[0] - tr.g[0]) + (p[1] - tr.g[1]) * (p[1] - tr.g[1]) +
                                  (p[2] - tr.g[2]) * (p[2] - tr.g[2]));
      if (dg - tr.r >= best) continue;
      best = std::min(best, point_triangle_distance(p, tr.a, tr.b, tr.c));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

bool watertight(const torusrecon::TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(e)];
      const int b = t[static_cast<std::size_t>((e + 1) % 3)];
      ++uses[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [edge, count] : uses) {
    if (count != 2) return false;
  }
  return !uses.empty();
}

long euler_characteristic(const torusrecon::TriangleMesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<std::size_t>(e)];
      const int b = t[static_cast<std::size_t>((e + 1) % 3)];
      edges[{std::min(a, b), std::max(a, b)}] = 1;
      used[static_cast<std::size_t>(a)] = true;
    }
  }
  long v = 0;
  for (bool u : used) v += u ? 1 : 0;
  return v - static_cast<long>(edges.size()) + static_cast<long>(mesh.triangles.size());
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
