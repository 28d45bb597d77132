#include "torusrecon/surface_queries.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "torusrecon/errors.hpp"
#include "torusrecon/rng.hpp"

namespace torusrecon {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double binomial_error(double p, int n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

void require_samples(int n_samples) {
  if (n_samples < 1) throw InputError("n_samples must be >= 1");
}

PointMatrix single_point(std::span<const double> x) {
  PointMatrix p(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t a = 0; a < x.size(); ++a) p(0, static_cast<Eigen::Index>(a)) = x[a];
  return p;
}

// Per sample, index of the first ray point with f > 0 (or the point count).
std::vector<std::size_t> first_hits(const SamplePool& pool, const PointMatrix& pts) {
  std::vector<std::size_t> hits(static_cast<std::size_t>(pool.size()));
  for (int s = 0; s < pool.size(); ++s) {
    const auto f = pool[s].evaluate(pts);
    std::size_t k = 0;
    while (k < f.size() && !(f[k] > 0.0)) ++k;
    hits[static_cast<std::size_t>(s)] = k;
  }
  return hits;
}

}  // namespace

void Ray::validate(int dim) const {
  if (origin.size() != static_cast<std::size_t>(dim) || direction.size() != static_cast<std::size_t>(dim)) {
    throw InputError("ray origin and direction must have " + std::to_string(dim) + " coordinates");
  }
  double norm2 = 0.0;
  for (double c : direction) norm2 += c * c;
  if (!(std::abs(std::sqrt(norm2) - 1.0) <= 1e-9)) throw InputError("ray direction must have unit length");
  if (!(step > 0.0) || !(step <= t_max)) throw InputError("ray needs 0 < step <= t_max");
}

std::vector<double> Ray::parameters() const {
  const auto count = static_cast<std::size_t>(std::floor(t_max / step + 1e-9)) + 1;
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = static_cast<double>(k) * step;
  return t;
}

PointMatrix Ray::points() const {
  const auto t = parameters();
  PointMatrix p(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(origin.size()));
  for (std::size_t k = 0; k < t.size(); ++k) {
    for (std::size_t a = 0; a < origin.size(); ++a) {
      p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = origin[a] + t[k] * direction[a];
    }
  }
  return p;
}

std::uint64_t SamplePool::sample_seed(std::uint64_t seed, int k) {
  return CounterRng::combine(stream_key(seed, RngStream::kSampleSeeds), static_cast<std::uint64_t>(k));
}

SamplePool::SamplePool(const SurfaceDistribution& dist, int n_samples, std::uint64_t seed) {
  require_samples(n_samples);
  samples_.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k) samples_.push_back(dist.draw(sample_seed(seed, k)));
}

std::vector<double> occupancy_probabilities(const SurfaceDistribution& dist, const PointMatrix& x) {
  const auto mu = dist.mean(x);
  const auto var = dist.variance(x);
  std::vector<double> p(mu.size());
  for (std::size_t m = 0; m < mu.size(); ++m) {
    const double sd = std::sqrt(std::max(var[m], 0.0));
    p[m] = sd > 0.0 ? normal_cdf(mu[m] / sd) : (mu[m] > 0.0 ? 1.0 : 0.0);
  }
  return p;
}

QueryEstimate occupancy_probability(const SurfaceDistribution& dist, std::span<const double> x) {
  return {occupancy_probabilities(dist, single_point(x))[0], 0.0, 0};
}

QueryEstimate collision_probability(const SamplePool& pool, const PointMatrix& probes,
                                    CollisionMode mode) {
  if (probes.rows() == 0) throw InputError("collision query needs at least one probe");
  int events = 0;
  for (int s = 0; s < pool.size(); ++s) {
    const auto f = pool[s].evaluate(probes);
    const auto inside = [](double v) { return v > 0.0; };
    const bool event = mode == CollisionMode::kAll ? std::all_of(f.begin(), f.end(), inside)
                                                   : std::any_of(f.begin(), f.end(), inside);
    events += event ? 1 : 0;
  }
  const double p = static_cast<double>(events) / pool.size();
  return {p, binomial_error(p, pool.size()), pool.size()};
}

QueryEstimate collision_probability(const SurfaceDistribution& dist, const PointMatrix& probes,
                                    CollisionMode mode, int n_samples, std::uint64_t seed) {
  if (probes.rows() == 0) throw InputError("collision query needs at least one probe");
  return collision_probability(SamplePool(dist, n_samples, seed), probes, mode);
}

std::vector<TransmittancePoint> transmittance(const SamplePool& pool, const Ray& ray) {
  ray.validate(static_cast<int>(ray.origin.size()));
  const auto t = ray.parameters();
  const auto hits = first_hits(pool, ray.points());
  // misses[k]: samples whose first hit lies beyond ray point k
  std::vector<int> misses(t.size() + 1, 0);
  for (std::size_t h : hits) ++misses[h];
  std::vector<TransmittancePoint> out(t.size());
  int remaining = pool.size();
  for (std::size_t k = 0; k < t.size(); ++k) {
    remaining -= misses[k];
    const double value = static_cast<double>(remaining) / pool.size();
    out[k] = {t[k], value, binomial_error(value, pool.size())};
  }
  return out;
}

std::vector<TransmittancePoint> transmittance(const SurfaceDistribution& dist, const Ray& ray,
                                              int n_samples, std::uint64_t seed) {
  ray.validate(dist.dim());
  return transmittance(SamplePool(dist, n_samples, seed), ray);
}

QueryEstimate next_view_score(const SamplePool& pool, const Ray& ray, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw InputError("next-view threshold must lie in (0, 1/2)");
  ray.validate(static_cast<int>(ray.origin.size()));
  const auto t = ray.parameters();
  const auto hits = first_hits(pool, ray.points());
  const int s_count = pool.size();
  std::vector<int> alive(t.size(), 0);  // samples not yet hit at point k
  for (std::size_t h : hits) {
    for (std::size_t k = 0; k < std::min(h, t.size()); ++k) ++alive[k];
  }
  const auto score_of = [&](auto count_at, double total) {
    double score = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double tr = count_at(k) / total;
      if (tr >= eps && tr <= 1.0 - eps) score += ray.step;
    }
    return score;
  };
  const double full = score_of([&](std::size_t k) { return static_cast<double>(alive[k]); }, s_count);
  double se = 0.0;
  if (s_count > 1) {
    std::vector<double> loo(static_cast<std::size_t>(s_count));
    for (int s = 0; s < s_count; ++s) {
      const std::size_t h = hits[static_cast<std::size_t>(s)];
      loo[static_cast<std::size_t>(s)] = score_of(
          [&](std::size_t k) { return static_cast<double>(alive[k] - (k < h ? 1 : 0)); }, s_count - 1.0);
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / s_count;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    se = std::sqrt((s_count - 1.0) / s_count * ss);
  }
  return {full, se, s_count};
}

QueryEstimate next_view_score(const SurfaceDistribution& dist, const Ray& ray, double eps,
                              int n_samples, std::uint64_t seed) {
  ray.validate(dist.dim());
  if (!(eps > 0.0 && eps < 0.5)) throw InputError("next-view threshold must lie in (0, 1/2)");
  return next_view_score(SamplePool(dist, n_samples, seed), ray, eps);
}

QueryEstimate total_uncertainty(const SurfaceDistribution& dist, const Box& box, int n_points,
                                std::uint64_t seed) {
  const int d = dist.dim();
  if (box.lo.size() != static_cast<std::size_t>(d) || box.hi.size() != static_cast<std::size_t>(d)) {
    throw InputError("box corners must have " + std::to_string(d) + " coordinates");
  }
  double volume = 1.0;
  for (int a = 0; a < d; ++a) {
    const double lo = box.lo[static_cast<std::size_t>(a)];
    const double hi = box.hi[static_cast<std::size_t>(a)];
    if (!(lo >= 0.0 && hi <= 1.0 && hi > lo)) throw InputError("box must be nonempty and inside [0,1]^d");
    volume *= hi - lo;
  }
  if (n_points < 1) throw InputError("n_points must be >= 1");
  PointMatrix pts(n_points, d);
  const std::uint64_t key = stream_key(seed, RngStream::kQueryPoints);
  for (int j = 0; j < n_points; ++j) {
    for (int a = 0; a < d; ++a) {
      const std::uint64_t bits = CounterRng::mix(CounterRng::combine(
          CounterRng::combine(key, static_cast<std::uint64_t>(j)), static_cast<std::uint64_t>(a)));
      const double u = 1.0 - CounterRng::uniform_open(bits);  // [0, 1)
      const auto sa = static_cast<std::size_t>(a);
      pts(j, a) = box.lo[sa] + u * (box.hi[sa] - box.lo[sa]);
    }
  }
  const auto p = occupancy_probabilities(dist, pts);
  double sum = 0.0;
  double sum2 = 0.0;
  for (double pj : p) {
    const double g = 0.5 - std::abs(pj - 0.5);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n_points;
  const double var = n_points > 1 ? std::max(sum2 / n_points - mean * mean, 0.0) * n_points / (n_points - 1.0) : 0.0;
  return {volume * mean, volume * std::sqrt(var / n_points), n_points};
}

std::vector<double> hitbox_field(const SurfaceDistribution& dist, double eta, const PointMatrix& x) {
  if (!(eta >= 0.0)) throw InputError("hitbox conservativeness eta must be >= 0");
  auto g = dist.mean(x);
  if (eta == 0.0) return g;
  const auto var = dist.variance(x);
  for (std::size_t m = 0; m < g.size(); ++m) g[m] -= eta * std::sqrt(std::max(var[m], 0.0));
  return g;
}

double hitbox_field(const SurfaceDistribution& dist, double eta, std::span<const double> x) {
  return hitbox_field(dist, eta, single_point(x))[0];
}

}  // namespace torusrecon
