#include "torusrecon/posterior.hpp"

#include <cmath>
#include <string>

#include "torusrecon/errors.hpp"
#include "torusrecon/instrumentation.hpp"
#include "torusrecon/rng.hpp"

namespace torusrecon {

namespace {

std::span<const double> row_span(const PointMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

void require_dim(const PointMatrix& x, int d) {
  if (x.rows() > 0 && x.cols() != d) {
    throw InputError("query points have " + std::to_string(x.cols()) + " coordinates, expected " +
                     std::to_string(d));
  }
}

double collapsed_value(const SpectralSeries& series, const CollapsedSeries& c,
                       std::span<const double> x) {
  const AxisPhases ph(series.frequencies().bound(), x);
  const double* sc = c.sin_coef.data();
  const double* cc = c.cos_coef.data();
  double total = 0.0;
  for_each_mode(series.frequencies(), ph,
                [&](std::size_t k, double cs, double sn) { total += sc[k] * sn + cc[k] * cs; });
  return total;
}

}  // namespace

void PosteriorConfig::validate() const {
  if (f_cross < 1) throw ConfigError("f_cross must be >= 1");
  if (f_prior < 1) throw ConfigError("f_prior must be >= 1");
  if (amortize_grid != 0 && amortize_grid < 2) throw ConfigError("amortize_grid must be 0 or >= 2");
  if (!(amortize_threshold >= 0.0)) throw ConfigError("amortize_threshold must be >= 0");
  if (solver == SolverChoice::kSgd && sgd.iterations < 1) throw ConfigError("sgd iterations must be >= 1");
}

std::shared_ptr<const PosteriorModel> PosteriorModel::build(const PointMatrix& points,
                                                            const PointMatrix& normals,
                                                            const Hyperparameters& hp,
                                                            const PosteriorConfig& config) {
  if (points.rows() == 0) throw InputError("cannot build a posterior from an empty cloud");
  ObservationSystem system{points, -normals, hp};
  system.validate();
  config.validate();
  return std::shared_ptr<const PosteriorModel>(new PosteriorModel(std::move(system), config));
}

PosteriorModel::PosteriorModel(ObservationSystem system, const PosteriorConfig& config)
    : system_(std::move(system)),
      config_(config),
      cross_(system_.hp, FrequencySet(config.f_cross, system_.dim(), true)),
      prior_f_(system_.hp, FrequencySet(config.f_prior, system_.dim(), true)),
      prior_v_(system_.hp, FrequencySet(config.f_prior, system_.dim(), false)) {
  if (config_.table) {
    const auto& t = *config_.table;
    const auto& hp = system_.hp;
    if (t.dim() != hp.dim || t.frequency_bound() != config_.f_cross || t.hyperparameters().nu != hp.nu ||
        t.hyperparameters().kappa != hp.kappa || t.hyperparameters().sigma2 != hp.sigma2) {
      throw ConfigError("amortization table was built for different hyperparameters or truncation");
    }
    table_ = config_.table;
  } else if (config_.amortize_grid > 0) {
    table_ = std::make_shared<const AmortizationTable>(AmortizationTable::build(cross_, config_.amortize_grid));
  }
  weights_ = solve(system_.values);
  if (config_.calibrate_isovalue) {
    const auto raw = raw_mean(system_.points, resolve(EvaluationPath::kAuto, static_cast<std::size_t>(size())));
    CompensatedSum sum;
    for (double v : raw) sum.add(v);
    isovalue_ = sum.value() / static_cast<double>(raw.size());
  }
}

const ExactSolver& PosteriorModel::exact_solver() const {
  std::call_once(solver_once_, [this] { solver_ = std::make_unique<ExactSolver>(system_); });
  return *solver_;
}

RepresenterWeights PosteriorModel::solve(const PointMatrix& rhs) const {
  if (config_.solver == SolverChoice::kSgd) return solve_sgd(system_, rhs, config_.sgd);
  return exact_solver().solve(rhs);
}

EvaluationPath PosteriorModel::resolve(EvaluationPath path, std::size_t m) const {
  if (path == EvaluationPath::kAmortized && !table_) {
    throw InputError("amortized evaluation requested but no amortization table was built");
  }
  if (path != EvaluationPath::kAuto) return path;
  const double work = static_cast<double>(m) * static_cast<double>(size()) *
                      static_cast<double>(cross_.size());
  return table_ && work > config_.amortize_threshold ? EvaluationPath::kAmortized
                                                     : EvaluationPath::kDirect;
}

CollapsedSeries PosteriorModel::collapse(const PointMatrix& alpha) const {
  const std::size_t count = cross_.size();
  const int d = dim();
  CollapsedSeries out;
  out.sin_coef.assign(count, 0.0);
  out.cos_coef.assign(count, 0.0);
  std::vector<const double*> w(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = cross_.cross_weights(i).data();
  double* sc = out.sin_coef.data();
  double* cc = out.cos_coef.data();
  for (Eigen::Index a = 0; a < alpha.rows(); ++a) {
    const AxisPhases ph(cross_.frequencies().bound(), row_span(system_.points, a));
    const double* al = alpha.data() + a * alpha.cols();
    if (d == 3) {
      const double* w0 = w[0];
      const double* w1 = w[1];
      const double* w2 = w[2];
      for_each_mode(cross_.frequencies(), ph, [&](std::size_t k, double c, double s) {
        const double t = al[0] * w0[k] + al[1] * w1[k] + al[2] * w2[k];
        sc[k] += t * c;
        cc[k] -= t * s;
      });
    } else {
      for_each_mode(cross_.frequencies(), ph, [&](std::size_t k, double c, double s) {
        double t = 0.0;
        for (int i = 0; i < d; ++i) t += al[i] * w[static_cast<std::size_t>(i)][k];
        sc[k] += t * c;
        cc[k] -= t * s;
      });
    }
  }
  return out;
}

const CollapsedSeries& PosteriorModel::mean_collapse() const {
  std::call_once(collapse_once_, [this] { collapse_ = collapse(weights_.alpha); });
  return collapse_;
}

std::vector<double> PosteriorModel::cross_apply(const PointMatrix& x, const PointMatrix& alpha,
                                                EvaluationPath path,
                                                const CollapsedSeries* collapsed) const {
  require_dim(x, dim());
  const auto m = static_cast<Eigen::Index>(x.rows());
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  if (m == 0) return out;
  path = resolve(path, static_cast<std::size_t>(m));
  if (path == EvaluationPath::kDirect) {
    CollapsedSeries local;
    if (collapsed == nullptr) {
      local = collapse(alpha);
      collapsed = &local;
    }
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < m; ++r) {
      out[static_cast<std::size_t>(r)] = collapsed_value(cross_, *collapsed, row_span(x, r));
    }
    return out;
  }
  const auto& table = *table_;
  const int d = dim();
  const Eigen::Index n = system_.points.rows();
  const double* pts = system_.points.data();
  const double* al = alpha.data();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < m; ++r) {
    const double* xr = x.data() + r * d;
    double total = 0.0;
    if (d == 3) {
      double offset[3];
      for (Eigen::Index a = 0; a < n; ++a) {
        const double* pa = pts + a * 3;
        offset[0] = xr[0] - pa[0];
        offset[1] = xr[1] - pa[1];
        offset[2] = xr[2] - pa[2];
        total += table.weighted_lookup3(offset, al + a * 3);
      }
    } else {
      std::array<double, kMaxDim> offset{};
      std::array<double, kMaxDim> k{};
      for (Eigen::Index a = 0; a < n; ++a) {
        for (int i = 0; i < d; ++i) offset[static_cast<std::size_t>(i)] = xr[i] - pts[a * d + i];
        table.lookup_all(std::span<const double>(offset.data(), static_cast<std::size_t>(d)),
                         std::span<double>(k.data(), static_cast<std::size_t>(d)));
        for (int i = 0; i < d; ++i) total += al[a * d + i] * k[static_cast<std::size_t>(i)];
      }
    }
    out[static_cast<std::size_t>(r)] = total;
  }
  return out;
}

std::vector<Eigen::MatrixXd> PosteriorModel::cross_rows(const PointMatrix& x,
                                                        EvaluationPath path) const {
  require_dim(x, dim());
  const int d = dim();
  const Eigen::Index m = x.rows();
  const Eigen::Index n = system_.points.rows();
  std::vector<Eigen::MatrixXd> rows(static_cast<std::size_t>(d), Eigen::MatrixXd(m, n));
  path = resolve(path, static_cast<std::size_t>(m));
#pragma omp parallel for schedule(dynamic, 4)
  for (Eigen::Index r = 0; r < m; ++r) {
    std::array<double, kMaxDim> k{};
    std::array<double, kMaxDim> offset{};
    const std::span<double> ks(k.data(), static_cast<std::size_t>(d));
    for (Eigen::Index a = 0; a < n; ++a) {
      if (path == EvaluationPath::kDirect) {
        cross_.cross_covariance(row_span(x, r), row_span(system_.points, a), ks);
      } else {
        for (int i = 0; i < d; ++i) offset[static_cast<std::size_t>(i)] = x(r, i) - system_.points(a, i);
        table_->lookup_all(std::span<const double>(offset.data(), static_cast<std::size_t>(d)), ks);
      }
      for (int i = 0; i < d; ++i) rows[static_cast<std::size_t>(i)](r, a) = k[static_cast<std::size_t>(i)];
    }
  }
  return rows;
}

std::vector<double> PosteriorModel::raw_mean(const PointMatrix& x, EvaluationPath path) const {
  const EvaluationPath resolved = resolve(path, static_cast<std::size_t>(x.rows()));
  return cross_apply(x, weights_.alpha, resolved,
                     resolved == EvaluationPath::kDirect ? &mean_collapse() : nullptr);
}

std::vector<double> PosteriorModel::mean(const PointMatrix& x) const {
  return mean(x, config_.path);
}

std::vector<double> PosteriorModel::mean(const PointMatrix& x, EvaluationPath path) const {
  Instrumentation::count_evaluations(static_cast<std::uint64_t>(x.rows()));
  auto out = raw_mean(x, path);
  for (double& v : out) v -= isovalue_;
  return out;
}

std::vector<double> PosteriorModel::variance(const PointMatrix& x) const {
  return variance(x, config_.path);
}

std::vector<double> PosteriorModel::variance(const PointMatrix& x, EvaluationPath path) const {
  Instrumentation::count_evaluations(static_cast<std::uint64_t>(x.rows()));
  const EvaluationPath resolved = resolve(path, static_cast<std::size_t>(x.rows()));
  const auto rows = cross_rows(x, resolved);
  const auto& solver = exact_solver();
  const double prior = cross_.f_variance();
  // Interpolated cross-covariances carry O(1e-2) relative error, which the
  // solve can amplify; tolerate proportionally more before flagging.
  const double tolerance = resolved == EvaluationPath::kDirect ? 1e-10 : 0.05 * prior;
  Eigen::VectorXd correction = Eigen::VectorXd::Zero(x.rows());
  for (const auto& r : rows) correction += solver.whiten(r.transpose()).colwise().squaredNorm().transpose();
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index m = 0; m < x.rows(); ++m) {
    const double v = prior - correction[m];
    if (v < -tolerance) {
      throw NumericalError("negative posterior variance " + std::to_string(v) + " at query point " +
                           std::to_string(m));
    }
    out[static_cast<std::size_t>(m)] = std::max(v, 0.0);
  }
  return out;
}

Eigen::MatrixXd PosteriorModel::covariance(const PointMatrix& x, const PointMatrix& x_prime,
                                           EvaluationPath path) const {
  require_dim(x, dim());
  require_dim(x_prime, dim());
  Instrumentation::count_evaluations(static_cast<std::uint64_t>(x.rows() + x_prime.rows()));
  const EvaluationPath resolved = resolve(path, static_cast<std::size_t>(std::max(x.rows(), x_prime.rows())));
  Eigen::MatrixXd out(x.rows(), x_prime.rows());
  for (Eigen::Index a = 0; a < x.rows(); ++a) {
    for (Eigen::Index b = 0; b < x_prime.rows(); ++b) {
      out(a, b) = cross_.f_kernel(row_span(x, a), row_span(x_prime, b));
    }
  }
  const auto rows = cross_rows(x, resolved);
  const auto rows_prime = cross_rows(x_prime, resolved);
  const auto& solver = exact_solver();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::MatrixXd w = solver.whiten(rows[i].transpose());
    const Eigen::MatrixXd w_prime = solver.whiten(rows_prime[i].transpose());
    out.noalias() -= w.transpose() * w_prime;
  }
  return out;
}

PointMatrix PosteriorModel::v_mean(const PointMatrix& x) const {
  require_dim(x, dim());
  const auto& hp = system_.hp;
  PointMatrix out = PointMatrix::Zero(x.rows(), dim());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index a = 0; a < system_.points.rows(); ++a) {
      const double k = product_kernel_value(hp, row_span(x, r), row_span(system_.points, a));
      out.row(r) += k * weights_.alpha.row(a);
    }
  }
  return out;
}

std::unique_ptr<SurfaceSample> PosteriorModel::draw(std::uint64_t seed) const {
  return std::make_unique<PosteriorSample>(shared_from_this(), seed);
}

PosteriorSample PosteriorModel::draw_sample(std::uint64_t seed) const {
  return PosteriorSample(shared_from_this(), seed);
}

PosteriorSample::PosteriorSample(std::shared_ptr<const PosteriorModel> model, std::uint64_t seed)
    : model_(std::move(model)),
      seed_(seed),
      coeffs_(seed, FrequencySet(model_->config().f_prior, model_->dim(), false), model_->dim()) {
  const auto& sys = model_->system();
  const int d = sys.dim();
  const Eigen::Index n = sys.points.rows();
  const double noise_sd = std::sqrt(sys.hp.noise2);
  const std::uint64_t noise_key = stream_key(seed, RngStream::kObservationNoise);
  eps_.resize(n, d);
  PointMatrix rhs(n, d);
  std::vector<double> v(static_cast<std::size_t>(d));
  for (Eigen::Index a = 0; a < n; ++a) {
    model_->prior_v_series().sample_v(coeffs_, row_span(sys.points, a), v);
    for (int i = 0; i < d; ++i) {
      const std::uint64_t key = CounterRng::combine(CounterRng::combine(noise_key, static_cast<std::uint64_t>(a)),
                                                    static_cast<std::uint64_t>(i));
      eps_(a, i) = noise_sd * CounterRng::normal_pair(key).first;
      rhs(a, i) = sys.values(a, i) - v[static_cast<std::size_t>(i)] - eps_(a, i);
    }
  }
  weights_ = model_->solve(rhs);
}

std::vector<double> PosteriorSample::evaluate(const PointMatrix& x) const {
  return evaluate(x, model_->config().path);
}

std::vector<double> PosteriorSample::evaluate(const PointMatrix& x, EvaluationPath path) const {
  Instrumentation::count_evaluations(static_cast<std::uint64_t>(x.rows()));
  const EvaluationPath resolved = model_->resolve(path, static_cast<std::size_t>(x.rows()));
  const CollapsedSeries* collapsed = nullptr;
  if (resolved == EvaluationPath::kDirect) {
    std::call_once(collapse_once_, [this] { collapse_ = model_->collapse(weights_.alpha); });
    collapsed = &collapse_;
  }
  auto out = model_->cross_apply(x, weights_.alpha, resolved, collapsed);
  const auto& prior = model_->prior_f_series();
  const double c = model_->isovalue();
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out[static_cast<std::size_t>(r)] += prior.sample_f(coeffs_, row_span(x, r)) - c;
  }
  return out;
}

std::shared_ptr<const PosteriorModel> build_posterior(const PointMatrix& points,
                                                      const PointMatrix& normals,
                                                      const Hyperparameters& hp,
                                                      const PosteriorConfig& config) {
  return PosteriorModel::build(points, normals, hp, config);
}

std::vector<double> posterior_mean(const PosteriorModel& model, const PointMatrix& x) {
  return model.mean(x);
}

Eigen::MatrixXd posterior_covariance(const PosteriorModel& model, const PointMatrix& x,
                                     const PointMatrix& x_prime) {
  return model.covariance(x, x_prime);
}

PosteriorSample draw_posterior_sample(const PosteriorModel& model, std::uint64_t seed) {
  return model.draw_sample(seed);
}

std::vector<double> evaluate_sample(const PosteriorSample& sample, const PointMatrix& x) {
  return sample.evaluate(x);
}

}  // namespace torusrecon
