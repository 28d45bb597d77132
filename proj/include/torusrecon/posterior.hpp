#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "torusrecon/amortization.hpp"
#include "torusrecon/kernel_solver.hpp"
#include "torusrecon/spectral_prior.hpp"
#include "torusrecon/surface_field.hpp"

namespace torusrecon {

enum class EvaluationPath {
  kAuto,       // amortized when M·N·L exceeds the threshold and a table exists
  kDirect,     // exact truncated series
  kAmortized,  // table interpolation, O(M·N)
};

enum class SolverChoice { kExact, kSgd };

struct PosteriorConfig {
  int f_cross = 50;        // L = (2F+1)^d − 1 cross-covariance modes
  int f_prior = 20;        // modes of the prior draws
  int amortize_grid = 50;  // 0 disables the table
  std::shared_ptr<const AmortizationTable> table;  // prebuilt; overrides amortize_grid
  EvaluationPath path = EvaluationPath::kAuto;
  double amortize_threshold = 1e9;
  SolverChoice solver = SolverChoice::kExact;
  SgdConfig sgd;
  bool calibrate_isovalue = true;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
};

/// Σ_n (s_n sin 2π⟨n,x⟩ + c_n cos 2π⟨n,x⟩) over the cross-covariance modes: the
/// exact value of Σ_a Σ_i α_{a,i} k_{f,v_i}(x, x_a), evaluated in O(L) per point.
struct CollapsedSeries {
  std::vector<double> sin_coef;
  std::vector<double> cos_coef;
};

class PosteriorModel;

/// Pathwise-conditioned draw: f_prior + K_{f v} (K + Σ)⁻¹ (v − v_prior(x) − ε) − c.
class PosteriorSample : public SurfaceSample {
 public:
  PosteriorSample(std::shared_ptr<const PosteriorModel> model, std::uint64_t seed);

  [[nodiscard]] std::vector<double> evaluate(const PointMatrix& x) const override;
  [[nodiscard]] std::vector<double> evaluate(const PointMatrix& x, EvaluationPath path) const;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] const PriorCoefficients& coefficients() const noexcept { return coeffs_; }
  [[nodiscard]] const PointMatrix& noise() const noexcept { return eps_; }
  [[nodiscard]] const RepresenterWeights& weights() const noexcept { return weights_; }

 private:
  std::shared_ptr<const PosteriorModel> model_;
  std::uint64_t seed_;
  PriorCoefficients coeffs_;
  PointMatrix eps_;
  RepresenterWeights weights_;
  mutable std::once_flag collapse_once_;
  mutable CollapsedSeries collapse_;
};

/// Posterior of the implicit function f given observed inward normals v at the
/// data points. Immutable once built; lazily built caches are thread safe.
class PosteriorModel : public SurfaceDistribution,
                       public std::enable_shared_from_this<PosteriorModel> {
 public:
  /// `points` in [0,1)^d; `normals` point outward and the model observes v = −normals,
  /// which makes f increase inward. Throws InputError for empty or mismatched data.
  static std::shared_ptr<const PosteriorModel> build(const PointMatrix& points,
                                                     const PointMatrix& normals,
                                                     const Hyperparameters& hp,
                                                     const PosteriorConfig& config = {});

  [[nodiscard]] int dim() const override { return system_.dim(); }
  [[nodiscard]] int size() const noexcept { return system_.size(); }

  /// μ(x) − c.
  [[nodiscard]] std::vector<double> mean(const PointMatrix& x) const override;
  [[nodiscard]] std::vector<double> mean(const PointMatrix& x, EvaluationPath path) const;
  /// Diagonal of the posterior covariance.
  [[nodiscard]] std::vector<double> variance(const PointMatrix& x) const override;
  [[nodiscard]] std::vector<double> variance(const PointMatrix& x, EvaluationPath path) const;
  /// k_f(X, X') − K_{f(X) v} (K + Σ)⁻¹ K_{v f(X')}, with the prior term and the cross
  /// terms sharing the cross-covariance truncation.
  [[nodiscard]] Eigen::MatrixXd covariance(const PointMatrix& x, const PointMatrix& x_prime,
                                           EvaluationPath path = EvaluationPath::kAuto) const;
  /// Posterior mean of v: K_vv(X, x) α.
  [[nodiscard]] PointMatrix v_mean(const PointMatrix& x) const;

  [[nodiscard]] std::unique_ptr<SurfaceSample> draw(std::uint64_t seed) const override;
  [[nodiscard]] PosteriorSample draw_sample(std::uint64_t seed) const;

  [[nodiscard]] double isovalue() const noexcept { return isovalue_; }
  [[nodiscard]] const ObservationSystem& system() const noexcept { return system_; }
  [[nodiscard]] const Hyperparameters& hyperparameters() const noexcept { return system_.hp; }
  [[nodiscard]] const PosteriorConfig& config() const noexcept { return config_; }
  [[nodiscard]] const RepresenterWeights& weights() const noexcept { return weights_; }
  [[nodiscard]] const SpectralSeries& cross_series() const noexcept { return cross_; }
  [[nodiscard]] const SpectralSeries& prior_f_series() const noexcept { return prior_f_; }
  [[nodiscard]] const SpectralSeries& prior_v_series() const noexcept { return prior_v_; }
  [[nodiscard]] const AmortizationTable* table() const noexcept { return table_.get(); }

  /// Path actually used for M query points.
  [[nodiscard]] EvaluationPath resolve(EvaluationPath path, std::size_t m) const;

  /// Σ_a Σ_i alpha(a, i) k_{f,v_i}(x, x_a) for every row of x.
  [[nodiscard]] std::vector<double> cross_apply(const PointMatrix& x, const PointMatrix& alpha,
                                                EvaluationPath path,
                                                const CollapsedSeries* collapse) const;
  /// Per component, the M x N matrix of k_{f,v_i}(x_m, x_a).
  [[nodiscard]] std::vector<Eigen::MatrixXd> cross_rows(const PointMatrix& x,
                                                        EvaluationPath path) const;
  [[nodiscard]] CollapsedSeries collapse(const PointMatrix& alpha) const;
  [[nodiscard]] const ExactSolver& exact_solver() const;
  [[nodiscard]] RepresenterWeights solve(const PointMatrix& rhs) const;

  PosteriorModel(const PosteriorModel&) = delete;
  PosteriorModel& operator=(const PosteriorModel&) = delete;

 private:
  PosteriorModel(ObservationSystem system, const PosteriorConfig& config);

  [[nodiscard]] std::vector<double> raw_mean(const PointMatrix& x, EvaluationPath path) const;
  [[nodiscard]] const CollapsedSeries& mean_collapse() const;

  ObservationSystem system_;
  PosteriorConfig config_;
  SpectralSeries cross_;
  SpectralSeries prior_f_;
  SpectralSeries prior_v_;
  std::shared_ptr<const AmortizationTable> table_;
  mutable std::once_flag solver_once_;
  mutable std::unique_ptr<ExactSolver> solver_;
  RepresenterWeights weights_;
  double isovalue_ = 0.0;
  mutable std::once_flag collapse_once_;
  mutable CollapsedSeries collapse_;
};

std::shared_ptr<const PosteriorModel> build_posterior(const PointMatrix& points,
                                                      const PointMatrix& normals,
                                                      const Hyperparameters& hp,
                                                      const PosteriorConfig& config = {});
std::vector<double> posterior_mean(const PosteriorModel& model, const PointMatrix& x);
Eigen::MatrixXd posterior_covariance(const PosteriorModel& model, const PointMatrix& x,
                                     const PointMatrix& x_prime);
PosteriorSample draw_posterior_sample(const PosteriorModel& model, std::uint64_t seed);
std::vector<double> evaluate_sample(const PosteriorSample& sample, const PointMatrix& x);

}  // namespace torusrecon
