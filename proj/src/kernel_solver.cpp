#include "torusrecon/kernel_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "torusrecon/errors.hpp"
#include "torusrecon/rng.hpp"

namespace torusrecon {

void ObservationSystem::validate() const {
  hp.validate();
  if (points.rows() < 1) throw InputError("observation system needs at least one point");
  if (points.cols() != hp.dim || values.cols() != hp.dim) {
    throw InputError("points and values must have dim columns");
  }
  if (values.rows() != points.rows()) throw InputError("points and values differ in length");
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      const double p = points(r, c);
      if (!(p >= 0.0 && p < 1.0)) {
        throw InputError("point " + std::to_string(r) + " lies outside [0,1)^d");
      }
      if (!std::isfinite(values(r, c))) {
        throw InputError("value " + std::to_string(r) + " is not finite");
      }
    }
  }
}

GramMatrix assemble_gram(const ObservationSystem& system) {
  system.validate();
  const Eigen::Index n = system.points.rows();
  const int d = system.dim();
  GramMatrix gram;
  gram.components = d;
  gram.shared.resize(n, n);
  const auto& hp = system.hp;
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index a = 0; a < n; ++a) {
    gram.shared(a, a) = hp.sigma2;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      double value = hp.sigma2;
      for (int axis = 0; axis < d; ++axis) {
        value *= matern_correlation(hp.nu, hp.kappa[static_cast<std::size_t>(axis)],
                                    system.points(a, axis) - system.points(b, axis));
      }
      gram.shared(a, b) = value;
      gram.shared(b, a) = value;
    }
  }
  return gram;
}

double relative_residual(const Eigen::MatrixXd& system_matrix, const PointMatrix& alpha,
                         const PointMatrix& rhs) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rhs.cols(); ++i) {
    const double norm = rhs.col(i).norm();
    const double r = (system_matrix * alpha.col(i) - rhs.col(i)).norm();
    if (norm == 0.0) {
      if (r != 0.0) worst = std::numeric_limits<double>::infinity();
      continue;
    }
    worst = std::max(worst, r / norm);
  }
  return worst;
}

ExactSolver::ExactSolver(const ObservationSystem& system) {
  matrix_ = assemble_gram(system).shared;
  matrix_.diagonal().array() += system.hp.noise2;
  const double zero_lag = system.hp.sigma2;
  const double ladder[] = {0.0, 1e-10, 1e-8, 1e-6};
  std::ostringstream tried;
  for (double step : ladder) {
    jitter_ = step * zero_lag;
    Eigen::MatrixXd jittered = matrix_;
    jittered.diagonal().array() += jitter_;
    llt_.compute(jittered);
    if (llt_.info() == Eigen::Success) {
      const auto diag = llt_.matrixLLT().diagonal();
      if (diag.allFinite() && diag.minCoeff() > 0.0) return;
    }
    tried << (tried.tellp() > 0 ? ", " : "") << jitter_;
  }
  throw NumericalError("Cholesky factorization of the shared Gram block (all " +
                       std::to_string(system.dim()) +
                       " components) failed; attempted jitters: " + tried.str());
}

Eigen::VectorXd ExactSolver::solve_vector(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != matrix_.rows()) throw InputError("right-hand side has the wrong length");
  Eigen::VectorXd x = llt_.solve(rhs);
  // Iterative refinement against the unjittered matrix; keep the best iterate.
  double best = (matrix_ * x - rhs).norm();
  for (int step = 0; step < 3 && best > 0.0; ++step) {
    const Eigen::VectorXd r = rhs - matrix_ * x;
    const Eigen::VectorXd candidate = x + llt_.solve(r);
    const double residual = (matrix_ * candidate - rhs).norm();
    if (!(residual < best)) break;
    best = residual;
    x = candidate;
  }
  return x;
}

RepresenterWeights ExactSolver::solve(const PointMatrix& rhs) const {
  if (rhs.rows() != matrix_.rows()) throw InputError("right-hand side has the wrong length");
  RepresenterWeights w;
  w.alpha.resize(rhs.rows(), rhs.cols());
  for (Eigen::Index i = 0; i < rhs.cols(); ++i) w.alpha.col(i) = solve_vector(rhs.col(i));
  w.residual_norm = relative_residual(matrix_, w.alpha, rhs);
  w.solver_tag = SolverKind::kExact;
  w.jitter = jitter_;
  return w;
}

Eigen::MatrixXd ExactSolver::whiten(const Eigen::MatrixXd& rhs) const {
  return llt_.matrixL().solve(rhs);
}

RepresenterWeights solve_exact(const ObservationSystem& system, const PointMatrix& rhs) {
  return ExactSolver(system).solve(rhs);
}

namespace {

// Rows visited in one iteration: a prefix of a keyed Fisher–Yates shuffle.
void draw_batch(std::uint64_t key, std::vector<int>& order, int batch) {
  const int n = static_cast<int>(order.size());
  std::iota(order.begin(), order.end(), 0);
  for (int j = 0; j < batch && j + 1 < n; ++j) {
    const std::uint64_t bits = CounterRng::mix(CounterRng::combine(key, static_cast<std::uint64_t>(j)));
    const int pick = j + static_cast<int>(bits % static_cast<std::uint64_t>(n - j));
    std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick)]);
  }
}

}  // namespace

RepresenterWeights solve_sgd(const ObservationSystem& system, const PointMatrix& rhs,
                             const SgdConfig& config) {
  if (config.iterations < 1) throw InputError("SGD needs an iteration budget >= 1");
  if (!(config.step_size > 0.0)) throw InputError("SGD step size must be > 0");
  Eigen::MatrixXd a = assemble_gram(system).shared;
  a.diagonal().array() += system.hp.noise2;
  const int n = static_cast<int>(a.rows());
  if (rhs.rows() != n) throw InputError("right-hand side has the wrong length");
  const int batch = config.batch_size <= 0 ? n : std::min(config.batch_size, n);
  const int total = config.iterations;
  const int checkpoints = std::min(20, total);

  RepresenterWeights w;
  w.alpha = PointMatrix::Zero(n, rhs.cols());
  w.solver_tag = SolverKind::kIterative;
  w.iterations = total;
  std::vector<double> trace_sum(static_cast<std::size_t>(checkpoints), 0.0);

  for (Eigen::Index block = 0; block < rhs.cols(); ++block) {
    const Eigen::VectorXd b = rhs.col(block);
    const double b_norm = b.norm();
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    // Segment sums of iterates between checkpoints; the average over the second
    // half of the iterations so far is assembled from them.
    std::vector<Eigen::VectorXd> segments;
    std::vector<int> segment_len;
    Eigen::VectorXd running = Eigen::VectorXd::Zero(n);
    int running_len = 0;
    std::vector<int> order(static_cast<std::size_t>(n));
    const std::uint64_t block_key =
        CounterRng::combine(stream_key(config.seed, RngStream::kSgdBatches), static_cast<std::uint64_t>(block));
    double min_residual = std::numeric_limits<double>::infinity();
    int next_checkpoint = 1;
    Eigen::VectorXd averaged = alpha;

    for (int t = 1; t <= total; ++t) {
      draw_batch(CounterRng::combine(block_key, static_cast<std::uint64_t>(t)), order, batch);
      for (int j = 0; j < batch; ++j) {
        const int row = order[static_cast<std::size_t>(j)];
        const double r = a.row(row).dot(alpha) - b[row];
        alpha[row] -= config.step_size * r / a(row, row);
      }
      running += alpha;
      ++running_len;
      const int boundary = static_cast<int>(static_cast<long long>(total) * next_checkpoint / checkpoints);
      if (t != boundary) continue;
      segments.push_back(running);
      segment_len.push_back(running_len);
      running.setZero();
      running_len = 0;

      const double raw = b_norm == 0.0 ? (a * alpha).norm() : (a * alpha - b).norm() / b_norm;
      // The floor keeps round-off wobble around a converged solution from
      // reading as growth.
      if (!std::isfinite(raw) || raw > 10.0 * std::max(min_residual, 1e-12)) {
        throw NumericalError("SGD diverged on block " + std::to_string(block) + " (residual " +
                             std::to_string(raw) + " after " + std::to_string(t) +
                             " iterations); use a smaller step size than " +
                             std::to_string(config.step_size));
      }
      min_residual = std::min(min_residual, raw);

      const std::size_t k = segments.size();
      averaged.setZero();
      int count = 0;
      for (std::size_t s = k / 2; s < k; ++s) {
        averaged += segments[s];
        count += segment_len[s];
      }
      averaged /= static_cast<double>(count);
      const double avg_res = b_norm == 0.0 ? (a * averaged).norm() : (a * averaged - b).norm() / b_norm;
      trace_sum[k - 1] = std::max(trace_sum[k - 1], avg_res);
      ++next_checkpoint;
    }
    w.alpha.col(block) = averaged;
  }
  w.residual_trace = trace_sum;
  w.residual_norm = relative_residual(a, w.alpha, rhs);
  return w;
}

}  // namespace torusrecon
