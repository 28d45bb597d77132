#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "torusrecon/torus_kernels.hpp"

namespace torusrecon {

/// N points (or N vectors) of dimension d, one per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Observed vector field: v(points.row(a)) = values.row(a) + noise.
struct ObservationSystem {
  PointMatrix points;
  PointMatrix values;
  Hyperparameters hp;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(points.rows()); }
  [[nodiscard]] int dim() const noexcept { return hp.dim; }

  /// Throws InputError/ConfigError on empty data, shape mismatch or points outside [0,1)^d.
  void validate() const;
};

/// Gram matrices of the d vector-field components. Every component has the same
/// product kernel, so one matrix is stored and shared by all blocks.
struct GramMatrix {
  Eigen::MatrixXd shared;  // K without noise
  int components = 0;

  [[nodiscard]] const Eigen::MatrixXd& block(int /*component*/) const noexcept { return shared; }
};

GramMatrix assemble_gram(const ObservationSystem& system);

enum class SolverKind { kExact, kIterative };

struct RepresenterWeights {
  PointMatrix alpha;              // N x d, column i is the block of component i
  double residual_norm = 0.0;     // max over blocks of ‖Aα − b‖ / ‖b‖
  SolverKind solver_tag = SolverKind::kExact;
  double jitter = 0.0;            // diagonal jitter used by the exact factorization
  int iterations = 0;             // SGD iterations actually run
  std::vector<double> residual_trace;  // SGD checkpoints, averaged iterate
};

/// Cholesky factor of K + (noise2 + jitter) I, reused for every right-hand side.
///
/// The jitter ladder is 0, then 1e-10, 1e-8, 1e-6 times the zero-lag value.
class ExactSolver {
 public:
  explicit ExactSolver(const ObservationSystem& system);

  [[nodiscard]] RepresenterWeights solve(const PointMatrix& rhs) const;
  [[nodiscard]] Eigen::VectorXd solve_vector(const Eigen::VectorXd& rhs) const;
  /// L⁻¹ b for the lower Cholesky factor L; ‖L⁻¹ b‖² = bᵀ A⁻¹ b.
  [[nodiscard]] Eigen::MatrixXd whiten(const Eigen::MatrixXd& rhs) const;

  [[nodiscard]] const Eigen::MatrixXd& system_matrix() const noexcept { return matrix_; }
  [[nodiscard]] double jitter() const noexcept { return jitter_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(matrix_.rows()); }

 private:
  Eigen::MatrixXd matrix_;  // K + noise2 I, without jitter
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

RepresenterWeights solve_exact(const ObservationSystem& system, const PointMatrix& rhs);

struct SgdConfig {
  double step_size = 1.5;      // relaxation factor ω; ω ≥ 2 diverges
  int batch_size = 0;          // rows per iteration; 0 means all N
  int iterations = 5000;
  std::uint64_t seed = 0;
};

/// Minimises ½αᵀAα − αᵀb per block by randomised minibatch coordinate steps
/// α_j ← α_j − ω (Aα − b)_j / A_jj, returning the average of the second half of
/// the iterates. Throws NumericalError when the residual grows 10x above its minimum.
RepresenterWeights solve_sgd(const ObservationSystem& system, const PointMatrix& rhs,
                             const SgdConfig& config);

/// ‖Aα − b‖ / ‖b‖ per block with A = K + noise2 I, maximised over blocks (0 for b = 0).
double relative_residual(const Eigen::MatrixXd& system_matrix, const PointMatrix& alpha,
                         const PointMatrix& rhs);

}  // namespace torusrecon
