#pragma once

#include <optional>

#include <Eigen/Core>

namespace sls {

/// weight * || Toep(S z - s) ||_2 where the sample vector S z - s stacks
/// `horizon` column-major (rows x cols) impulse samples and Toep builds the
/// lower block-triangular convolution matrix.
struct ToeplitzNormTerm {
  Eigen::MatrixXd S;
  Eigen::VectorXd s;
  int rows = 0;
  int cols = 0;
  int horizon = 0;
  double weight = 0.0;
};

/// || mat(L z - l) ||_2 <= radius, mat() reshaping column-major to rows x cols.
struct SpectralBall {
  Eigen::MatrixXd L;
  Eigen::VectorXd l;
  int rows = 0;
  int cols = 0;
  double radius = 0.0;
};

/// minimize  1/2 ||Q z - g||^2 + frob_weight ||F z - f||_2
///           + toeplitz term + indicator(ball)
/// Any of the pieces may be absent (zero-row Q/F, unset optionals).
struct ConicProblem {
  int dim = 0;
  Eigen::MatrixXd Q;
  Eigen::VectorXd g;
  double frob_weight = 0.0;
  Eigen::MatrixXd F;
  Eigen::VectorXd f;
  std::optional<ToeplitzNormTerm> toeplitz;
  std::optional<SpectralBall> ball;
};

struct ConicOptions {
  int max_iterations = 50000;
  double rel_tol = 1e-6;
  double abs_tol = 1e-10;
  std::optional<Eigen::VectorXd> warm_start;
};

struct ConicSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Backend interface for the convex subproblems; AdmmSolver is the built-in
/// first-order implementation.
class ConicSolver {
 public:
  virtual ~ConicSolver() = default;
  virtual ConicSolution solve(const ConicProblem& problem,
                              const ConicOptions& options) const = 0;
};

class AdmmSolver final : public ConicSolver {
 public:
  ConicSolution solve(const ConicProblem& problem,
                      const ConicOptions& options) const override;
};

double conic_objective(const ConicProblem& problem, const Eigen::VectorXd& z);

/// Lower block-triangular Toeplitz matrix from a stacked sample vector.
Eigen::MatrixXd toeplitz_from_samples(const Eigen::VectorXd& samples, int rows,
                                      int cols, int horizon);
/// Adjoint of toeplitz_from_samples.
Eigen::VectorXd toeplitz_adjoint(const Eigen::MatrixXd& X, int rows, int cols,
                                 int horizon);

/// prox of t * ||.||_2 (spectral norm): clips singular values at a level
/// chosen so that the clipped mass equals t.
Eigen::MatrixXd prox_spectral_norm(const Eigen::MatrixXd& X, double t);
/// Euclidean projection onto { ||X||_2 <= radius }.
Eigen::MatrixXd project_spectral_ball(const Eigen::MatrixXd& X, double radius);

}  // namespace sls
