#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sls/conic.hpp"
#include "sls/lti.hpp"
#include "sls/poleselect.hpp"
#include "sls/rational.hpp"

namespace sls {

inline constexpr double kInfiniteLambda = std::numeric_limits<double>::infinity();

/// Plant, desired closed loop T_desired (m x q), mixing weight lambda
/// (0 = pure H2, +inf = pure Hinf), truncation horizon and pole selection.
struct SynthesisProblem {
  PlantModel plant;
  PfdMatrix desired;
  double lambda = 0.0;
  int horizon = 0;  // 0 selects default_horizon over all poles involved
  PoleSet poles;
  EigenStructure eig;

  /// Throws ValidationError on inconsistent data.
  void validate() const;
  /// Horizon actually used (resolves 0 to the default).
  int resolved_horizon() const;
};

/// Builds a problem with eig computed from the plant.
SynthesisProblem make_problem(PlantModel plant, PfdMatrix desired,
                              double lambda, PoleSet poles, int horizon = 0);

enum class BlockKind { H, G };

/// One coefficient matrix of the ansatz. A block at a nonreal pole stands
/// for the conjugate pair and owns real and imaginary parts.
struct SpaBlock {
  BlockKind kind = BlockKind::H;
  Complex pole;
  int order = 1;
  int rows = 0;
  int cols = 0;
  bool complex_pair = false;
  int offset = 0;  // first real variable
  int plant_index = -1;  // entry in eig for chain blocks, else -1

  int size() const { return rows * cols * (complex_pair ? 2 : 1); }
};

struct SpaLayout {
  std::vector<SpaBlock> blocks;
  int num_variables = 0;
  // Stable plant poles that carry a chain: index into eig and chain length.
  struct Chain {
    int plant_index;
    Complex pole;
    int length;
    bool in_poles;
  };
  std::vector<Chain> chains;
  std::vector<int> skipped_unstable;  // eig entries with |q| >= 1
};

SpaLayout make_layout(const SynthesisProblem& problem);

/// Real affine system E x = rhs.
struct AffineSystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

AffineSystem build_constraints(const SynthesisProblem& problem,
                               const SpaLayout& layout);

/// Residual r(k) = C Phi_x(k) Bhat + D Phi_u(k) Bhat - T_desired(k),
/// k = 1..T, stacked column-major per sample into a T*m*q vector.
///
/// `h2_matrix`, `h2_offset`, `h2_constant` compress the Frobenius term:
///   sum_k ||r(k)||^2 = ||h2_matrix x - h2_offset||^2 + h2_constant.
/// `impulse_matrix`/`impulse_offset` give r directly (r = M x - o) and are
/// only filled when requested (they have T*m*q rows).
struct ObjectiveOperator {
  int horizon = 0;
  int rows = 0;  // m
  int cols = 0;  // q
  Eigen::MatrixXd h2_matrix;
  Eigen::VectorXd h2_offset;
  double h2_constant = 0.0;
  Eigen::MatrixXd impulse_matrix;
  Eigen::VectorXd impulse_offset;
};

ObjectiveOperator build_objective(const SynthesisProblem& problem,
                                  const SpaLayout& layout,
                                  bool with_impulse_matrix);

/// Phi_x, Phi_u assembled from a real variable vector.
std::pair<PfdMatrix, PfdMatrix> responses_from_variables(
    const SynthesisProblem& problem, const SpaLayout& layout,
    const Eigen::VectorXd& x);

struct SolverStats {
  int iterations = 0;
  std::string status;
  double wall_time = 0.0;  // seconds
};

struct SynthesisResult {
  PfdMatrix phi_x{1, 1};
  PfdMatrix phi_u{1, 1};
  double objective = 0.0;
  double h2_term = 0.0;
  double hinf_term = 0.0;
  bool hinf_evaluated = false;  // hinf_term is only computed when lambda > 0
  double constraint_residual = 0.0;
  int horizon = 0;
  SolverStats stats;
  Eigen::VectorXd variables;
};

/// Exact equality-constrained least squares (lambda = 0).
SynthesisResult solve_h2(const SynthesisProblem& problem);

inline constexpr long kMaxMixedToeplitzSize = 1500;

/// Frobenius + lambda * spectral-norm objective by first-order splitting.
/// Requires horizon * max(m, q) <= kMaxMixedToeplitzSize.
SynthesisResult solve_mixed(const SynthesisProblem& problem,
                            const ConicSolver* solver = nullptr,
                            const ConicOptions& options = {});

/// Dispatches on lambda.
SynthesisResult solve(const SynthesisProblem& problem);

/// For SPA the realized responses are Phi_x and Phi_u themselves.
std::pair<const PfdMatrix&, const PfdMatrix&> recover_controller_responses(
    const SynthesisResult& result);

/// Largest ||(zI - A) Phi_x(z) - B Phi_u(z) - I||_F over the given points.
double sls_identity_error(const PlantModel& plant, const PfdMatrix& phi_x,
                          const PfdMatrix& phi_u,
                          const std::vector<Complex>& points);

}  // namespace sls
