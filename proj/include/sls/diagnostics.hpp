#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sls/spa.hpp"

namespace sls {

struct ConvergenceRow {
  int n = 0;
  int num_poles = 0;
  double covering_radius = 0.0;
  double cost = 0.0;
  double rel_error = 0.0;
  double ratio = 0.0;  // rel_error / covering_radius
  bool ok = false;
  std::string status;
};

struct ConvergenceOptions {
  std::optional<double> reference;  // J*; default: cost at the largest n
  bool nested = false;  // fill with the union of spirals up to each n
  std::vector<Complex> prior;
  int grid_points = kDefaultGridPoints;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double reference = 0.0;
  bool reference_external = false;
  bool monotone = true;         // rel_error nonincreasing along the sweep
  double slope = 0.0;           // fit of log rel_error against log n
  double max_sqrt_n_error = 0.0;  // max rel_error * sqrt(n)
  double max_ratio = 0.0;       // max rel_error / D(P_n)
};

/// Solves `problem` once per n with poles = plant + prior + spiral fill and
/// tabulates relative suboptimality against J*. A failing row is recorded
/// with its reason and the sweep continues.
ConvergenceReport convergence_study(const SynthesisProblem& problem,
                                    const std::vector<int>& n_values,
                                    const ConvergenceOptions& options = {});

/// Optimal H2 cost over all stabilizing state feedbacks for zero desired
/// response: sqrt(trace(Bhat^T P Bhat)) with P from the Riccati equation
/// weighted by (C, D).
double h2_state_feedback_optimum(const PlantModel& plant);

struct DbcBoundRow {
  int T = 0;
  double bound = 0.0;
  bool valid = false;  // C* rho*^T < 1
};

std::vector<DbcBoundRow> dbc_bound_trace(double C_star, double rho_star,
                                         double c, double lambda,
                                         const std::vector<int>& T_values);

struct LemmaReport {
  int trials = 0;
  int identity_a_failures = 0;
  int identity_b_failures = 0;
  int bound_failures = 0;
  double worst_identity_a = 0.0;  // relative residual
  double worst_identity_b = 0.0;
  double worst_bound_ratio = 0.0;  // max lhs / (K dhat)
  bool passed() const {
    return identity_a_failures == 0 && identity_b_failures == 0 &&
           bound_failures == 0;
  }
};

inline constexpr double kIdentityTol = 1e-10;

/// Randomized checks of the partial-fraction identities behind the simple
/// pole construction and of the explicit approximation constant
///   K = ((|q|+2)^m - (|q|+1)^m) / (eta^(m-k) delta^m)
/// on the unit circle. Deterministic for a given seed.
LemmaReport lemma_identity_suite(int trials, std::uint64_t seed);

}  // namespace sls
