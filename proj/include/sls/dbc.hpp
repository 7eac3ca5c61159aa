#pragma once

#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "sls/conic.hpp"
#include "sls/spa.hpp"

namespace sls {

/// FIR (deadbeat) baseline with slack.
///
/// A length-T_fir design has L = T_fir - 1 free taps k = 1..L plus the
/// terminal coefficient:
///   G_1 = I,  G_{k+1} = A G_k + B H_k,  G_{L+1} = -V,  ||V||_2 <= gamma,
/// so that (zI - A) Phi_x - B Phi_u = I + V z^{-L} for
/// Phi_x = sum_{k<=L} G_k z^{-k}, Phi_u = sum_{k<=L} H_k z^{-k}.
struct DbcDesign {
  bool feasible = false;
  int taps = 0;  // L
  std::vector<Eigen::MatrixXd> G;  // G_1..G_L
  std::vector<Eigen::MatrixXd> H;  // H_1..H_L
  Eigen::MatrixXd V;
  double gamma = 0.0;
  double inner_objective = 0.0;  // +inf when infeasible
  double slack_norm = 0.0;       // ||V||_2
  int iterations = 0;            // inner solver iterations
};

/// min_V ||V||_2 over all FIR designs of length T_fir. The inner problem at
/// gamma is feasible iff gamma >= this value.
double dbc_gamma_min(const PlantModel& plant, int T_fir);

/// Data shared by every inner solve of one (problem, T_fir) pair.
class DbcSubproblem {
 public:
  DbcSubproblem(const SynthesisProblem& problem, int T_fir);
  ~DbcSubproblem();
  DbcSubproblem(const DbcSubproblem&) = delete;
  DbcSubproblem& operator=(const DbcSubproblem&) = delete;

  int taps() const;
  double gamma_min() const;
  /// Inner problem at a fixed slack level; infeasibility is reported in the
  /// returned design, not thrown.
  DbcDesign solve(double gamma, const ConicOptions& options = {}) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

DbcDesign solve_dbc_fixed_gamma(const SynthesisProblem& problem, int T_fir,
                                double gamma);

struct GoldenOptions {
  double tol = 1e-3;   // bracket width in gamma
  double ftol = 1e-3;  // relative spread of the two interior values
  double upper = 0.9999;
  bool check_unimodal = true;
  int grid_points = 50;
};

struct GammaProbe {
  double gamma;
  double outer;  // +inf when infeasible
};

struct DbcResult {
  bool feasible = false;
  DbcDesign design;
  double gamma_star = 0.0;
  double objective = 0.0;  // inner / (1 - gamma)
  int iterations = 0;      // golden-section bracket updates
  double gamma_min = 0.0;
  std::optional<bool> unimodal;
  std::vector<GammaProbe> probes;
  double wall_time = 0.0;
};

DbcResult golden_section_dbc(const SynthesisProblem& problem, int T_fir,
                             const GoldenOptions& options = {});

struct RealizedResponses {
  std::vector<Eigen::MatrixXd> x;  // T_{v->x}(k), k = 1..horizon
  std::vector<Eigen::MatrixXd> u;  // T_{v->u}(k)
};

/// Time-domain expansion of Phi (I + V z^{-delay})^{-1}:
///   T(k) = Phi[k - j*delay] (-V)^j  summed over j >= 0,
/// with Phi[i] = taps[i - 1] for 1 <= i <= taps.size() and zero otherwise.
/// Requires ||V||_2 < 1.
RealizedResponses recover_true_responses(
    const std::vector<Eigen::MatrixXd>& phi_x_taps,
    const std::vector<Eigen::MatrixXd>& phi_u_taps, const Eigen::MatrixXd& V,
    int delay, int horizon);

}  // namespace sls
