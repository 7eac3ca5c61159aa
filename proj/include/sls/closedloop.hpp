#pragma once

#include <Eigen/Core>

#include "sls/lti.hpp"
#include "sls/rational.hpp"

namespace sls {

/// Internal-model SLS controller
///   w_hat(k) = x(k) - x_hat(k)
///   xi(k+1)  = Ak xi(k) + Bk w_hat(k)
///   x_hat(k) = Cx xi(k)                (strictly causal part of z Phi_x)
///   u(k)     = Cu xi(k) + Du w_hat(k)  (z Phi_u)
/// built from a real modal realization of [Phi_x; Phi_u]. The modes of Ak
/// are the poles of Phi.
struct StateSpaceController {
  Eigen::MatrixXd Ak, Bk, Cx, Cu, Du;

  int order() const { return static_cast<int>(Ak.rows()); }
  int inputs() const { return static_cast<int>(Bk.cols()); }   // n
  int outputs() const { return static_cast<int>(Cu.rows()); }  // p

  /// Equivalent (A, B, C, D) with u = C xi + D x directly from the state.
  struct Explicit {
    Eigen::MatrixXd A, B, C, D;
  };
  Explicit explicit_form() const;
};

/// Requires the first impulse sample of Phi_x to equal I within 1e-6.
StateSpaceController realize(const PfdMatrix& phi_x, const PfdMatrix& phi_u);

/// Trajectories sampled k = 1..horizon, one column per step.
struct Trajectory {
  Eigen::MatrixXd x;
  Eigen::MatrixXd u;
  Eigen::MatrixXd y;
};

/// Closed loop driven by d(k) injected into the state update,
/// x(k+1) = A x + B u + d(k), with d(0) = direction (impulse) or
/// d(k) = direction for all k >= 0 (step).
Trajectory simulate(const PlantModel& plant,
                    const StateSpaceController& controller,
                    const Eigen::VectorXd& direction, int horizon, bool step);

/// Unit impulse on disturbance channel `channel` (direction Bhat e_j).
Trajectory simulate_impulse(const PlantModel& plant,
                            const StateSpaceController& controller,
                            int channel, int horizon);
Trajectory simulate_step(const PlantModel& plant,
                         const StateSpaceController& controller, int channel,
                         int horizon);

/// Unit impulse directly into state `index`; x and u then trace columns of
/// T_{v->x} and T_{v->u}.
Trajectory simulate_state_impulse(const PlantModel& plant,
                                  const StateSpaceController& controller,
                                  int index, int horizon);

inline constexpr double kDivergenceLimit = 1e12;

}  // namespace sls
