#include "sls/closedloop.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "sls/errors.hpp"

namespace sls {

namespace {

constexpr double kRealTol = 1e-12;

// Terms of one pole (or conjugate pair) grouped by order.
struct PoleGroup {
  Complex pole;
  bool pair = false;
  std::vector<Eigen::MatrixXcd> coeff;  // index order - 1
};

std::vector<PoleGroup> group_terms(const PfdMatrix& stacked) {
  std::vector<PoleGroup> groups;
  for (const auto& t : stacked.terms()) {
    if (t.pole.imag() < -kRealTol) continue;  // represented by its partner
    PoleGroup* g = nullptr;
    for (auto& h : groups) {
      if (std::abs(h.pole - t.pole) <= PfdMatrix::kPoleSnapTol) g = &h;
    }
    if (g == nullptr) {
      groups.push_back({t.pole, std::abs(t.pole.imag()) > kRealTol, {}});
      g = &groups.back();
    }
    if (static_cast<int>(g->coeff.size()) < t.order) {
      g->coeff.resize(t.order,
                      Eigen::MatrixXcd::Zero(stacked.rows(), stacked.cols()));
    }
    g->coeff[t.order - 1] += t.coeff;
  }
  return groups;
}

}  // namespace

StateSpaceController::Explicit StateSpaceController::explicit_form() const {
  return {Ak - Bk * Cx, Bk, Cu - Du * Cx, Du};
}

StateSpaceController realize(const PfdMatrix& phi_x, const PfdMatrix& phi_u) {
  const int n = phi_x.rows();
  if (phi_x.cols() != n || phi_u.cols() != n) {
    throw ValidationError("realize: Phi_x must be n x n and Phi_u p x n");
  }
  const int p = phi_u.rows();
  const auto first = impulse_response(phi_x, 1);
  const double dev = (first[0] - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (dev > 1e-6) {
    std::ostringstream os;
    os << "first impulse sample of Phi_x deviates from I by " << dev;
    throw PreconditionError(os.str());
  }

  // Stack [Phi_x; Phi_u] so both outputs share one modal state.
  PfdMatrix stacked(n + p, n);
  for (const auto& t : phi_x.terms()) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n + p, n);
    c.topRows(n) = t.coeff;
    stacked.add_term(t.pole, t.order, c);
  }
  for (const auto& t : phi_u.terms()) {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n + p, n);
    c.bottomRows(p) = t.coeff;
    stacked.add_term(t.pole, t.order, c);
  }
  const auto groups = group_terms(stacked);

  int order = 0;
  for (const auto& g : groups) {
    order += static_cast<int>(g.coeff.size()) * n * (g.pair ? 2 : 1);
  }
  Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(order, order);
  Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(order, n);
  Eigen::MatrixXd Cc = Eigen::MatrixXd::Zero(n + p, order);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

  // Chain eta_1+ = p eta_1 + in, eta_i+ = p eta_i + eta_{i-1}, so that
  // eta_i = in / (z - p)^i and the output is sum_i c_i eta_i (2 Re for pairs).
  int at = 0;
  for (const auto& g : groups) {
    const int R = static_cast<int>(g.coeff.size());
    const int w = g.pair ? 2 * n : n;
    const double a = g.pole.real();
    const double b = g.pole.imag();
    for (int i = 0; i < R; ++i) {
      const int s = at + i * w;
      if (g.pair) {
        Ac.block(s, s, n, n) = a * I;
        Ac.block(s, s + n, n, n) = -b * I;
        Ac.block(s + n, s, n, n) = b * I;
        Ac.block(s + n, s + n, n, n) = a * I;
        Cc.block(0, s, n + p, n) = 2.0 * g.coeff[i].real();
        Cc.block(0, s + n, n + p, n) = -2.0 * g.coeff[i].imag();
      } else {
        Ac.block(s, s, n, n) = a * I;
        Cc.block(0, s, n + p, n) = g.coeff[i].real();
      }
      if (i == 0) {
        Bc.block(s, 0, n, n) = I;
      } else {
        Ac.block(s, s - w, w, w) += Eigen::MatrixXd::Identity(w, w);
      }
    }
    at += R * w;
  }

  // z Phi has realization (Ac, Bc, Cc Ac, Cc Bc).
  StateSpaceController k;
  k.Ak = Ac;
  k.Bk = Bc;
  const Eigen::MatrixXd CA = Cc * Ac;
  k.Cx = CA.topRows(n);
  k.Cu = CA.bottomRows(p);
  k.Du = (Cc * Bc).bottomRows(p);
  return k;
}

Trajectory simulate(const PlantModel& plant,
                    const StateSpaceController& ctrl,
                    const Eigen::VectorXd& direction, int horizon, bool step) {
  const int n = plant.n();
  if (horizon < 1) throw ValidationError("horizon must be positive");
  if (direction.size() != n || ctrl.inputs() != n ||
      ctrl.outputs() != plant.p()) {
    throw ValidationError("controller and plant dimensions do not match");
  }
  const Eigen::MatrixXd& A = plant.A();
  const Eigen::MatrixXd& B = plant.B();
  Trajectory tr;
  tr.x.resize(n, horizon);
  tr.u.resize(plant.p(), horizon);
  tr.y.resize(plant.m(), horizon);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(ctrl.order());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(plant.p());
  for (int k = 0; k <= horizon; ++k) {
    const Eigen::VectorXd what = x - ctrl.Cx * xi;
    u = ctrl.Cu * xi + ctrl.Du * what;
    if (k >= 1) {
      tr.x.col(k - 1) = x;
      tr.u.col(k - 1) = u;
      tr.y.col(k - 1) = plant.C() * x + plant.D() * u;
    }
    if (k == horizon) break;
    const bool inject = step || k == 0;
    Eigen::VectorXd xn = A * x + B * u;
    if (inject) xn += direction;
    xi = ctrl.Ak * xi + ctrl.Bk * what;
    x = std::move(xn);
    if (!(x.norm() <= kDivergenceLimit)) {
      std::ostringstream os;
      os << "closed-loop state diverged at step " << k + 1;
      throw NumericalError(os.str());
    }
  }
  return tr;
}

Trajectory simulate_impulse(const PlantModel& plant,
                            const StateSpaceController& controller,
                            int channel, int horizon) {
  if (channel < 0 || channel >= plant.q()) {
    throw ValidationError("disturbance channel out of range");
  }
  return simulate(plant, controller, plant.Bhat().col(channel), horizon, false);
}

Trajectory simulate_step(const PlantModel& plant,
                         const StateSpaceController& controller, int channel,
                         int horizon) {
  if (channel < 0 || channel >= plant.q()) {
    throw ValidationError("disturbance channel out of range");
  }
  return simulate(plant, controller, plant.Bhat().col(channel), horizon, true);
}

Trajectory simulate_state_impulse(const PlantModel& plant,
                                  const StateSpaceController& controller,
                                  int index, int horizon) {
  if (index < 0 || index >= plant.n()) {
    throw ValidationError("state index out of range");
  }
  return simulate(plant, controller,
                  Eigen::VectorXd::Unit(plant.n(), index), horizon, false);
}

}  // namespace sls
