// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sls/closedloop.hpp"
#include "sls/config.hpp"
#include "sls/dbc.hpp"
#include "sls/diagnostics.hpp"
#include "sls/errors.hpp"
#include "sls/poleselect.hpp"
#include "sls/spa.hpp"

using namespace sls;
using Samples = std::vector<Eigen::MatrixXd>;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

SynthesisProblem converter_spa(int num_poles) {
  RunConfig cfg = power_converter_preset();
  cfg.design.n_spiral = power_converter_spirals(num_poles);
  return cfg.problem();
}

Samples wy(const PlantModel& P, const Samples& x, const Samples& u) {
  Samples out;
  out.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out.push_back(P.C() * x[k] * P.Bhat() + P.D() * u[k] * P.Bhat());
  return out;
}

double distance(const Samples& a, const Samples& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]).squaredNorm();
  return std::sqrt(s);
}

// Realized T_wy of an SPA design, taken from closed-loop simulation.
Samples simulated_wy(const PlantModel& P, const SynthesisResult& r, int T) {
  const StateSpaceController K = realize(r.phi_x, r.phi_u);
  Samples out(T, Eigen::MatrixXd::Zero(P.m(), P.q()));
  for (int j = 0; j < P.q(); ++j) {
    const Trajectory t = simulate_impulse(P, K, j, T);
    for (int k = 0; k < T; ++k) out[k].col(j) = t.y.col(k);
  }
  return out;
}

Outcome sls_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> dn(1, 6), dp(1, 3);
  int solved = 0, failed = 0, violations = 0, plants = 0;
  double worst = 0.0;
  while (plants < 50) {
    const int n = dn(rng), p = dp(rng);
    Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    const double rho = A.eigenvalues().cwiseAbs().maxCoeff();
    A *= (0.3 + 0.9 * unif(rng)) / rho;  // spectral radius in [0.3, 1.2]
    const Eigen::MatrixXd B = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return g(rng); });
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n + p, n), D = Eigen::MatrixXd::Zero(n + p, p);
    C.topRows(n).setIdentity();
    D.bottomRows(p).setIdentity();
    const PlantModel P(A, B, Eigen::MatrixXd::Identity(n, n), C, D);
    if (!is_stabilizable(P).stabilizable) continue;
    ++plants;
    const EigenStructure eig = eigen_multiplicities(P);
    const std::vector<Complex> none;
    try {
      const SynthesisProblem pr = make_problem(P, PfdMatrix(n + p, n), 0.0, assemble(eig, none, 6));
      const SynthesisResult r = solve(pr);
      std::vector<Complex> pts;
      for (int i = 0; i < 20; ++i) pts.push_back(std::polar(1.0, 2 * kPi * unif(rng)));
      const double e = sls_identity_error(P, r.phi_x, r.phi_u, pts);
      worst = std::max(worst, e);
      ++solved;
      if (!(e <= 1e-6)) ++violations;
    } catch (const Error&) {
      ++failed;
    }
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = solved > 0 && violations == 0 && t < 120.0;
  o.detail = std::to_string(solved) + "/50 solved, " + std::to_string(failed) + " failed, worst " +
             fmt("%.2e", worst) + ", " + fmt("%.1f", t) + " s";
  return o;
}

Outcome feasibility_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream d;
  bool ok = true;
  for (int np : {7, 15}) {
    const SynthesisProblem pr = converter_spa(np);
    const SynthesisResult r = solve(pr);
    const bool good = static_cast<int>(pr.poles.size()) == np && std::isfinite(r.objective) &&
                      r.constraint_residual < 1e-6;
    ok = ok && good;
    d << "SPA" << np << " J=" << fmt("%.4g", r.objective) << (good ? "" : " (bad)") << "; ";
  }
  const RunConfig cfg = power_converter_preset();
  const PlantModel& P = *cfg.plant;
  // Without slack the FIR constraint is exact; it can only hold if gamma_min = 0.
  double min_gmin = 1e300;
  for (int T = 2; T <= 400; ++T) min_gmin = std::min(min_gmin, dbc_gamma_min(P, T));
  const bool no_slack_infeasible = min_gmin > 1e-6 && !uncontrollable_eigenvalues(P).empty();
  ok = ok && no_slack_infeasible;
  d << "no-slack min gamma_min(2..400)=" << fmt("%.3g", min_gmin) << "; ";
  const SynthesisProblem pr = make_problem(P, cfg.desired, 0.0, PoleSet{});
  const DbcResult r30 = golden_section_dbc(pr, 30);
  ok = ok && !r30.feasible;
  d << "T_fir=30 " << (r30.feasible ? "feasible" : "infeasible") << "; ";
  int first = -1;
  for (int T = 31; T <= 45 && first < 0; ++T) {
    if (golden_section_dbc(pr, T).feasible) first = T;
  }
  ok = ok && first > 0;
  d << "first feasible T_fir=" << first;
  const double t = seconds_since(t0);
  ok = ok && t < 600.0;
  d << ", " << fmt("%.1f", t) << " s";
  return {ok, d.str()};
}

Outcome quality_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = power_converter_preset();
  const PlantModel& P = *cfg.plant;
  const int T = 20000;

  // Reference: SPA with the prior pole and a large nested spiral fill.
  RunConfig ref_cfg = cfg;
  ref_cfg.design.n_spiral = {2, 5, 10, 20};
  const SynthesisProblem ref_pr = ref_cfg.problem();
  const SynthesisResult ref = solve(ref_pr);
  const Samples ref_wy = wy(P, impulse_response(ref.phi_x, T), impulse_response(ref.phi_u, T));

  const SynthesisResult spa15 = solve(converter_spa(15));
  const double d_spa = distance(simulated_wy(P, spa15, T), ref_wy);

  const SynthesisProblem dbc_pr = make_problem(P, cfg.desired, 0.0, PoleSet{});
  const DbcResult dbc = golden_section_dbc(dbc_pr, 300);
  double d_dbc = std::numeric_limits<double>::infinity();
  if (dbc.feasible) {
    const RealizedResponses rr =
        recover_true_responses(dbc.design.G, dbc.design.H, dbc.design.V, dbc.design.taps, T);
    d_dbc = distance(wy(P, rr.x, rr.u), ref_wy);
  }
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = d_spa < d_dbc && t < 1800.0;
  o.detail = "reference " + std::to_string(ref_pr.poles.size()) + " poles; SPA15 " + fmt("%.4g", d_spa) +
             " vs DBC300 " + fmt("%.4g", d_dbc) + ", " + fmt("%.1f", t) + " s";
  return o;
}

Outcome convergence_rate() {
  const auto t0 = std::chrono::steady_clock::now();
  Eigen::MatrixXd A(2, 2), B(2, 1), C(3, 2), D(3, 1);
  A << 0.97, 0.2, -0.2, 0.97;
  B << 0, 1;
  C << 1, 0, 0, 1, 0, 0;
  D << 0, 0, 10;
  const PlantModel P(A, B, Eigen::MatrixXd::Identity(2, 2), C, D);
  const SynthesisProblem pr = make_problem(P, PfdMatrix(3, 2), 0.0, PoleSet{});
  ConvergenceOptions opt;
  opt.nested = true;
  opt.reference = h2_state_feedback_optimum(P);
  const ConvergenceReport rep = convergence_study(pr, {4, 9, 16, 25, 36, 49}, opt);
  bool all_ok = true;
  for (const auto& r : rep.rows) all_ok = all_ok && r.ok;
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = all_ok && rep.slope <= -0.4 && rep.monotone && t < 300.0;
  std::ostringstream d;
  d << "J*=" << fmt("%.10g", rep.reference) << ", slope " << fmt("%.3f", rep.slope) << ", errors";
  for (const auto& r : rep.rows) d << " " << fmt("%.2e", r.rel_error);
  d << (rep.monotone ? ", monotone" : ", NOT monotone") << ", " << fmt("%.1f", t) << " s";
  o.detail = d.str();
  return o;
}

Outcome lemma_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const LemmaReport r = lemma_identity_suite(1000, 7);
  const double t = seconds_since(t0);
  Outcome o;
  o.pass = r.trials == 1000 && r.passed() && t < 60.0;
  o.detail = "identity a " + fmt("%.1e", r.worst_identity_a) + ", b " + fmt("%.1e", r.worst_identity_b) +
             ", bound ratio " + fmt("%.3f", r.worst_bound_ratio) + ", failures " +
             std::to_string(r.identity_a_failures + r.identity_b_failures + r.bound_failures) + ", " +
             fmt("%.1f", t) + " s";
  return o;
}

Outcome realization_fidelity() {
  const int T = 5000;
  const RunConfig cfg = power_converter_preset();
  const PlantModel& P = *cfg.plant;
  double worst_imp = 0.0, worst_step = 0.0;
  for (int np : {7, 15}) {
    const SynthesisResult r = solve(converter_spa(np));
    const StateSpaceController K = realize(r.phi_x, r.phi_u);
    const Samples phx = impulse_response(r.phi_x, T), phu = impulse_response(r.phi_u, T);
    for (int i = 0; i < P.n(); ++i) {
      const Trajectory ti = simulate_state_impulse(P, K, i, T);
      const Trajectory ts = simulate(P, K, Eigen::VectorXd::Unit(P.n(), i), T, true);
      Eigen::VectorXd cx = Eigen::VectorXd::Zero(P.n()), cu = Eigen::VectorXd::Zero(P.p());
      double peak = 0.0;
      for (int k = 0; k < T; ++k) {
        worst_imp = std::max(worst_imp, (ti.x.col(k) - phx[k].col(i)).cwiseAbs().maxCoeff());
        worst_imp = std::max(worst_imp, (ti.u.col(k) - phu[k].col(i)).cwiseAbs().maxCoeff());
        cx += ti.x.col(k);
        cu += ti.u.col(k);
        peak = std::max({peak, cx.cwiseAbs().maxCoeff(), cu.cwiseAbs().maxCoeff()});
      }
      cx.setZero();
      cu.setZero();
      for (int k = 0; k < T; ++k) {
        cx += ti.x.col(k);
        cu += ti.u.col(k);
        const double e = std::max((ts.x.col(k) - cx).cwiseAbs().maxCoeff(),
                                  (ts.u.col(k) - cu).cwiseAbs().maxCoeff());
        worst_step = std::max(worst_step, e / peak);
      }
    }
  }
  Outcome o;
  o.pass = worst_imp <= 1e-6 && worst_step <= 1e-9;
  o.detail = "impulse max dev " + fmt("%.2e", worst_imp) + ", step vs cumulative (peak-relative) " +
             fmt("%.2e", worst_step);
  return o;
}

Outcome geometry() {
  bool card = true, conj = true;
  for (int n = 2; n <= 64; ++n) {
    const PoleSet s = spiral_poles(n);
    card = card && static_cast<int>(s.size()) == 2 * n - 2;
    for (const auto& p : s.poles) conj = conj && s.contains(std::conj(p.value), 1e-12);
  }
  double lo = 1e300, hi = 0.0;
  for (int n = 4; n <= 49; ++n) {
    const double v = covering_radius(spiral_poles(n)) * std::sqrt(static_cast<double>(n));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Outcome o;
  o.pass = card && conj && hi / lo < 1.5;
  o.detail = std::string(card ? "cardinality ok" : "cardinality wrong") + ", " +
             (conj ? "conjugate-closed" : "not conjugate-closed") + ", D*sqrt(n) in [" + fmt("%.3f", lo) +
             ", " + fmt("%.3f", hi) + "]";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 sls identity on random plants", sls_identity},
      {"2 converter feasibility contrast", feasibility_contrast},
      {"3 converter quality contrast", quality_contrast},
      {"4 convergence rate", convergence_rate},
      {"5 lemma identities and bound", lemma_suite},
      {"6 realization fidelity", realization_fidelity},
      {"7 spiral geometry", geometry},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
