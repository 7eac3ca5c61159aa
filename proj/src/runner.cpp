#include "sls/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sls/closedloop.hpp"
#include "sls/dbc.hpp"
#include "sls/diagnostics.hpp"
#include "sls/errors.hpp"

namespace sls {

namespace {

using Samples = std::vector<Eigen::MatrixXd>;

int sweep_impl(const RunConfig& cfg, const std::vector<int>& n_values, bool nested,
               std::ostream& log, bool append);

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string complex_str(Complex z) {
  std::ostringstream os;
  os << num(z.real());
  if (z.imag() != 0.0) os << (z.imag() < 0 ? " - " : " + ") << num(std::abs(z.imag())) << "i";
  return os.str();
}

Samples cumulative(const Samples& s) {
  Samples out = s;
  for (std::size_t k = 1; k < out.size(); ++k) out[k] += out[k - 1];
  return out;
}

Samples closed_loop_wy(const PlantModel& P, const Samples& x, const Samples& u) {
  Samples out;
  out.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.push_back(P.C() * x[k] * P.Bhat() + P.D() * u[k] * P.Bhat());
  }
  return out;
}

// One row per k; for each (output i, channel j) the designed, realized and
// desired values.
void write_traces(const std::filesystem::path& path, const Samples& designed,
                  const Samples& realized, const Samples& desired) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  const int m = static_cast<int>(designed.front().rows());
  const int q = static_cast<int>(designed.front().cols());
  f << "k";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < q; ++j) {
      const std::string tag = "_y" + std::to_string(i + 1) + "_w" + std::to_string(j + 1);
      f << ",designed" << tag << ",realized" << tag << ",desired" << tag;
    }
  }
  f << "\n";
  for (std::size_t k = 0; k < designed.size(); ++k) {
    f << k + 1;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < q; ++j) {
        f << "," << num(designed[k](i, j)) << "," << num(realized[k](i, j)) << ","
          << num(desired[k](i, j));
      }
    }
    f << "\n";
  }
}

double max_abs_diff(const Samples& a, const Samples& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).cwiseAbs().maxCoeff());
  return d;
}

void write_convergence(const std::filesystem::path& path, const ConvergenceReport& rep) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << "n,num_poles,covering_radius,cost,rel_error,ratio,status\n";
  for (const auto& r : rep.rows) {
    std::string status = r.status;
    for (auto& c : status) {
      if (c == '"') c = '\'';
    }
    f << r.n << "," << r.num_poles << "," << num(r.covering_radius) << ",";
    if (r.ok) {
      f << num(r.cost) << "," << num(r.rel_error) << "," << num(r.ratio);
    } else {
      f << ",,";
    }
    f << ",\"" << status << "\"\n";
  }
}

void write_report_summary(std::ostream& os, const ConvergenceReport& rep) {
  os << "convergence reference: " << num(rep.reference)
     << (rep.reference_external ? " (external)" : " (largest n)") << "\n";
  os << "convergence slope: " << num(rep.slope) << "\n";
  os << "convergence monotone: " << (rep.monotone ? "yes" : "no") << "\n";
  os << "max rel_error*sqrt(n): " << num(rep.max_sqrt_n_error) << "\n";
}

std::filesystem::path prepare_dir(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output.directory);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_header(std::ostream& s, const RunConfig& cfg) {
  const PlantModel& P = *cfg.plant;
  s << "plant: n=" << P.n() << " p=" << P.p() << " q=" << P.q() << " m=" << P.m();
  if (!cfg.preset.empty()) s << " (preset " << cfg.preset << ")";
  s << "\n";
  if (cfg.sample_time > 0.0) s << "sample time: " << num(cfg.sample_time) << " s\n";
  s << "lambda: " << num(cfg.design.lambda) << "\n";
}

int run_spa(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const PlantModel& P = *cfg.plant;
  const SynthesisProblem pr = cfg.problem();
  log << "spa: " << pr.poles.size() << " poles, horizon " << pr.resolved_horizon() << "\n";
  const SynthesisResult res = solve(pr);
  log << "spa: objective " << num(res.objective) << " in " << res.stats.wall_time << " s\n";

  const int Ti = cfg.output.impulse_horizon;
  const int Ts = cfg.output.step_horizon;
  const int Tmax = std::max(Ti, Ts);
  const Samples phx = impulse_response(res.phi_x, Tmax);
  const Samples phu = impulse_response(res.phi_u, Tmax);
  const Samples designed = closed_loop_wy(P, phx, phu);
  const Samples desired = impulse_response(cfg.desired, Tmax);

  const StateSpaceController ctrl = realize(res.phi_x, res.phi_u);
  Samples imp_real, step_real;
  for (int k = 0; k < Tmax; ++k) {
    imp_real.push_back(Eigen::MatrixXd::Zero(P.m(), P.q()));
    step_real.push_back(Eigen::MatrixXd::Zero(P.m(), P.q()));
  }
  for (int j = 0; j < P.q(); ++j) {
    const Trajectory ti = simulate_impulse(P, ctrl, j, Ti);
    for (int k = 0; k < Ti; ++k) imp_real[k].col(j) = ti.y.col(k);
    const Trajectory ts = simulate_step(P, ctrl, j, Ts);
    for (int k = 0; k < Ts; ++k) step_real[k].col(j) = ts.y.col(k);
  }
  const auto head = [](const Samples& s, int T) { return Samples(s.begin(), s.begin() + T); };
  write_traces(dir / "impulse_wy.csv", head(designed, Ti), head(imp_real, Ti), head(desired, Ti));
  write_traces(dir / "step_wy.csv", head(cumulative(designed), Ts), head(step_real, Ts),
               head(cumulative(desired), Ts));

  std::ofstream s(dir / "summary.txt");
  s << "method: spa\n";
  write_header(s, cfg);
  s << "objective: " << num(res.objective) << "\n";
  s << "h2 term: " << num(res.h2_term) << "\n";
  if (res.hinf_evaluated) s << "hinf term: " << num(res.hinf_term) << "\n";
  s << "constraint residual: " << num(res.constraint_residual) << "\n";
  s << "horizon: " << res.horizon << "\n";
  s << "controller order: " << ctrl.order() << "\n";
  s << "realization max |designed - realized| (impulse): "
    << num(max_abs_diff(head(designed, Ti), head(imp_real, Ti))) << "\n";
  s << "solver: " << res.stats.status << ", " << res.stats.iterations << " iterations, "
    << num(res.stats.wall_time) << " s\n";
  s << "poles (" << pr.poles.size() << "):\n";
  for (const auto& p : pr.poles.poles) s << "  " << complex_str(p.value) << " " << to_string(p.tag) << "\n";
  return kExitOk;
}

int run_dbc(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& log) {
  const PlantModel& P = *cfg.plant;
  const SynthesisProblem pr = make_problem(P, cfg.desired, cfg.design.lambda, PoleSet{},
                                           cfg.design.horizon);
  const int T_fir = cfg.design.T_fir;
  log << "dbc: T_fir " << T_fir << "\n";
  const DbcResult res = golden_section_dbc(pr, T_fir);

  std::ofstream s(dir / "summary.txt");
  s << "method: dbc\n";
  write_header(s, cfg);
  s << "T_fir: " << T_fir << "\n";
  s << "gamma_min: " << num(res.gamma_min) << "\n";
  if (!res.feasible) {
    s << "status: infeasible (gamma_min >= 1)\n";
    log << "dbc: infeasible, gamma_min " << num(res.gamma_min) << "\n";
    return kExitInfeasible;
  }
  s << "status: feasible\n";
  s << "gamma*: " << num(res.gamma_star) << "\n";
  s << "objective: " << num(res.objective) << "\n";
  s << "inner objective: " << num(res.design.inner_objective) << "\n";
  s << "slack norm: " << num(res.design.slack_norm) << "\n";
  s << "golden-section iterations: " << res.iterations << "\n";
  if (res.unimodal) s << "unimodal on grid: " << (*res.unimodal ? "yes" : "no") << "\n";
  s << "wall time: " << num(res.wall_time) << " s\n";
  log << "dbc: objective " << num(res.objective) << " at gamma " << num(res.gamma_star) << "\n";

  const int Ti = cfg.output.impulse_horizon;
  const int Ts = cfg.output.step_horizon;
  const int Tmax = std::max(Ti, Ts);
  const DbcDesign& d = res.design;
  Samples gx(Tmax, Eigen::MatrixXd::Zero(P.n(), P.n()));
  Samples gu(Tmax, Eigen::MatrixXd::Zero(P.p(), P.n()));
  for (int k = 0; k < d.taps && k < Tmax; ++k) {
    gx[k] = d.G[k];
    gu[k] = d.H[k];
  }
  const Samples designed = closed_loop_wy(P, gx, gu);
  const RealizedResponses rr = recover_true_responses(d.G, d.H, d.V, d.taps, Tmax);
  const Samples realized = closed_loop_wy(P, rr.x, rr.u);
  const Samples desired = impulse_response(cfg.desired, Tmax);
  const auto head = [](const Samples& v, int T) { return Samples(v.begin(), v.begin() + T); };
  write_traces(dir / "impulse_wy.csv", head(designed, Ti), head(realized, Ti), head(desired, Ti));
  write_traces(dir / "step_wy.csv", head(cumulative(designed), Ts),
               head(cumulative(realized), Ts), head(cumulative(desired), Ts));
  return kExitOk;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& log) {
  if (!cfg.plant) throw PreconditionError("config has no plant");
  const auto dir = prepare_dir(cfg);
  int status = kExitOk;
  try {
    status = cfg.design.method == Method::spa ? run_spa(cfg, dir, log) : run_dbc(cfg, dir, log);
    if (status == kExitOk && !cfg.output.sweep.empty()) {
      status = sweep_impl(cfg, cfg.output.sweep, true, log, true);
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    std::ofstream s(dir / "summary.txt", std::ios::app);
    s << "error: " << e.what() << "\n";
    log << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return status;
}

namespace {

int sweep_impl(const RunConfig& cfg, const std::vector<int>& n_values, bool nested,
               std::ostream& log, bool append) {
  const auto dir = prepare_dir(cfg);
  const SynthesisProblem pr =
      make_problem(*cfg.plant, cfg.desired, cfg.design.lambda, PoleSet{}, cfg.design.horizon);
  ConvergenceOptions opt;
  opt.nested = nested;
  opt.prior = cfg.design.prior;
  log << "sweep: " << n_values.size() << " rows\n";
  ConvergenceReport rep;
  try {
    rep = convergence_study(pr, n_values, opt);
  } catch (const ValidationError& e) {
    log << "sweep failed: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  write_convergence(dir / "convergence.csv", rep);
  std::ofstream s(dir / "summary.txt", append ? std::ios::app : std::ios::trunc);
  write_report_summary(s, rep);
  write_report_summary(log, rep);
  for (const auto& r : rep.rows) {
    if (!r.ok) return kExitSolverFailure;
  }
  return kExitOk;
}

}  // namespace

int run_sweep(const RunConfig& cfg, const std::vector<int>& n_values, bool nested,
              std::ostream& log) {
  if (!cfg.plant) throw PreconditionError("config has no plant");
  return sweep_impl(cfg, n_values, nested, log, false);
}

}  // namespace sls
