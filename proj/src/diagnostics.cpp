#include "sls/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/LU>

#include "sls/errors.hpp"

namespace sls {

namespace {

ConvergenceRow run_row(const SynthesisProblem& tmpl, int n,
                       const PoleSet& fill, const ConvergenceOptions& opt) {
  ConvergenceRow row;
  row.n = n;
  try {
    PoleSet poles = assemble(tmpl.eig, opt.prior, fill);
    row.num_poles = static_cast<int>(poles.size());
    row.covering_radius = covering_radius(poles, opt.grid_points);
    SynthesisProblem pr = tmpl;
    pr.poles = std::move(poles);
    const SynthesisResult res = solve(pr);
    row.cost = res.objective;
    row.ok = true;
    row.status = "ok";
  } catch (const std::exception& e) {
    row.ok = false;
    row.status = e.what();
  }
  return row;
}

}  // namespace

ConvergenceReport convergence_study(const SynthesisProblem& problem,
                                    const std::vector<int>& n_values,
                                    const ConvergenceOptions& opt) {
  if (n_values.empty()) throw ValidationError("n_values is empty");
  // A fill that cannot be built fails its row (and, when nested, every
  // later row) without stopping the sweep.
  std::vector<PoleSet> fills(n_values.size());
  std::vector<std::string> fill_errors(n_values.size());
  PoleSet acc;
  std::string acc_error;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    try {
      PoleSet s = spiral_poles(n_values[i]);
      if (opt.nested) {
        for (auto& p : s.poles) acc.poles.push_back(p);
        fills[i] = acc;
      } else {
        fills[i] = std::move(s);
      }
    } catch (const std::exception& e) {
      fill_errors[i] = e.what();
      if (opt.nested) acc_error = e.what();
    }
    if (opt.nested && !acc_error.empty()) fill_errors[i] = acc_error;
  }

  std::vector<std::future<ConvergenceRow>> jobs;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (!fill_errors[i].empty()) {
      std::promise<ConvergenceRow> failed;
      ConvergenceRow row;
      row.n = n_values[i];
      row.status = fill_errors[i];
      failed.set_value(row);
      jobs.push_back(failed.get_future());
      continue;
    }
    jobs.push_back(std::async(std::launch::async, run_row, std::cref(problem),
                              n_values[i], std::cref(fills[i]), std::cref(opt)));
  }
  ConvergenceReport rep;
  for (auto& j : jobs) rep.rows.push_back(j.get());

  if (opt.reference) {
    rep.reference = *opt.reference;
    rep.reference_external = true;
  } else {
    // Largest successful n acts as the proxy optimum.
    rep.reference = std::numeric_limits<double>::quiet_NaN();
    int best_n = -1;
    for (const auto& r : rep.rows) {
      if (r.ok && r.n > best_n) {
        best_n = r.n;
        rep.reference = r.cost;
      }
    }
  }
  if (!(rep.reference > 0.0) || !std::isfinite(rep.reference)) {
    throw ValidationError("convergence study needs a positive reference cost");
  }

  double prev = std::numeric_limits<double>::infinity();
  std::vector<double> lx, ly;
  for (auto& r : rep.rows) {
    if (!r.ok) continue;
    r.rel_error = (r.cost - rep.reference) / rep.reference;
    r.ratio = r.covering_radius > 0.0 ? r.rel_error / r.covering_radius : 0.0;
    if (r.rel_error > prev + 1e-9) rep.monotone = false;
    prev = r.rel_error;
    rep.max_sqrt_n_error =
        std::max(rep.max_sqrt_n_error, r.rel_error * std::sqrt(double(r.n)));
    rep.max_ratio = std::max(rep.max_ratio, r.ratio);
    if (r.rel_error > 0.0) {
      lx.push_back(std::log(double(r.n)));
      ly.push_back(std::log(r.rel_error));
    }
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    rep.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  } else {
    rep.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double h2_state_feedback_optimum(const PlantModel& plant) {
  const Eigen::MatrixXd& A = plant.A();
  const Eigen::MatrixXd& B = plant.B();
  const Eigen::MatrixXd Q = plant.C().transpose() * plant.C();
  const Eigen::MatrixXd R = plant.D().transpose() * plant.D();
  const Eigen::MatrixXd S = plant.C().transpose() * plant.D();
  Eigen::MatrixXd P = Q;
  for (int it = 0; it < 200000; ++it) {
    const Eigen::MatrixXd G = R + B.transpose() * P * B;
    const Eigen::MatrixXd N = A.transpose() * P * B + S;
    Eigen::MatrixXd Pn = A.transpose() * P * A + Q -
                         N * G.partialPivLu().solve(N.transpose());
    Pn = 0.5 * (Pn + Pn.transpose());
    const double change = (Pn - P).norm();
    P = std::move(Pn);
    if (change <= 1e-15 * (1.0 + P.norm())) {
      return std::sqrt((plant.Bhat().transpose() * P * plant.Bhat()).trace());
    }
  }
  throw ConvergenceError("Riccati iteration did not converge");
}

std::vector<DbcBoundRow> dbc_bound_trace(double C_star, double rho_star,
                                         double c, double lambda,
                                         const std::vector<int>& T_values) {
  std::vector<DbcBoundRow> out;
  for (int T : T_values) {
    DbcBoundRow row;
    row.T = T;
    const double rT = std::pow(rho_star, T);
    const double cr = C_star * rT;
    row.valid = cr < 1.0;
    if (row.valid) {
      row.bound = cr / (1.0 - cr) * (1.0 + lambda * c / (1.0 - rT));
    } else {
      row.bound = std::numeric_limits<double>::infinity();
    }
    out.push_back(row);
  }
  return out;
}

LemmaReport lemma_identity_suite(int trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto disk_point = [&](double radius) {
    const double r = radius * std::sqrt(unif(rng));
    return std::polar(r, 2.0 * M_PI * unif(rng));
  };
  auto separated_poles = [&](int m, double radius, double sep) {
    std::vector<Complex> p;
    while (static_cast<int>(p.size()) < m) {
      const Complex z = disk_point(radius);
      bool ok = true;
      for (const auto& w : p) ok = ok && std::abs(z - w) >= sep;
      if (ok) p.push_back(z);
    }
    return p;
  };
  auto circle = [&](int count) {
    std::vector<Complex> zs;
    for (int i = 0; i < count; ++i) zs.push_back(std::polar(1.0, 2.0 * M_PI * unif(rng)));
    return zs;
  };
  auto prod_minus = [](Complex z, const std::vector<Complex>& p) {
    Complex v = 1.0;
    for (const auto& x : p) v *= (z - x);
    return v;
  };

  LemmaReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    // Identity (a): 0 <= k < m.
    {
      const int m = 1 + static_cast<int>(unif(rng) * 5);
      const int k = static_cast<int>(unif(rng) * m);
      const Complex q = disk_point(0.9);
      const auto p = separated_poles(m, 0.8, 0.05);
      const auto c = lagrange_coeffs(p);
      double worst = 0.0;
      for (const Complex z : circle(20)) {
        Complex lhs = 0.0;
        double scale = 0.0;
        for (int i = 0; i < m; ++i) {
          const Complex term = std::pow(p[i] - q, k) * c[i] / (z - p[i]);
          lhs += term;
          scale += std::abs(term);
        }
        const Complex rhs = std::pow(z - q, k) / prod_minus(z, p);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, std::abs(rhs)));
      }
      rep.worst_identity_a = std::max(rep.worst_identity_a, worst);
      if (!(worst <= kIdentityTol)) ++rep.identity_a_failures;
    }
    // Identity (b): k >= m, polynomial part subtracted.
    {
      const int m = 1 + static_cast<int>(unif(rng) * 5);
      const int k = m + static_cast<int>(unif(rng) * 4);
      const Complex q = disk_point(0.9);
      const auto p = separated_poles(m, 0.8, 0.05);
      const auto c = lagrange_coeffs(p);
      std::vector<Complex> b(k - m + 1, 0.0);
      for (int i = 0; i <= k - m; ++i) {
        for (int j = 0; j < m; ++j) b[i] += std::pow(p[j] - q, k - 1 - i) * c[j];
      }
      double worst = 0.0;
      for (const Complex z : circle(20)) {
        Complex lhs = 0.0;
        double scale = 0.0;
        for (int i = 0; i < m; ++i) {
          const Complex term = std::pow(p[i] - q, k) * c[i] / (z - p[i]);
          lhs += term;
          scale += std::abs(term);
        }
        const Complex head = std::pow(z - q, k) / prod_minus(z, p);
        Complex rhs = head;
        scale = std::max(scale, std::abs(head));
        for (int i = 0; i <= k - m; ++i) {
          const Complex term = b[i] * std::pow(z - q, i);
          rhs -= term;
          scale = std::max(scale, std::abs(term));
        }
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
      }
      rep.worst_identity_b = std::max(rep.worst_identity_b, worst);
      if (!(worst <= kIdentityTol)) ++rep.identity_b_failures;
    }
    // Approximation constant on the unit circle, 0 <= k <= m, dhat <= 1.
    {
      const int m = 1 + static_cast<int>(unif(rng) * 5);
      const int k = static_cast<int>(unif(rng) * (m + 1));
      const Complex q = disk_point(0.9);
      const double spread = unif(rng);
      std::vector<Complex> p;
      while (static_cast<int>(p.size()) < m) {
        const Complex z = q + disk_point(spread);
        if (std::abs(z) < 0.99) p.push_back(z);
      }
      double dhat = 0.0, rmax = 0.0;
      for (const auto& x : p) {
        dhat = std::max(dhat, std::abs(x - q));
        rmax = std::max(rmax, std::abs(x));
      }
      const double eta = 1.0 - std::abs(q);
      const double delta = 1.0 - rmax;
      const double K = (std::pow(std::abs(q) + 2.0, m) - std::pow(std::abs(q) + 1.0, m)) /
                       (std::pow(eta, m - k) * std::pow(delta, m));
      double worst = 0.0;
      for (int i = 0; i < 256; ++i) {
        const Complex z = std::polar(1.0, 2.0 * M_PI * (i + unif(rng)) / 256.0);
        const double lhs = std::abs(std::pow(z - q, k) / prod_minus(z, p) -
                                    std::pow(z - q, k - m));
        worst = std::max(worst, lhs / (K * dhat));
      }
      rep.worst_bound_ratio = std::max(rep.worst_bound_ratio, worst);
      if (!(worst <= 1.0 + 1e-12)) ++rep.bound_failures;
    }
  }
  return rep;
}

}  // namespace sls
