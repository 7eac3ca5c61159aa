#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "sls/config.hpp"
#include "sls/dbc.hpp"
#include "sls/errors.hpp"
#include "support.hpp"

using namespace sls;
using testing_support::unit_circle_points;

namespace {

SynthesisProblem converter_problem() {
  const auto cfg = power_converter_preset();
  return make_problem(*cfg.plant, cfg.desired, 0.0, PoleSet{});
}

// min over H of ||A^L + sum_k A^{L-k} B H_k||_2 from the pseudo-inverse of
// the controllability matrix.
double gamma_min_oracle(const PlantModel& P, int L) {
  const int n = P.n(), p = P.p();
  Eigen::MatrixXd R(n, L * p);
  Eigen::MatrixXd blk = P.B();
  for (int k = 0; k < L; ++k) {
    R.middleCols(k * p, p) = blk;
    blk = P.A() * blk;
  }
  Eigen::MatrixXd AL = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < L; ++k) AL = P.A() * AL;
  const Eigen::MatrixXd X = -R.completeOrthogonalDecomposition().pseudoInverse() * AL;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(AL + R * X).singularValues()(0);
}

double spectral(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

// Recursion residual of a design: G_1 = I, G_{k+1} = A G_k + B H_k, V = -G_{L+1}.
double recursion_error(const PlantModel& P, const DbcDesign& d) {
  double err = (d.G[0] - Eigen::MatrixXd::Identity(P.n(), P.n())).norm();
  for (int k = 0; k + 1 < d.taps; ++k) {
    err = std::max(err, (d.G[k + 1] - P.A() * d.G[k] - P.B() * d.H[k]).norm());
  }
  const Eigen::MatrixXd last = P.A() * d.G[d.taps - 1] + P.B() * d.H[d.taps - 1];
  return std::max(err, (last + d.V).norm());
}

// sqrt(sum_k ||C G_k Bhat + D H_k Bhat - Td(k)||^2) over the horizon.
double fir_objective(const SynthesisProblem& pr, const std::vector<Eigen::MatrixXd>& G,
                     const std::vector<Eigen::MatrixXd>& H) {
  const auto& P = pr.plant;
  const int T = std::max(pr.resolved_horizon(), static_cast<int>(G.size()));
  const auto Td = impulse_response(pr.desired, T);
  double s = 0.0;
  for (int k = 0; k < T; ++k) {
    Eigen::MatrixXd r = -Td[k];
    if (k < static_cast<int>(G.size())) r += P.C() * G[k] * P.Bhat() + P.D() * H[k] * P.Bhat();
    s += r.squaredNorm();
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("slack lower bound") {
  const auto pr = converter_problem();
  for (int T : {2, 10, 30, 31, 60}) {
    CHECK(dbc_gamma_min(pr.plant, T) == doctest::Approx(gamma_min_oracle(pr.plant, T - 1)).epsilon(1e-9));
  }
  CHECK(dbc_gamma_min(pr.plant, 30) > 1.0);
  CHECK(dbc_gamma_min(pr.plant, 31) < 1.0);
}

TEST_CASE("deadbeat design on a controllable pair") {
  Eigen::MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const PlantModel P(A, B, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                     Eigen::MatrixXd::Zero(2, 1));
  const auto pr = make_problem(P, PfdMatrix(2, 2), 0.0, PoleSet{}, 10);
  // Two free taps plus the terminal coefficient reach the origin.
  CHECK(dbc_gamma_min(P, 3) < 1e-12);
  CHECK(dbc_gamma_min(P, 2) == doctest::Approx(1.0));
  const DbcDesign d = solve_dbc_fixed_gamma(pr, 3, 0.0);
  REQUIRE(d.feasible);
  CHECK(d.slack_norm < 1e-9);
  CHECK(recursion_error(P, d) < 1e-9);
}

TEST_CASE("converter plant without slack is infeasible") {
  const auto pr = converter_problem();
  for (int T : {5, 31, 100, 300}) {
    CHECK_FALSE(solve_dbc_fixed_gamma(pr, T, 0.0).feasible);
    CHECK(dbc_gamma_min(pr.plant, T) > 0.0);
  }
}

TEST_CASE("converter plant with generous slack") {
  const auto pr = converter_problem();
  const DbcSubproblem sub(pr, 60);
  const DbcDesign d = sub.solve(0.999);
  REQUIRE(d.feasible);
  CHECK(d.slack_norm <= 0.999 + 1e-6);
  CHECK(recursion_error(pr.plant, d) < 1e-8);
  CHECK(fir_objective(pr, d.G, d.H) == doctest::Approx(d.inner_objective).epsilon(1e-8));

  // Perturbations that keep the terminal coefficient fixed stay feasible and
  // must not improve the objective.
  const int L = d.taps, n = pr.plant.n(), p = pr.plant.p();
  Eigen::MatrixXd map(n * n, L * p * n);
  for (int j = 0; j < L; ++j) {
    Eigen::MatrixXd Apow = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k < L - 1 - j; ++k) Apow = pr.plant.A() * Apow;
    const Eigen::MatrixXd AB = Apow * pr.plant.B();
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < p; ++r) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(p, n);
        E(r, c) = 1.0;
        const Eigen::MatrixXd img = AB * E;
        map.col(j * p * n + c * p + r) = Eigen::Map<const Eigen::VectorXd>(img.data(), n * n);
      }
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeFullV);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-10 * svd.singularValues()(0);
  const Eigen::MatrixXd N = svd.matrixV().rightCols(map.cols() - rank);
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  const double base = d.inner_objective;
  double worst_gain = 0.0;
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd c(N.cols());
    for (int i = 0; i < c.size(); ++i) c(i) = g(rng);
    const Eigen::VectorXd dh = N * (1e-4 * c / c.norm());
    std::vector<Eigen::MatrixXd> H = d.H, G(L);
    for (int j = 0; j < L; ++j) H[j] += Eigen::Map<const Eigen::MatrixXd>(dh.data() + j * p * n, p, n);
    G[0] = Eigen::MatrixXd::Identity(n, n);
    for (int k = 0; k + 1 < L; ++k) G[k + 1] = pr.plant.A() * G[k] + pr.plant.B() * H[k];
    worst_gain = std::max(worst_gain, base - fir_objective(pr, G, H));
  }
  CHECK(worst_gain <= 1e-6 * base);
}

TEST_CASE("inner value does not increase with the slack level") {
  const auto pr = converter_problem();
  const DbcSubproblem sub(pr, 40);
  double prev = std::numeric_limits<double>::infinity();
  for (double g : {0.95, 0.97, 0.99, 0.999}) {
    const DbcDesign d = sub.solve(g);
    REQUIRE(d.feasible);
    CHECK(d.inner_objective <= prev * (1.0 + 1e-7));
    prev = d.inner_objective;
  }
  CHECK_FALSE(sub.solve(0.5).feasible);
}

TEST_CASE("golden section on the converter example") {
  const auto pr = converter_problem();
  const DbcResult r30 = golden_section_dbc(pr, 30);
  CHECK_FALSE(r30.feasible);
  const DbcResult r31 = golden_section_dbc(pr, 31);
  REQUIRE(r31.feasible);
  CHECK(r31.iterations >= 8);
  CHECK(r31.iterations <= 32);
  REQUIRE(r31.unimodal.has_value());
  CHECK(*r31.unimodal);
  CHECK(r31.gamma_star >= r31.gamma_min);
  CHECK(r31.objective == doctest::Approx(r31.design.inner_objective / (1.0 - r31.gamma_star)));
  // Every probe is an upper bound on the reported minimum.
  for (const auto& pb : r31.probes) CHECK(pb.outer >= r31.objective * (1.0 - 1e-3));
  const DbcResult r300 = golden_section_dbc(pr, 300);
  REQUIRE(r300.feasible);
  CHECK(r300.iterations < r31.iterations);
}

TEST_CASE("recovery of realized responses") {
  SUBCASE("zero slack returns the taps") {
    std::vector<Eigen::MatrixXd> gx{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Constant(2, 2, 0.3)};
    std::vector<Eigen::MatrixXd> gu{Eigen::MatrixXd::Constant(1, 2, 0.7), Eigen::MatrixXd::Constant(1, 2, -0.1)};
    const auto rr = recover_true_responses(gx, gu, Eigen::MatrixXd::Zero(2, 2), 2, 6);
    CHECK(rr.x[0] == gx[0]);
    CHECK(rr.x[1] == gx[1]);
    CHECK(rr.u[1] == gu[1]);
    for (int k = 2; k < 6; ++k) CHECK(rr.x[k].isZero(0.0));
  }
  SUBCASE("scalar geometric series") {
    const double g = 1.7, v = 0.4;
    const auto rr = recover_true_responses({Eigen::MatrixXd::Constant(1, 1, g)},
                                           {Eigen::MatrixXd::Constant(1, 1, 0.0)},
                                           Eigen::MatrixXd::Constant(1, 1, v), 1, 12);
    // Long division of g / (z + v).
    double c = g;
    for (int k = 1; k <= 12; ++k) {
      CHECK(rr.x[k - 1](0, 0) == doctest::Approx(c).epsilon(1e-14));
      c *= -v;
    }
  }
  SUBCASE("realized responses satisfy the exact identity") {
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 0.5, 0.0, 0.3, 0.2;
    B << 0, 1;
    const PlantModel P(A, B, Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                       Eigen::MatrixXd::Zero(2, 1));
    const auto pr = make_problem(P, PfdMatrix(2, 2), 0.0, PoleSet{}, 50);
    const double gmin = dbc_gamma_min(P, 4);
    CHECK(gmin == doctest::Approx(std::pow(0.5, 3)).epsilon(1e-9));
    const DbcDesign d = solve_dbc_fixed_gamma(pr, 4, 0.3);
    REQUIRE(d.feasible);
    const int H = 400;
    const auto rr = recover_true_responses(d.G, d.H, d.V, d.taps, H);
    for (Complex z : unit_circle_points(20, 5)) {
      Eigen::MatrixXcd Tx = Eigen::MatrixXcd::Zero(2, 2), Tu = Eigen::MatrixXcd::Zero(1, 2);
      Complex zk = 1.0;
      for (int k = 0; k < H; ++k) {
        zk /= z;
        Tx += zk * rr.x[k].cast<Complex>();
        Tu += zk * rr.u[k].cast<Complex>();
      }
      const Eigen::MatrixXcd E = (z * Eigen::MatrixXcd::Identity(2, 2) - A.cast<Complex>()) * Tx -
                                 B.cast<Complex>() * Tu - Eigen::MatrixXcd::Identity(2, 2);
      CHECK(E.norm() < 1e-6);
    }
    // The raw taps miss the identity by the slack term.
    CHECK(d.slack_norm > 0.0);
  }
  SUBCASE("slack at or above one is rejected") {
    CHECK_THROWS_AS(recover_true_responses({Eigen::MatrixXd::Identity(1, 1)}, {Eigen::MatrixXd::Zero(1, 1)},
                                           Eigen::MatrixXd::Constant(1, 1, 1.0), 1, 5),
                    DomainError);
  }
  CHECK_THROWS_AS(DbcSubproblem(converter_problem(), 1), ValidationError);
}
