#include "sls/dbc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sls/errors.hpp"

namespace sls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

void require_taps(int T_fir) {
  if (T_fir < 2) {
    throw ValidationError(
        "FIR length must be >= 2 (one free tap plus the terminal tap)");
  }
}

}  // namespace

double dbc_gamma_min(const PlantModel& plant, int T_fir) {
  require_taps(T_fir);
  const int L = T_fir - 1;
  const int n = plant.n();
  const int p = plant.p();
  // Columns of sum_j A^{L-j} B H_j sweep the L-step reachable subspace.
  const int depth = std::min(L, n);
  Eigen::MatrixXd K(n, depth * p);
  Eigen::MatrixXd blk = plant.B();
  for (int i = 0; i < depth; ++i) {
    K.middleCols(i * p, p) = blk;
    blk = plant.A() * blk;
  }
  Eigen::MatrixXd AL = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < L; ++i) AL = plant.A() * AL;
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n);
  if (K.size() > 0 && K.norm() > 0.0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int r = 0;
    while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
    const Eigen::MatrixXd U = svd.matrixU().leftCols(r);
    proj -= U * U.transpose();
  }
  return spectral_norm(proj * AL);
}

struct DbcSubproblem::Impl {
  explicit Impl(const SynthesisProblem& pr) : problem(pr) {}
  SynthesisProblem problem;
  int n = 0, p = 0, m = 0, q = 0;
  int L = 0;
  int d = 0;
  double lambda = 0.0;
  double gamma_min = 0.0;

  Eigen::MatrixXd F;  // residual samples k = 1..L:  r = F h - f
  Eigen::VectorXd f;
  double tail_sq = 0.0;  // sum_{k > L} ||T_desired(k)||^2
  Eigen::MatrixXd Lmap;  // vec(sum_j A^{L-j} B H_j) = Lmap h
  Eigen::VectorXd l0;    // vec(A^L); V = -mat(Lmap h + l0)

  // Reduced coordinates for lambda = 0: h(c) = h0 + Y c.
  Eigen::VectorXd h0;
  Eigen::MatrixXd Y;
  Eigen::MatrixXd ballL;  // Lmap h(c) + l0 = ballL c - ballR
  Eigen::VectorXd ballR;
  Eigen::MatrixXd Qc;  // F h(c) - f = Qc c - gc
  Eigen::VectorXd gc;

  void build_fir_maps();
  void build_reduction();
  DbcDesign finish(const Eigen::VectorXd& h, double gamma, int iters) const;
};

void DbcSubproblem::Impl::build_fir_maps() {
  const auto& P = problem.plant;
  const Eigen::MatrixXd& A = P.A();
  const Eigen::MatrixXd& B = P.B();
  const Eigen::MatrixXd& Bh = P.Bhat();
  const int mq = m * q;
  const int pn = p * n;

  std::vector<Eigen::MatrixXd> Apow(L + 1);
  Apow[0] = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= L; ++k) Apow[k] = A * Apow[k - 1];

  // kron(Bhat^T, M) for M = D and M = C A^k B.
  auto kron_bt = [&](const Eigen::MatrixXd& M) {
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(mq, pn);
    for (int j = 0; j < q; ++j) {
      for (int c = 0; c < n; ++c) {
        const double s = Bh(c, j);
        if (s != 0.0) K.block(j * m, c * p, m, p) = s * M;
      }
    }
    return K;
  };
  std::vector<Eigen::MatrixXd> markov(L);
  markov[0] = kron_bt(P.D());
  for (int lag = 1; lag < L; ++lag) markov[lag] = kron_bt(P.C() * Apow[lag - 1] * B);

  F = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(L) * mq, d);
  for (int k = 1; k <= L; ++k) {
    for (int j = 1; j <= k; ++j) {
      F.block((k - 1) * mq, (j - 1) * pn, mq, pn) = markov[k - j];
    }
  }

  const int Ttail = std::max(problem.resolved_horizon(), L);
  const auto Td = impulse_response(problem.desired, Ttail);
  f.resize(static_cast<Eigen::Index>(L) * mq);
  for (int k = 1; k <= L; ++k) {
    const Eigen::MatrixXd r = Td[k - 1] - P.C() * Apow[k - 1] * Bh;
    f.segment((k - 1) * mq, mq) = Eigen::Map<const Eigen::VectorXd>(r.data(), mq);
  }
  tail_sq = 0.0;
  for (int k = L + 1; k <= Ttail; ++k) tail_sq += Td[k - 1].squaredNorm();

  Lmap = Eigen::MatrixXd::Zero(n * n, d);
  for (int j = 1; j <= L; ++j) {
    const Eigen::MatrixXd AB = Apow[L - j] * B;  // n x p
    for (int c = 0; c < n; ++c) {
      Lmap.block(c * n, (j - 1) * pn + c * p, n, p) = AB;
    }
  }
  l0 = Eigen::Map<const Eigen::VectorXd>(Apow[L].data(), n * n);
}

void DbcSubproblem::Impl::build_reduction() {
  // Minimizing ||F h - f||^2 subject to Lmap h = w is unchanged by adding
  // alpha^2 ||Lmap h - w||^2, which makes the Hessian definite on every
  // direction that matters; directions invisible to both maps stay at zero.
  const double fl = Lmap.squaredNorm();
  const double alpha = fl > 0.0 ? std::sqrt(std::max(F.squaredNorm(), 1.0) / fl) : 1.0;
  const Eigen::MatrixXd La = alpha * Lmap;
  Eigen::MatrixXd K = F.transpose() * F;
  K.noalias() += La.transpose() * La;
  const double ridge = 1e-13 * (1.0 + K.trace() / std::max(d, 1));
  K.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("FIR normal matrix factorization failed");
  }
  h0 = llt.solve(F.transpose() * f);
  const Eigen::MatrixXd Z = llt.solve(La.transpose());  // d x n^2
  Eigen::MatrixXd M = La * Z;
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
  std::vector<int> keep;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) > 1e-12 * top && ev(i) > 0.0) keep.push_back(i);
  }
  const int r = static_cast<int>(keep.size());
  Eigen::MatrixXd U(n * n, r);
  Eigen::VectorXd lam(r);
  for (int i = 0; i < r; ++i) {
    U.col(i) = es.eigenvectors().col(keep[i]);
    lam(i) = ev(keep[i]);
  }
  Y = Z * U;
  const Eigen::VectorXd a = La * h0;
  ballL = U * lam.asDiagonal() / alpha;
  ballR = -(a / alpha + l0);
  Qc = F * Y;
  gc = f - F * h0;
}

DbcDesign DbcSubproblem::Impl::finish(const Eigen::VectorXd& h, double gamma,
                                      int iters) const {
  DbcDesign out;
  out.feasible = true;
  out.taps = L;
  out.gamma = gamma;
  out.iterations = iters;
  const auto& P = problem.plant;
  out.G.resize(L);
  out.H.resize(L);
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < L; ++k) {
    out.G[k] = G;
    out.H[k] = Eigen::Map<const Eigen::MatrixXd>(h.data() + k * p * n, p, n);
    G = P.A() * G + P.B() * out.H[k];
  }
  out.V = -G;
  out.slack_norm = spectral_norm(out.V);
  double val = (F * h - f).squaredNorm() + tail_sq;
  val = std::sqrt(val);
  if (lambda > 0.0) {
    const Eigen::VectorXd samples = F * h - f;
    const double hinf =
        spectral_norm(toeplitz_from_samples(samples, m, q, L));
    val = std::isinf(lambda) ? hinf : val + lambda * hinf;
  }
  out.inner_objective = val;
  return out;
}

DbcSubproblem::DbcSubproblem(const SynthesisProblem& problem, int T_fir)
    : impl_(std::make_unique<Impl>(problem)) {
  require_taps(T_fir);
  problem.validate();
  auto& s = *impl_;
  s.n = problem.plant.n();
  s.p = problem.plant.p();
  s.m = problem.plant.m();
  s.q = problem.plant.q();
  s.L = T_fir - 1;
  s.d = s.L * s.p * s.n;
  s.lambda = problem.lambda;
  if (s.lambda > 0.0) {
    const long toep = static_cast<long>(s.L) * std::max(s.m, s.q);
    if (toep > kMaxMixedToeplitzSize) {
      std::ostringstream os;
      os << "mixed DBC objective needs a " << toep
         << "-row convolution matrix (limit " << kMaxMixedToeplitzSize << ")";
      throw ValidationError(os.str());
    }
  }
  s.gamma_min = dbc_gamma_min(problem.plant, T_fir);
  s.build_fir_maps();
  if (s.lambda == 0.0) s.build_reduction();
}

DbcSubproblem::~DbcSubproblem() = default;

int DbcSubproblem::taps() const { return impl_->L; }
double DbcSubproblem::gamma_min() const { return impl_->gamma_min; }

DbcDesign DbcSubproblem::solve(double gamma, const ConicOptions& options) const {
  const auto& s = *impl_;
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("slack level gamma must lie in [0, 1)");
  }
  // gamma_min at round-off level means the exact deadbeat design exists.
  if (s.gamma_min > 1e-12 && gamma < s.gamma_min * (1.0 + 1e-9)) {
    DbcDesign out;
    out.taps = s.L;
    out.gamma = gamma;
    out.inner_objective = kInf;
    return out;
  }
  const AdmmSolver admm;
  ConicProblem cp;
  ConicOptions opt = options;
  Eigen::VectorXd h;
  int iters = 0;
  if (s.lambda == 0.0) {
    const int r = static_cast<int>(s.ballL.cols());
    cp.dim = r;
    cp.Q = std::sqrt(2.0) * s.Qc;
    cp.g = std::sqrt(2.0) * s.gc;
    cp.ball = SpectralBall{s.ballL, s.ballR, s.n, s.n, gamma};
    const ConicSolution sol = admm.solve(cp, opt);
    iters = sol.iterations;
    h = s.h0 + s.Y * sol.z;
  } else {
    cp.dim = s.d;
    if (!std::isinf(s.lambda)) {
      cp.frob_weight = 1.0;
      cp.F.resize(s.F.rows() + 1, s.d);
      cp.F << s.F, Eigen::RowVectorXd::Zero(s.d);
      cp.f.resize(s.f.size() + 1);
      cp.f << s.f, -std::sqrt(s.tail_sq);
    }
    cp.toeplitz = ToeplitzNormTerm{s.F, s.f, s.m, s.q, s.L,
                                   std::isinf(s.lambda) ? 1.0 : s.lambda};
    cp.ball = SpectralBall{s.Lmap, -s.l0, s.n, s.n, gamma};
    const ConicSolution sol = admm.solve(cp, opt);
    iters = sol.iterations;
    h = sol.z;
  }
  DbcDesign out = s.finish(h, gamma, iters);
  if (out.slack_norm > gamma + 1e-6 * (1.0 + gamma)) {
    std::ostringstream os;
    os << "FIR inner solve at gamma = " << gamma
       << " ended outside the slack ball (||V|| = " << out.slack_norm << ")";
    throw ConvergenceError(os.str(), std::vector<double>(h.data(), h.data() + h.size()));
  }
  return out;
}

DbcDesign solve_dbc_fixed_gamma(const SynthesisProblem& problem, int T_fir,
                                double gamma) {
  const DbcSubproblem sub(problem, T_fir);
  return sub.solve(gamma);
}

DbcResult golden_section_dbc(const SynthesisProblem& problem, int T_fir,
                             const GoldenOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!(opt.tol > 0.0)) throw ValidationError("golden-section tolerance must be > 0");
  const DbcSubproblem sub(problem, T_fir);
  DbcResult res;
  res.gamma_min = sub.gamma_min();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (!(res.gamma_min < opt.upper)) {
    res.feasible = false;
    res.objective = kInf;
    res.wall_time = elapsed();
    return res;
  }

  DbcDesign best;
  double best_val = kInf;
  auto probe = [&](double g) {
    DbcDesign dsn = sub.solve(g);
    const double v = dsn.feasible ? dsn.inner_objective / (1.0 - g) : kInf;
    res.probes.push_back({g, v});
    if (v < best_val) {
      best_val = v;
      best = std::move(dsn);
    }
    return v;
  };

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = opt.upper;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = probe(c), fd = probe(d);
  int iters = 0;
  while (b - a >= opt.tol) {
    if (std::isfinite(fc) && std::isfinite(fd) &&
        std::abs(fc - fd) <= opt.ftol * std::min(fc, fd)) {
      break;
    }
    ++iters;
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = probe(d);
    }
  }
  res.iterations = iters;
  if (!std::isfinite(best_val)) {
    // The bracket never reached the feasible interval; try its edge.
    const double g = std::min(opt.upper, std::max(res.gamma_min * (1.0 + 1e-6), 0.0));
    probe(g);
  }
  res.feasible = std::isfinite(best_val);
  if (res.feasible) {
    res.design = best;
    res.gamma_star = best.gamma;
    res.objective = best_val;
  } else {
    res.objective = kInf;
  }

  if (opt.check_unimodal && res.feasible && opt.grid_points >= 3) {
    const int N = opt.grid_points;
    const double lo = std::max(res.gamma_min * (1.0 + 1e-6), 1e-9);
    std::vector<std::future<double>> jobs;
    for (int i = 0; i < N; ++i) {
      const double g = lo + (opt.upper - lo) * i / (N - 1);
      jobs.push_back(std::async(std::launch::deferred, [&sub, g] {
        const DbcDesign dsn = sub.solve(g);
        return dsn.feasible ? dsn.inner_objective / (1.0 - g) : kInf;
      }));
    }
    std::vector<double> vals;
    for (auto& j : jobs) vals.push_back(j.get());
    const auto it = std::min_element(vals.begin(), vals.end());
    const std::size_t k = static_cast<std::size_t>(it - vals.begin());
    bool ok = true;
    for (std::size_t i = 1; i < vals.size(); ++i) {
      const double slack = 1e-5 * std::abs(vals[i]);
      if (i <= k && vals[i] > vals[i - 1] + slack) ok = false;
      if (i > k && vals[i] < vals[i - 1] - slack) ok = false;
    }
    res.unimodal = ok;
  }
  res.wall_time = elapsed();
  return res;
}

RealizedResponses recover_true_responses(
    const std::vector<Eigen::MatrixXd>& phi_x_taps,
    const std::vector<Eigen::MatrixXd>& phi_u_taps, const Eigen::MatrixXd& V,
    int delay, int horizon) {
  if (delay < 1 || horizon < 1) {
    throw ValidationError("delay and horizon must be positive");
  }
  if (phi_x_taps.empty() || phi_u_taps.size() != phi_x_taps.size()) {
    throw ValidationError("tap sequences must be nonempty and equally long");
  }
  const double vn = spectral_norm(V);
  if (!(vn < 1.0)) {
    std::ostringstream os;
    os << "slack has spectral norm " << vn << " >= 1; recovery undefined";
    throw DomainError(os.str());
  }
  const int n = static_cast<int>(V.rows());
  const int taps = static_cast<int>(phi_x_taps.size());
  // Powers (-V)^j until they are negligible.
  std::vector<Eigen::MatrixXd> pw{Eigen::MatrixXd::Identity(n, n)};
  const int jmax = (horizon - 1) / delay;
  while (static_cast<int>(pw.size()) <= jmax) {
    const Eigen::MatrixXd next = -(pw.back() * V);
    if (next.norm() < 1e-12) break;
    pw.push_back(next);
  }
  RealizedResponses out;
  out.x.assign(horizon, Eigen::MatrixXd::Zero(n, n));
  out.u.assign(horizon, Eigen::MatrixXd::Zero(phi_u_taps[0].rows(), n));
  for (int k = 1; k <= horizon; ++k) {
    for (int j = 0; j < static_cast<int>(pw.size()); ++j) {
      const int i = k - j * delay;
      if (i < 1) break;
      if (i > taps) continue;
      out.x[k - 1] += phi_x_taps[i - 1] * pw[j];
      out.u[k - 1] += phi_u_taps[i - 1] * pw[j];
    }
  }
  return out;
}

}  // namespace sls
