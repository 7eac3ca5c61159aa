#include "sls/spa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "sls/errors.hpp"

namespace sls {

namespace {

// Poles of P and eigenvalues of A closer than this are the same pole.
constexpr double kPlantMatchTol = 1e-9;
constexpr double kRealTol = 1e-12;
// Relative rank cut for the least-squares step on the constraint nullspace.
constexpr double kLsRankTol = 1e-8;

bool is_real(Complex z) { return std::abs(z.imag()) <= kRealTol; }

int match_plant(const EigenStructure& eig, Complex p) {
  return eig.find(p, kPlantMatchTol);
}

// Column-major vec(M X) for X of size rows x cols: kron(I_cols, M).
void put_left_product(Eigen::MatrixXd& E, int row0, int col0,
                      const Eigen::MatrixXd& M, int cols) {
  const int er = static_cast<int>(M.rows());
  const int xr = static_cast<int>(M.cols());
  for (int c = 0; c < cols; ++c) {
    E.block(row0 + c * er, col0 + c * xr, er, xr) += M;
  }
}

// Complex linear equation sum_t M_t X_t = R over blocks at a common pole.
struct Equation {
  std::vector<std::pair<const SpaBlock*, Eigen::MatrixXcd>> terms;
};

void append_equation(std::vector<Eigen::MatrixXd>& rows,
                     std::vector<Eigen::VectorXd>& rhs, const Equation& eq,
                     int eq_rows, int cols, bool pair, int num_vars) {
  const int nr = eq_rows * cols;
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(nr, num_vars);
  Eigen::MatrixXd im = Eigen::MatrixXd::Zero(nr, num_vars);
  for (const auto& [b, M] : eq.terms) {
    const int half = b->rows * b->cols;
    const Eigen::MatrixXd Mr = M.real();
    if (pair) {
      const Eigen::MatrixXd Mi = M.imag();
      // (Mr + i Mi)(Xr + i Xi)
      put_left_product(re, 0, b->offset, Mr, cols);
      put_left_product(re, 0, b->offset + half, -Mi, cols);
      put_left_product(im, 0, b->offset, Mi, cols);
      put_left_product(im, 0, b->offset + half, Mr, cols);
    } else {
      put_left_product(re, 0, b->offset, Mr, cols);
    }
  }
  rows.push_back(std::move(re));
  rhs.push_back(Eigen::VectorXd::Zero(nr));
  if (pair) {
    rows.push_back(std::move(im));
    rhs.push_back(Eigen::VectorXd::Zero(nr));
  }
}

struct Nullspace {
  Eigen::VectorXd particular;
  Eigen::MatrixXd basis;  // columns span ker E
  int rank = 0;
};

Nullspace constraint_nullspace(const AffineSystem& sys) {
  // SVD of the tall E^T: E = V S U^T, ker E = trailing columns of U.
  const int N = static_cast<int>(sys.matrix.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.matrix.transpose(),
                                     Eigen::ComputeFullU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
  int r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  Nullspace out;
  out.rank = r;
  const Eigen::MatrixXd& U = svd.matrixU();
  const Eigen::VectorXd c = svd.matrixV().leftCols(r).transpose() * sys.rhs;
  out.particular = U.leftCols(r) * c.cwiseQuotient(sv.head(r));
  out.basis = U.rightCols(N - r);
  return out;
}

// Minimum-norm least squares with singular values below
// kLsRankTol * max(sigma_max, scale) discarded; keeps coefficients bounded
// when the pole sequences are nearly collinear. `scale` is the size of the
// operator before reduction, so directions the objective cannot see (pure
// round-off in M) are dropped instead of amplified.
Eigen::VectorXd truncated_lstsq(const Eigen::MatrixXd& M,
                                const Eigen::VectorXd& b, double scale = 0.0) {
  if (M.rows() == 0 || M.cols() == 0) return Eigen::VectorXd::Zero(M.cols());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cut = kLsRankTol * std::max(sv(0), scale);
  int r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  if (r == 0) return Eigen::VectorXd::Zero(M.cols());
  const Eigen::VectorXd c = svd.matrixU().leftCols(r).transpose() * b;
  return svd.matrixV().leftCols(r) * c.cwiseQuotient(sv.head(r));
}

PfdMatrix residual_tf(const SynthesisProblem& pr, const PfdMatrix& phi_x,
                      const PfdMatrix& phi_u) {
  const auto& P = pr.plant;
  PfdMatrix res = add(left_mul(P.C(), right_mul(phi_x, P.Bhat())),
                      left_mul(P.D(), right_mul(phi_u, P.Bhat())));
  return add(res, scale(pr.desired, -1.0));
}

void check_feasible(const AffineSystem& sys, const Eigen::VectorXd& x,
                    int rank, double& residual) {
  residual = (sys.matrix * x - sys.rhs).norm();
  const double tol = 1e-8 * (1.0 + sys.rhs.norm());
  if (!(residual <= tol)) {
    std::ostringstream os;
    os << "SLS constraints not satisfiable with this pole selection: residual "
       << residual << " > " << tol << " (rank " << rank << " of "
       << sys.matrix.rows() << " rows, " << sys.matrix.cols()
       << " variables)";
    throw NumericalError(os.str());
  }
}

void require_stabilizable(const PlantModel& plant) {
  const auto rep = is_stabilizable(plant);
  if (!rep.stabilizable) {
    std::ostringstream os;
    os << "plant is not stabilizable; PBH rank test fails at";
    for (const auto& q : rep.offending) os << ' ' << q;
    throw PreconditionError(os.str());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

void SynthesisProblem::validate() const {
  if (desired.rows() != plant.m() || desired.cols() != plant.q()) {
    throw ValidationError("desired transfer matrix must be m x q");
  }
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (horizon < 0 || horizon > kMaxHorizon) {
    throw ValidationError("horizon must be in [0, 20000]");
  }
  validate_pole_set(poles);
  if (eig.total_multiplicity() != plant.n()) {
    throw ValidationError("eigenstructure does not match the plant order");
  }
}

int SynthesisProblem::resolved_horizon() const {
  if (horizon > 0) return horizon;
  double r = desired.max_pole_modulus();
  for (const auto& p : poles.poles) r = std::max(r, std::abs(p.value));
  for (const auto& e : eig.entries) {
    if (std::abs(e.value) < 1.0) r = std::max(r, std::abs(e.value));
  }
  return default_horizon(r);
}

SynthesisProblem make_problem(PlantModel plant, PfdMatrix desired,
                              double lambda, PoleSet poles, int horizon) {
  EigenStructure eig = eigen_multiplicities(plant);
  SynthesisProblem pr{std::move(plant), std::move(desired), lambda, horizon,
                      std::move(poles), std::move(eig)};
  pr.validate();
  return pr;
}

SpaLayout make_layout(const SynthesisProblem& pr) {
  const int n = pr.plant.n();
  const int p = pr.plant.p();
  SpaLayout lay;
  int offset = 0;
  auto push = [&](BlockKind kind, Complex pole, int order, int rows,
                  int plant_index) {
    SpaBlock b;
    b.kind = kind;
    b.complex_pair = !is_real(pole);
    b.pole = b.complex_pair ? pole : Complex(pole.real(), 0.0);
    b.order = order;
    b.rows = rows;
    b.cols = n;
    b.offset = offset;
    b.plant_index = plant_index;
    offset += b.size();
    lay.blocks.push_back(b);
  };

  for (const auto& tp : pr.poles.poles) {
    if (tp.value.imag() < -kRealTol) continue;  // conjugate partner
    push(BlockKind::H, tp.value, 1, p, -1);
    if (match_plant(pr.eig, tp.value) < 0) {
      push(BlockKind::G, tp.value, 1, n, -1);
    }
  }
  for (int i = 0; i < static_cast<int>(pr.eig.entries.size()); ++i) {
    const auto& e = pr.eig.entries[i];
    if (e.value.imag() < -kRealTol) continue;
    if (std::abs(e.value) >= 1.0) {
      lay.skipped_unstable.push_back(i);
      continue;
    }
    const bool in_poles = pr.poles.contains(e.value, kPlantMatchTol);
    const int length = e.multiplicity + (in_poles ? 1 : 0);
    lay.chains.push_back({i, e.value, length, in_poles});
    for (int k = 1; k <= length; ++k) push(BlockKind::G, e.value, k, n, i);
  }
  lay.num_variables = offset;
  return lay;
}

AffineSystem build_constraints(const SynthesisProblem& pr,
                               const SpaLayout& lay) {
  const int n = pr.plant.n();
  const int N = lay.num_variables;
  const Eigen::MatrixXcd A = pr.plant.A().cast<Complex>();
  const Eigen::MatrixXcd B = pr.plant.B().cast<Complex>();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);

  std::vector<Eigen::MatrixXd> rows;
  std::vector<Eigen::VectorXd> rhs;

  auto find_h = [&](Complex pole) -> const SpaBlock* {
    for (const auto& b : lay.blocks) {
      if (b.kind == BlockKind::H && std::abs(b.pole - pole) <= kPlantMatchTol) {
        return &b;
      }
    }
    return nullptr;
  };
  auto chain_block = [&](int plant_index, int order) -> const SpaBlock* {
    for (const auto& b : lay.blocks) {
      if (b.plant_index == plant_index && b.order == order) return &b;
    }
    return nullptr;
  };

  // (pI - A) G_p - B H_p = 0 for poles away from the plant spectrum.
  for (const auto& b : lay.blocks) {
    if (b.kind != BlockKind::G || b.plant_index >= 0) continue;
    const SpaBlock* h = find_h(b.pole);
    Equation eq;
    eq.terms.emplace_back(&b, b.pole * I - A);
    eq.terms.emplace_back(h, -B);
    append_equation(rows, rhs, eq, n, n, b.complex_pair, N);
  }

  for (const auto& ch : lay.chains) {
    const Complex q = ch.pole;
    const bool pair = !is_real(q);
    const Complex qs = pair ? q : Complex(q.real(), 0.0);
    const Eigen::MatrixXcd M = qs * I - A;
    const int start = ch.in_poles ? 2 : 1;
    if (ch.in_poles) {
      // G_(q,2) + (qI - A) G_(q,1) - B H_q = 0
      Equation eq;
      if (ch.length >= 2) eq.terms.emplace_back(chain_block(ch.plant_index, 2), I);
      eq.terms.emplace_back(chain_block(ch.plant_index, 1), M);
      eq.terms.emplace_back(find_h(qs), -B);
      append_equation(rows, rhs, eq, n, n, pair, N);
    }
    // G_(q,i+1) + (qI - A) G_(q,i) = 0
    for (int i = start; i < ch.length; ++i) {
      Equation eq;
      eq.terms.emplace_back(chain_block(ch.plant_index, i + 1), I);
      eq.terms.emplace_back(chain_block(ch.plant_index, i), M);
      append_equation(rows, rhs, eq, n, n, pair, N);
    }
    // (qI - A) G_(q, last) = 0
    Equation eq;
    eq.terms.emplace_back(chain_block(ch.plant_index, ch.length), M);
    append_equation(rows, rhs, eq, n, n, pair, N);
  }

  // Residue sum equals I; a conjugate pair contributes twice its real part.
  {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n * n, N);
    for (const auto& b : lay.blocks) {
      if (b.kind != BlockKind::G || b.order != 1) continue;
      const double w = b.complex_pair ? 2.0 : 1.0;
      for (int k = 0; k < n * n; ++k) E(k, b.offset + k) += w;
    }
    rows.push_back(std::move(E));
    const Eigen::MatrixXd Id = Eigen::MatrixXd::Identity(n, n);
    rhs.push_back(Eigen::Map<const Eigen::VectorXd>(Id.data(), n * n));
  }

  Eigen::Index total = 0;
  for (const auto& r : rows) total += r.rows();
  AffineSystem sys;
  sys.matrix.resize(total, N);
  sys.rhs.resize(total);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sys.matrix.middleRows(at, rows[i].rows()) = rows[i];
    sys.rhs.segment(at, rows[i].rows()) = rhs[i];
    at += rows[i].rows();
  }
  return sys;
}

ObjectiveOperator build_objective(const SynthesisProblem& pr,
                                  const SpaLayout& lay,
                                  bool with_impulse_matrix) {
  const auto& P = pr.plant;
  const int m = P.m();
  const int q = P.q();
  const int mq = m * q;
  const int N = lay.num_variables;
  const int T = pr.resolved_horizon();

  // Distinct (pole, order) sequences; a nonreal pole gives two real basis
  // sequences 2 Re(s) and -2 Im(s) acting on the real and imaginary parts.
  std::vector<Eigen::VectorXd> seqs;
  std::vector<Eigen::MatrixXd> maps;  // mq x N each
  std::map<std::pair<int, int>, int> seq_of_block;  // (block, part) -> basis
  std::vector<std::tuple<Complex, int, int>> keys;  // (pole, order, first)

  for (std::size_t bi = 0; bi < lay.blocks.size(); ++bi) {
    const auto& b = lay.blocks[bi];
    int first = -1;
    for (const auto& [pole, order, idx] : keys) {
      if (order == b.order && std::abs(pole - b.pole) <= kRealTol) {
        first = idx;
        break;
      }
    }
    if (first < 0) {
      first = static_cast<int>(seqs.size());
      keys.emplace_back(b.pole, b.order, first);
      const auto s = pole_sequence(b.pole, b.order, T);
      Eigen::VectorXd re(T), im(T);
      for (int k = 0; k < T; ++k) {
        re(k) = s[k].real();
        im(k) = s[k].imag();
      }
      if (b.complex_pair) {
        seqs.push_back(2.0 * re);
        seqs.push_back(-2.0 * im);
        maps.push_back(Eigen::MatrixXd::Zero(mq, N));
        maps.push_back(Eigen::MatrixXd::Zero(mq, N));
      } else {
        seqs.push_back(re);
        maps.push_back(Eigen::MatrixXd::Zero(mq, N));
      }
    }
    // vec(M X Bhat) = kron(Bhat^T, M) vec(X)
    const Eigen::MatrixXd& M = b.kind == BlockKind::G ? P.C() : P.D();
    const Eigen::MatrixXd Bh = P.Bhat();
    const int half = b.rows * b.cols;
    const int parts = b.complex_pair ? 2 : 1;
    for (int part = 0; part < parts; ++part) {
      Eigen::MatrixXd& W = maps[first + part];
      const int col0 = b.offset + part * half;
      for (int c = 0; c < b.cols; ++c) {
        for (int j = 0; j < q; ++j) {
          const double s = Bh(c, j);
          if (s == 0.0) continue;
          W.block(j * m, col0 + c * b.rows, m, b.rows) += s * M;
        }
      }
    }
  }

  const int J = static_cast<int>(seqs.size());
  Eigen::MatrixXd Td(mq, T);
  {
    const auto samples = impulse_response(pr.desired, T);
    for (int k = 0; k < T; ++k) {
      Td.col(k) = Eigen::Map<const Eigen::VectorXd>(samples[k].data(), mq);
    }
  }

  ObjectiveOperator op;
  op.horizon = T;
  op.rows = m;
  op.cols = q;

  // Sigma^T = Qt R: the model residual Omega Sigma = Omega R^T Qt^T, so
  // ||Omega Sigma - Td||^2 = ||Omega R^T - Td Qt||^2 + ||Td||^2 - ||Td Qt||^2.
  Eigen::MatrixXd St(T, J);
  for (int j = 0; j < J; ++j) St.col(j) = seqs[j];
  const int kcols = std::min(T, J);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(St);
  const Eigen::MatrixXd R =
      qr.matrixQR().topRows(kcols).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Qt =
      qr.householderQ() * Eigen::MatrixXd::Identity(T, kcols);
  const Eigen::MatrixXd TdQ = Td * Qt;  // mq x kcols

  op.h2_matrix = Eigen::MatrixXd::Zero(mq * kcols, N);
  for (int c = 0; c < kcols; ++c) {
    for (int j = c; j < J; ++j) {
      if (R(c, j) != 0.0) {
        op.h2_matrix.middleRows(c * mq, mq) += R(c, j) * maps[j];
      }
    }
  }
  op.h2_offset = Eigen::Map<const Eigen::VectorXd>(TdQ.data(), mq * kcols);
  op.h2_constant = std::max(0.0, Td.squaredNorm() - TdQ.squaredNorm());

  if (with_impulse_matrix) {
    op.impulse_matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(T) * mq, N);
    for (int k = 0; k < T; ++k) {
      auto rows_k = op.impulse_matrix.middleRows(k * mq, mq);
      for (int j = 0; j < J; ++j) {
        if (seqs[j](k) != 0.0) rows_k += seqs[j](k) * maps[j];
      }
    }
    op.impulse_offset = Eigen::Map<const Eigen::VectorXd>(Td.data(), Td.size());
  }
  return op;
}

std::pair<PfdMatrix, PfdMatrix> responses_from_variables(
    const SynthesisProblem& pr, const SpaLayout& lay, const Eigen::VectorXd& x) {
  const int n = pr.plant.n();
  PfdMatrix phi_x(n, n);
  PfdMatrix phi_u(pr.plant.p(), n);
  for (const auto& b : lay.blocks) {
    const int half = b.rows * b.cols;
    Eigen::MatrixXcd X(b.rows, b.cols);
    const Eigen::Map<const Eigen::MatrixXd> re(x.data() + b.offset, b.rows, b.cols);
    if (b.complex_pair) {
      const Eigen::Map<const Eigen::MatrixXd> im(x.data() + b.offset + half,
                                                 b.rows, b.cols);
      X.real() = re;
      X.imag() = im;
    } else {
      X = re.cast<Complex>();
    }
    PfdMatrix& target = b.kind == BlockKind::G ? phi_x : phi_u;
    target.add_term(b.pole, b.order, X);
    if (b.complex_pair) {
      target.add_term(std::conj(b.pole), b.order, Eigen::MatrixXcd(X.conjugate()));
    }
  }
  return {std::move(phi_x), std::move(phi_u)};
}

SynthesisResult solve_h2(const SynthesisProblem& pr) {
  const auto t0 = std::chrono::steady_clock::now();
  pr.validate();
  if (pr.lambda != 0.0) throw PreconditionError("solve_h2 requires lambda = 0");
  require_stabilizable(pr.plant);

  const SpaLayout lay = make_layout(pr);
  const AffineSystem sys = build_constraints(pr, lay);
  const ObjectiveOperator obj = build_objective(pr, lay, false);
  const Nullspace ns = constraint_nullspace(sys);

  Eigen::VectorXd x = ns.particular;
  if (ns.basis.cols() > 0) {
    const Eigen::MatrixXd Ar = obj.h2_matrix * ns.basis;
    const Eigen::VectorXd br = obj.h2_offset - obj.h2_matrix * ns.particular;
    x += ns.basis * truncated_lstsq(Ar, br, obj.h2_matrix.norm());
  }

  SynthesisResult res;
  check_feasible(sys, x, ns.rank, res.constraint_residual);
  auto [phi_x, phi_u] = responses_from_variables(pr, lay, x);
  res.phi_x = std::move(phi_x);
  res.phi_u = std::move(phi_u);
  res.horizon = obj.horizon;
  res.h2_term = truncated_h2_norm(residual_tf(pr, res.phi_x, res.phi_u), obj.horizon);
  res.objective = res.h2_term;
  res.variables = std::move(x);
  res.stats.iterations = 1;
  res.stats.status = "solved";
  res.stats.wall_time = seconds_since(t0);
  return res;
}

SynthesisResult solve_mixed(const SynthesisProblem& pr,
                            const ConicSolver* solver,
                            const ConicOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  pr.validate();
  if (!(pr.lambda > 0.0)) throw PreconditionError("solve_mixed requires lambda > 0");
  require_stabilizable(pr.plant);
  const int T = pr.resolved_horizon();
  const long toep = static_cast<long>(T) * std::max(pr.plant.m(), pr.plant.q());
  if (toep > kMaxMixedToeplitzSize) {
    std::ostringstream os;
    os << "mixed objective needs the " << T << "-sample convolution matrix ("
       << toep << " > " << kMaxMixedToeplitzSize
       << " rows); choose a smaller horizon";
    throw ValidationError(os.str());
  }

  const SpaLayout lay = make_layout(pr);
  const AffineSystem sys = build_constraints(pr, lay);
  const ObjectiveOperator obj = build_objective(pr, lay, true);
  const Nullspace ns = constraint_nullspace(sys);
  const int d = static_cast<int>(ns.basis.cols());
  const bool pure_hinf = std::isinf(pr.lambda);

  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  SolverStats stats;
  if (d > 0) {
    ConicProblem cp;
    cp.dim = d;
    const Eigen::MatrixXd F = obj.h2_matrix * ns.basis;
    const Eigen::VectorXd f = obj.h2_offset - obj.h2_matrix * ns.particular;
    // Same minimizer as frob + lambda * hinf, with the larger weight at 1.
    const bool heavy = !pure_hinf && pr.lambda > 1.0;
    if (!pure_hinf) {
      cp.frob_weight = heavy ? 1.0 / pr.lambda : 1.0;
      cp.F.resize(F.rows() + 1, d);
      cp.F << F, Eigen::RowVectorXd::Zero(d);
      cp.f.resize(f.size() + 1);
      cp.f << f, -std::sqrt(obj.h2_constant);
    }
    ToeplitzNormTerm tt;
    tt.S = obj.impulse_matrix * ns.basis;
    tt.s = obj.impulse_offset - obj.impulse_matrix * ns.particular;
    tt.rows = obj.rows;
    tt.cols = obj.cols;
    tt.horizon = T;
    tt.weight = pure_hinf || heavy ? 1.0 : pr.lambda;
    cp.toeplitz = std::move(tt);

    ConicOptions opt = options;
    if (!opt.warm_start) {
      opt.warm_start = truncated_lstsq(F, f, obj.h2_matrix.norm());
    }
    const AdmmSolver fallback;
    const ConicSolver& backend = solver ? *solver : fallback;
    const ConicSolution sol = backend.solve(cp, opt);
    stats.iterations = sol.iterations;
    if (!sol.converged) {
      const Eigen::VectorXd xb = ns.particular + ns.basis * sol.z;
      std::ostringstream os;
      os << "mixed solver did not converge in " << sol.iterations
         << " iterations (objective " << sol.objective << ", primal residual "
         << sol.primal_residual << ", dual residual " << sol.dual_residual
         << ")";
      throw ConvergenceError(os.str(),
                             std::vector<double>(xb.data(), xb.data() + xb.size()));
    }
    y = sol.z;
  }
  const Eigen::VectorXd x = ns.particular + ns.basis * y;

  SynthesisResult res;
  check_feasible(sys, x, ns.rank, res.constraint_residual);
  auto [phi_x, phi_u] = responses_from_variables(pr, lay, x);
  res.phi_x = std::move(phi_x);
  res.phi_u = std::move(phi_u);
  res.horizon = T;
  const PfdMatrix r = residual_tf(pr, res.phi_x, res.phi_u);
  res.h2_term = truncated_h2_norm(r, T);
  res.hinf_term = truncated_hinf_norm(r, T);
  res.hinf_evaluated = true;
  res.objective =
      pure_hinf ? res.hinf_term : res.h2_term + pr.lambda * res.hinf_term;
  res.variables = x;
  res.stats = stats;
  res.stats.status = "converged";
  res.stats.wall_time = seconds_since(t0);
  return res;
}

SynthesisResult solve(const SynthesisProblem& pr) {
  return pr.lambda == 0.0 ? solve_h2(pr) : solve_mixed(pr);
}

std::pair<const PfdMatrix&, const PfdMatrix&> recover_controller_responses(
    const SynthesisResult& result) {
  return {result.phi_x, result.phi_u};
}

double sls_identity_error(const PlantModel& plant, const PfdMatrix& phi_x,
                          const PfdMatrix& phi_u,
                          const std::vector<Complex>& points) {
  const int n = plant.n();
  const Eigen::MatrixXcd A = plant.A().cast<Complex>();
  const Eigen::MatrixXcd B = plant.B().cast<Complex>();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  double worst = 0.0;
  for (const Complex z : points) {
    const Eigen::MatrixXcd E =
        (z * I - A) * evaluate(phi_x, z) - B * evaluate(phi_u, z) - I;
    worst = std::max(worst, E.norm());
  }
  return worst;
}

}  // namespace sls
