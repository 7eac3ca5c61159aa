#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "sls/conic.hpp"
#include "sls/errors.hpp"

namespace sls {

namespace {

Eigen::MatrixXd reshape(const Eigen::VectorXd& v, int rows, int cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

// Singular values with U, V; BDC for anything but tiny matrices.
template <class Fn>
Eigen::MatrixXd map_singular_values(const Eigen::MatrixXd& X, Fn&& fn) {
  if (X.size() == 0) return X;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = fn(svd.singularValues());
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double spectral_norm(const Eigen::MatrixXd& X) {
  if (X.size() == 0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X);
  return svd.singularValues()(0);
}

}  // namespace

Eigen::MatrixXd toeplitz_from_samples(const Eigen::VectorXd& samples, int rows,
                                      int cols, int horizon) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(horizon * rows, horizon * cols);
  const int block = rows * cols;
  for (int lag = 0; lag < horizon; ++lag) {
    const Eigen::MatrixXd blk = reshape(samples.segment(lag * block, block), rows, cols);
    for (int j = 0; j + lag < horizon; ++j) {
      M.block((j + lag) * rows, j * cols, rows, cols) = blk;
    }
  }
  return M;
}

Eigen::VectorXd toeplitz_adjoint(const Eigen::MatrixXd& X, int rows, int cols,
                                 int horizon) {
  const int block = rows * cols;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(horizon * block);
  for (int lag = 0; lag < horizon; ++lag) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
    for (int j = 0; j + lag < horizon; ++j) {
      acc += X.block((j + lag) * rows, j * cols, rows, cols);
    }
    out.segment(lag * block, block) = flatten(acc);
  }
  return out;
}

Eigen::MatrixXd prox_spectral_norm(const Eigen::MatrixXd& X, double t) {
  if (t <= 0.0) return X;
  return map_singular_values(X, [t](const Eigen::VectorXd& s) {
    // Moreau: clip at theta where the l1 projection of s onto radius t has
    // threshold theta.
    if (s.sum() <= t) return Eigen::VectorXd(Eigen::VectorXd::Zero(s.size()));
    std::vector<double> sorted(s.data(), s.data() + s.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      cumulative += sorted[i];
      const double candidate = (cumulative - t) / static_cast<double>(i + 1);
      if (i + 1 == sorted.size() || sorted[i + 1] <= candidate) {
        theta = candidate;
        break;
      }
    }
    return Eigen::VectorXd(s.cwiseMin(std::max(theta, 0.0)));
  });
}

Eigen::MatrixXd project_spectral_ball(const Eigen::MatrixXd& X, double radius) {
  if (spectral_norm(X) <= radius) return X;
  return map_singular_values(X, [radius](const Eigen::VectorXd& s) {
    return Eigen::VectorXd(s.cwiseMin(radius));
  });
}

double conic_objective(const ConicProblem& pr, const Eigen::VectorXd& z) {
  double obj = 0.0;
  if (pr.Q.rows() > 0) obj += 0.5 * (pr.Q * z - pr.g).squaredNorm();
  if (pr.frob_weight > 0.0 && pr.F.rows() > 0) {
    obj += pr.frob_weight * (pr.F * z - pr.f).norm();
  }
  if (pr.toeplitz && pr.toeplitz->weight > 0.0) {
    const auto& t = *pr.toeplitz;
    obj += t.weight * spectral_norm(toeplitz_from_samples(
                          t.S * z - t.s, t.rows, t.cols, t.horizon));
  }
  return obj;
}

ConicSolution AdmmSolver::solve(const ConicProblem& pr,
                                const ConicOptions& opt) const {
  const int d = pr.dim;
  const bool has_q = pr.Q.rows() > 0;
  const bool has_f = pr.frob_weight > 0.0 && pr.F.rows() > 0;
  const bool has_t = pr.toeplitz.has_value() && pr.toeplitz->weight > 0.0;
  const bool has_b = pr.ball.has_value();

  ConicSolution sol;
  sol.z = opt.warm_start ? *opt.warm_start : Eigen::VectorXd::Zero(d);

  // Fixed Gram pieces of the z-update.
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(d, d);  // rho-scaled part
  Eigen::MatrixXd Kq = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd qg = Eigen::VectorXd::Zero(d);
  if (has_q) {
    Kq.noalias() = pr.Q.transpose() * pr.Q;
    qg.noalias() = pr.Q.transpose() * pr.g;
  }
  if (has_f) K0.noalias() += pr.F.transpose() * pr.F;
  Eigen::VectorXd omega;
  if (has_t) {
    const auto& t = *pr.toeplitz;
    const int block = t.rows * t.cols;
    omega.resize(t.horizon * block);
    for (int lag = 0; lag < t.horizon; ++lag) {
      omega.segment(lag * block, block).setConstant(t.horizon - lag);
    }
    K0.noalias() += t.S.transpose() * omega.asDiagonal() * t.S;
  }
  if (has_b) K0.noalias() += pr.ball->L.transpose() * pr.ball->L;

  if (!has_f && !has_t && !has_b) {
    // Plain least squares.
    Eigen::MatrixXd K = Kq;
    const double ridge = 1e-12 * (1.0 + K.diagonal().cwiseAbs().maxCoeff());
    K.diagonal().array() += ridge;
    sol.z = K.ldlt().solve(qg);
    sol.objective = conic_objective(pr, sol.z);
    sol.converged = true;
    return sol;
  }

  const double scale =
      1.0 + std::max(Kq.diagonal().cwiseAbs().maxCoeff(),
                     K0.diagonal().cwiseAbs().maxCoeff());
  const double sigma = 1e-10 * scale;

  double rho = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt;
  auto factor = [&]() {
    Eigen::MatrixXd K = Kq + rho * K0;
    K.diagonal().array() += sigma;
    llt.compute(K);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("ADMM z-update matrix is not positive definite");
    }
  };
  factor();

  // Split variables and scaled duals.
  Eigen::VectorXd u, yu, Ve_s, W_s, yw;
  Eigen::MatrixXd V, yV, W, yW;
  auto frob_res = [&](const Eigen::VectorXd& z) {
    return Eigen::VectorXd(pr.F * z - pr.f);
  };
  auto toep_res = [&](const Eigen::VectorXd& z) {
    const auto& t = *pr.toeplitz;
    return toeplitz_from_samples(t.S * z - t.s, t.rows, t.cols, t.horizon);
  };
  auto ball_res = [&](const Eigen::VectorXd& z) {
    const auto& b = *pr.ball;
    return reshape(b.L * z - b.l, b.rows, b.cols);
  };
  if (has_f) {
    u = frob_res(sol.z);
    yu = Eigen::VectorXd::Zero(u.size());
  }
  if (has_t) {
    V = toep_res(sol.z);
    yV = Eigen::MatrixXd::Zero(V.rows(), V.cols());
  }
  if (has_b) {
    W = project_spectral_ball(ball_res(sol.z), pr.ball->radius);
    yW = Eigen::MatrixXd::Zero(W.rows(), W.cols());
  }

  const double norm_F = has_f ? pr.F.norm() : 0.0;
  const double norm_S = has_t ? pr.toeplitz->S.norm() : 0.0;
  const double norm_L = has_b ? pr.ball->L.norm() : 0.0;
  double obj_prev = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::VectorXd rhs = qg + sigma * sol.z;
    if (has_f) rhs += rho * (pr.F.transpose() * (pr.f + u - yu));
    if (has_t) {
      const auto& t = *pr.toeplitz;
      rhs += rho * (t.S.transpose() *
                    (omega.cwiseProduct(t.s) +
                     toeplitz_adjoint(V - yV, t.rows, t.cols, t.horizon)));
    }
    if (has_b) rhs += rho * (pr.ball->L.transpose() * (pr.ball->l + flatten(W - yW)));
    sol.z = llt.solve(rhs);

    double r2 = 0.0, ax2 = 0.0, bz2 = 0.0;
    Eigen::VectorXd dual = Eigen::VectorXd::Zero(d);
    // Dual scale: largest ||A_i|| ||y_i||. The terms A_i^T y_i cancel at the
    // optimum, and individually too when one piece is stationary on its own.
    double ydual = 0.0;
    if (has_f) {
      const Eigen::VectorXd a = frob_res(sol.z);
      const Eigen::VectorXd v = a + yu;
      const double nv = v.norm();
      const double thr = pr.frob_weight / rho;
      const Eigen::VectorXd u_new =
          nv > thr ? Eigen::VectorXd((1.0 - thr / nv) * v)
                   : Eigen::VectorXd(Eigen::VectorXd::Zero(v.size()));
      dual += pr.F.transpose() * (u_new - u);
      u = u_new;
      yu += a - u;
      r2 += (a - u).squaredNorm();
      ax2 += a.squaredNorm();
      bz2 += u.squaredNorm();
      ydual = std::max(ydual, norm_F * yu.norm());
    }
    if (has_t) {
      const auto& t = *pr.toeplitz;
      const Eigen::MatrixXd a = toep_res(sol.z);
      const Eigen::MatrixXd V_new = prox_spectral_norm(a + yV, t.weight / rho);
      dual += t.S.transpose() * toeplitz_adjoint(V_new - V, t.rows, t.cols, t.horizon);
      V = V_new;
      yV += a - V;
      r2 += (a - V).squaredNorm();
      ax2 += a.squaredNorm();
      bz2 += V.squaredNorm();
      ydual = std::max(ydual, norm_S * yV.norm());
    }
    if (has_b) {
      const auto& b = *pr.ball;
      const Eigen::MatrixXd a = ball_res(sol.z);
      const Eigen::MatrixXd W_new = project_spectral_ball(a + yW, b.radius);
      dual += b.L.transpose() * flatten(W_new - W);
      W = W_new;
      yW += a - W;
      r2 += (a - W).squaredNorm();
      ax2 += a.squaredNorm();
      bz2 += W.squaredNorm();
      ydual = std::max(ydual, norm_L * yW.norm());
    }
    sol.primal_residual = std::sqrt(r2);
    sol.dual_residual = rho * dual.norm();

    const double eps_pri =
        opt.abs_tol * std::sqrt(static_cast<double>(d) + 1.0) +
        opt.rel_tol * std::sqrt(std::max(ax2, bz2));
    const double eps_dual =
        opt.abs_tol * std::sqrt(static_cast<double>(d) + 1.0) +
        opt.rel_tol * rho * ydual;
    if (sol.primal_residual <= eps_pri && sol.dual_residual <= eps_dual) {
      const double obj = conic_objective(pr, sol.z);
      if (std::abs(obj - obj_prev) <= opt.rel_tol * std::max(std::abs(obj), 1e-300) ||
          sol.primal_residual <= 1e-3 * eps_pri) {
        sol.objective = obj;
        sol.converged = true;
        ++it;
        break;
      }
      obj_prev = obj;
    }

    if ((it + 1) % 25 == 0) {
      double factor_change = 1.0;
      if (sol.primal_residual > 10.0 * sol.dual_residual) {
        factor_change = 2.0;
      } else if (sol.dual_residual > 10.0 * sol.primal_residual) {
        factor_change = 0.5;
      }
      if (factor_change != 1.0) {
        rho *= factor_change;
        if (has_f) yu /= factor_change;
        if (has_t) yV /= factor_change;
        if (has_b) yW /= factor_change;
        factor();
      }
    }
  }
  sol.iterations = it;
  if (!sol.converged) sol.objective = conic_objective(pr, sol.z);
  return sol;
}

}  // namespace sls
