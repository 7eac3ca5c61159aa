#include "sls/rational.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/SVD>

#include "sls/errors.hpp"

namespace sls {

PfdMatrix::PfdMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) {
    throw ValidationError("PfdMatrix dimensions must be positive");
  }
}

void PfdMatrix::add_term(Complex pole, int order,
                         const Eigen::MatrixXcd& coeff) {
  if (order < 1) throw ValidationError("term order must be >= 1");
  if (!(std::abs(pole) < 1.0)) {
    std::ostringstream os;
    os << "pole " << pole << " is not strictly inside the unit disk";
    throw ValidationError(os.str());
  }
  if (coeff.rows() != rows_ || coeff.cols() != cols_) {
    throw ValidationError("term coefficient has wrong dimensions");
  }
  if (!coeff.allFinite()) throw ValidationError("term coefficient not finite");
  for (auto& t : terms_) {
    if (t.order == order && std::abs(t.pole - pole) <= kPoleSnapTol) {
      t.coeff += coeff;
      return;
    }
  }
  // Snap onto an existing pole so that chains share the exact value.
  for (const auto& t : terms_) {
    if (std::abs(t.pole - pole) <= kPoleSnapTol) {
      pole = t.pole;
      break;
    }
  }
  terms_.push_back({pole, order, coeff});
}

double PfdMatrix::max_pole_modulus() const {
  double r = 0.0;
  for (const auto& t : terms_) r = std::max(r, std::abs(t.pole));
  return r;
}

double PfdMatrix::conjugate_asymmetry() const {
  double worst = 0.0;
  for (const auto& t : terms_) {
    const double scale = 1.0 + t.coeff.norm();
    if (std::abs(t.pole.imag()) <= kPoleSnapTol) {
      worst = std::max(worst, t.coeff.imag().norm() / scale);
      continue;
    }
    const PfdTerm* partner = nullptr;
    for (const auto& u : terms_) {
      if (u.order == t.order &&
          std::abs(u.pole - std::conj(t.pole)) <= kPoleSnapTol) {
        partner = &u;
        break;
      }
    }
    if (partner == nullptr) {
      worst = std::max(worst, t.coeff.norm() / scale);
    } else {
      worst = std::max(
          worst, (partner->coeff - t.coeff.conjugate()).norm() / scale);
    }
  }
  return worst;
}

double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return r;
}

std::vector<Complex> pole_sequence(Complex pole, int order, int horizon) {
  std::vector<Complex> s(static_cast<std::size_t>(std::max(horizon, 0)),
                         Complex(0.0, 0.0));
  if (order > horizon) return s;
  Complex v(1.0, 0.0);
  for (int k = order; k <= horizon; ++k) {
    s[k - 1] = v;
    v *= pole * (static_cast<double>(k) / static_cast<double>(k - order + 1));
  }
  return s;
}

std::vector<Eigen::MatrixXd> impulse_response(const PfdMatrix& tf,
                                              int horizon) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  std::vector<Eigen::MatrixXcd> acc(
      horizon, Eigen::MatrixXcd::Zero(tf.rows(), tf.cols()));
  for (const auto& t : tf.terms()) {
    const auto s = pole_sequence(t.pole, t.order, horizon);
    for (int k = t.order; k <= horizon; ++k) {
      if (s[k - 1] == Complex(0.0, 0.0)) continue;
      acc[k - 1] += s[k - 1] * t.coeff;
    }
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(horizon);
  for (int k = 0; k < horizon; ++k) {
    const Eigen::MatrixXd re = acc[k].real();
    const Eigen::MatrixXd im = acc[k].imag();
    const double bound =
        1e-10 * (1.0 + re.cwiseAbs().maxCoeff());
    if (im.cwiseAbs().maxCoeff() > bound) {
      std::ostringstream os;
      os << "impulse sample " << k + 1 << " has imaginary residue "
         << im.cwiseAbs().maxCoeff()
         << "; transfer matrix is not conjugate-symmetric";
      throw DataError(os.str());
    }
    out.push_back(re);
  }
  return out;
}

Eigen::MatrixXcd evaluate(const PfdMatrix& tf, Complex z) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(tf.rows(), tf.cols());
  for (const auto& t : tf.terms()) {
    const Complex d = z - t.pole;
    if (std::abs(d) <= 1e-12) {
      std::ostringstream os;
      os << "evaluation point " << z << " coincides with pole " << t.pole;
      throw DomainError(os.str());
    }
    out += t.coeff / std::pow(d, t.order);
  }
  return out;
}

double truncated_h2_norm(const PfdMatrix& tf, int T) {
  if (T < 1) throw ValidationError("T must be >= 1");
  double sum = 0.0;
  for (const auto& s : impulse_response(tf, T)) sum += s.squaredNorm();
  return std::sqrt(sum);
}

Eigen::MatrixXd block_toeplitz(const std::vector<Eigen::MatrixXd>& samples) {
  const int T = static_cast<int>(samples.size());
  if (T == 0) return Eigen::MatrixXd();
  const auto r = samples[0].rows();
  const auto c = samples[0].cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(T * r, T * c);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j <= i; ++j) {
      M.block(i * r, j * c, r, c) = samples[i - j];
    }
  }
  return M;
}

namespace {

// y = Toep * x where x is stacked (T blocks of c), y stacked (T blocks of r).
Eigen::VectorXd toeplitz_apply(const std::vector<Eigen::MatrixXd>& s,
                               const Eigen::VectorXd& x) {
  const int T = static_cast<int>(s.size());
  const auto r = s[0].rows();
  const auto c = s[0].cols();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(T * r);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j <= i; ++j) {
      y.segment(i * r, r) += s[i - j] * x.segment(j * c, c);
    }
  }
  return y;
}

Eigen::VectorXd toeplitz_apply_transpose(const std::vector<Eigen::MatrixXd>& s,
                                         const Eigen::VectorXd& y) {
  const int T = static_cast<int>(s.size());
  const auto r = s[0].rows();
  const auto c = s[0].cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(T * c);
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j <= i; ++j) {
      x.segment(j * c, c) += s[i - j].transpose() * y.segment(i * r, r);
    }
  }
  return x;
}

constexpr double kDenseToeplitzLimit = 4.0e6;  // matrix entries

}  // namespace

double toeplitz_spectral_norm(const std::vector<Eigen::MatrixXd>& samples) {
  if (samples.empty()) return 0.0;
  const double T = static_cast<double>(samples.size());
  const double entries =
      T * samples[0].rows() * T * samples[0].cols();
  bool all_zero = true;
  for (const auto& s : samples) all_zero = all_zero && s.isZero(0.0);
  if (all_zero) return 0.0;
  if (entries <= kDenseToeplitzLimit) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block_toeplitz(samples));
    return svd.singularValues()(0);
  }
  // Power iteration on Toep^T Toep; matrix-free.
  const auto c = samples[0].cols();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(T) * c);
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < 20000; ++it) {
    Eigen::VectorXd w =
        toeplitz_apply_transpose(samples, toeplitz_apply(samples, v));
    const double lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
    const double next = std::sqrt(lam);
    if (std::abs(next - sigma) <= 1e-13 * next) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return sigma;
}

double truncated_hinf_norm(const PfdMatrix& tf, int T) {
  if (T < 1) throw ValidationError("T must be >= 1");
  if (tf.empty()) return 0.0;
  return toeplitz_spectral_norm(impulse_response(tf, T));
}

std::vector<Complex> lagrange_coeffs(std::span<const Complex> poles) {
  const std::size_t m = poles.size();
  std::vector<Complex> c(m, Complex(1.0, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const Complex d = poles[i] - poles[j];
      if (std::abs(d) <= 1e-12) {
        std::ostringstream os;
        os << "poles " << poles[i] << " and " << poles[j]
           << " are too close for a simple-pole expansion";
        throw NumericalError(os.str());
      }
      c[i] /= d;
    }
  }
  return c;
}

PfdMatrix split_multipole(const Eigen::MatrixXcd& coeff, Complex q, int order,
                          std::span<const Complex> replacement, int shift) {
  if (order < 1) throw ValidationError("order must be >= 1");
  if (static_cast<int>(replacement.size()) != order) {
    throw ValidationError("split_multipole needs exactly `order` poles");
  }
  if (shift < 0 || shift >= order) {
    throw ValidationError("shift must satisfy 0 <= shift < order");
  }
  for (const auto& p : replacement) {
    if (!(std::abs(p) < 1.0)) {
      throw ValidationError("replacement poles must lie inside the unit disk");
    }
  }
  const auto c = lagrange_coeffs(replacement);
  PfdMatrix out(static_cast<int>(coeff.rows()), static_cast<int>(coeff.cols()));
  for (int j = 0; j < order; ++j) {
    const Complex w = std::pow(replacement[j] - q, shift) * c[j];
    out.add_term(replacement[j], 1, Eigen::MatrixXcd(w * coeff));
  }
  return out;
}

PfdMatrix add(const PfdMatrix& a, const PfdMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("add: dimension mismatch");
  }
  PfdMatrix out = a;
  for (const auto& t : b.terms()) out.add_term(t.pole, t.order, t.coeff);
  return out;
}

PfdMatrix scale(const PfdMatrix& a, double s) {
  PfdMatrix out(a.rows(), a.cols());
  if (s == 0.0) return out;
  for (const auto& t : a.terms()) {
    out.add_term(t.pole, t.order, Eigen::MatrixXcd(s * t.coeff));
  }
  return out;
}

PfdMatrix left_mul(const Eigen::MatrixXd& M, const PfdMatrix& a) {
  if (M.cols() != a.rows()) throw ValidationError("left_mul: dimension mismatch");
  PfdMatrix out(static_cast<int>(M.rows()), a.cols());
  const Eigen::MatrixXcd Mc = M.cast<Complex>();
  for (const auto& t : a.terms()) {
    out.add_term(t.pole, t.order, Eigen::MatrixXcd(Mc * t.coeff));
  }
  return out;
}

PfdMatrix right_mul(const PfdMatrix& a, const Eigen::MatrixXd& M) {
  if (M.rows() != a.cols()) {
    throw ValidationError("right_mul: dimension mismatch");
  }
  PfdMatrix out(a.rows(), static_cast<int>(M.cols()));
  const Eigen::MatrixXcd Mc = M.cast<Complex>();
  for (const auto& t : a.terms()) {
    out.add_term(t.pole, t.order, Eigen::MatrixXcd(t.coeff * Mc));
  }
  return out;
}

int default_horizon(double max_modulus, double tol, int cap) {
  if (max_modulus <= 0.0) return 1;
  if (max_modulus >= 1.0) {
    std::cerr << "warning: pole on or outside the unit circle; horizon capped at "
              << cap << "\n";
    return cap;
  }
  const double T = std::ceil(std::log(tol) / std::log(max_modulus));
  if (T > cap) {
    std::cerr << "warning: horizon " << T << " exceeds cap; using " << cap
              << " samples\n";
    return cap;
  }
  return std::max(1, static_cast<int>(T) + 1);
}

}  // namespace sls
