#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace sls {

using Complex = std::complex<double>;

/// One partial-fraction term  coeff / (z - pole)^order.
struct PfdTerm {
  Complex pole;
  int order = 1;
  Eigen::MatrixXcd coeff;
};

/// Strictly proper rational transfer matrix held as a sum of partial-fraction
/// terms. Terms sharing (pole, order) are merged on insert; poles closer than
/// kPoleSnapTol are identified.
class PfdMatrix {
 public:
  static constexpr double kPoleSnapTol = 1e-12;

  PfdMatrix(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<PfdTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Adds coeff / (z - pole)^order. Requires |pole| < 1 and order >= 1.
  void add_term(Complex pole, int order, const Eigen::MatrixXcd& coeff);
  template <class Derived>
  void add_term(Complex pole, int order, const Eigen::MatrixBase<Derived>& coeff) {
    add_term(pole, order, Eigen::MatrixXcd(coeff.template cast<Complex>()));
  }

  double max_pole_modulus() const;

  /// Largest mismatch between a term and its conjugate partner, relative to
  /// the coefficient scale. Zero for an exactly conjugate-symmetric matrix.
  double conjugate_asymmetry() const;

 private:
  int rows_;
  int cols_;
  std::vector<PfdTerm> terms_;
};

/// Scalar sequence s(k) = q^(k-order) * binom(k-1, order-1), k = 1..horizon,
/// with s(k) = 0 for k < order. Index 0 of the result is k = 1.
std::vector<Complex> pole_sequence(Complex pole, int order, int horizon);

/// Impulse samples k = 1..horizon (index 0 is k = 1). Throws DataError when
/// a sample carries a non-negligible imaginary part.
std::vector<Eigen::MatrixXd> impulse_response(const PfdMatrix& tf, int horizon);

Eigen::MatrixXcd evaluate(const PfdMatrix& tf, Complex z);

/// Frobenius norm of the stacked samples k = 1..T.
double truncated_h2_norm(const PfdMatrix& tf, int T);

/// Largest singular value of the T-block lower-triangular Toeplitz
/// convolution matrix built from samples k = 1..T.
double truncated_hinf_norm(const PfdMatrix& tf, int T);

/// Same quantity for explicit samples (block (i, j) = samples[i - j]).
double toeplitz_spectral_norm(const std::vector<Eigen::MatrixXd>& samples);
Eigen::MatrixXd block_toeplitz(const std::vector<Eigen::MatrixXd>& samples);

/// c_i = 1 / prod_{j != i} (p_i - p_j), so that
/// sum_i c_i / (z - p_i) = 1 / prod_i (z - p_i).
std::vector<Complex> lagrange_coeffs(std::span<const Complex> poles);

/// Replaces coeff / (z - q)^order by simple poles at `replacement`
/// (exactly `order` distinct poles inside the disk):
///   sum_j (p_j - q)^shift * c_j * coeff / (z - p_j)
///     = coeff * (z - q)^shift / prod_j (z - p_j),
/// which approximates coeff / (z - q)^(order - shift). shift = 0 gives the
/// approximation of the original term; 0 <= shift < order.
PfdMatrix split_multipole(const Eigen::MatrixXcd& coeff, Complex q, int order,
                          std::span<const Complex> replacement, int shift = 0);

PfdMatrix add(const PfdMatrix& a, const PfdMatrix& b);
PfdMatrix scale(const PfdMatrix& a, double s);
PfdMatrix left_mul(const Eigen::MatrixXd& M, const PfdMatrix& a);
PfdMatrix right_mul(const PfdMatrix& a, const Eigen::MatrixXd& M);

/// binom(n, k) in floating point by multiplicative recurrence.
double binomial(int n, int k);

inline constexpr int kMaxHorizon = 20000;

/// Smallest T with max_modulus^T < tol, capped at `cap` (a warning is
/// logged to stderr when the cap binds).
int default_horizon(double max_modulus, double tol = 1e-8,
                    int cap = kMaxHorizon);

}  // namespace sls
