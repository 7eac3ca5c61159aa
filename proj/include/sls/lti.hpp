#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace sls {

using Complex = std::complex<double>;

/// Discrete-time plant
///   x(k+1) = A x(k) + B u(k) + Bhat w(k)
///   y(k)   = C x(k) + D u(k)
/// Dimensions are checked on construction and the object is immutable.
class PlantModel {
 public:
  PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd Bhat,
             Eigen::MatrixXd C, Eigen::MatrixXd D);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  const Eigen::MatrixXd& Bhat() const { return Bhat_; }
  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::MatrixXd& D() const { return D_; }

  int n() const { return static_cast<int>(A_.rows()); }  // states
  int p() const { return static_cast<int>(B_.cols()); }  // inputs
  int q() const { return static_cast<int>(Bhat_.cols()); }  // disturbances
  int m() const { return static_cast<int>(C_.rows()); }  // outputs

 private:
  Eigen::MatrixXd A_, B_, Bhat_, C_, D_;
};

struct EigenCluster {
  Complex value;
  int multiplicity = 1;
};

/// Eigenvalues of A grouped into clusters with algebraic multiplicities.
/// Conjugate-closed; multiplicities sum to n.
struct EigenStructure {
  std::vector<EigenCluster> entries;

  int total_multiplicity() const;
  /// Index of the entry within `tol` of `z`, or -1.
  int find(Complex z, double tol) const;
};

/// 1e-7 * (1 + max |A_ij|).
double default_cluster_tol(const PlantModel& plant);

EigenStructure eigen_multiplicities(const PlantModel& plant, double cluster_tol);
EigenStructure eigen_multiplicities(const PlantModel& plant);

/// True iff [qI - A, B] has full row rank at q.
bool pbh_full_rank(const PlantModel& plant, Complex q, double rank_tol);

struct StabilizabilityReport {
  bool stabilizable = true;
  std::vector<Complex> offending;  // unstable eigenvalues failing the PBH test
};

inline constexpr double kDefaultRankTol = 1e-9;

StabilizabilityReport is_stabilizable(const PlantModel& plant,
                                      double rank_tol = kDefaultRankTol);

/// Eigenvalues (stable or not) at which the PBH rank test fails.
std::vector<EigenCluster> uncontrollable_eigenvalues(
    const PlantModel& plant, double rank_tol = kDefaultRankTol);

}  // namespace sls
