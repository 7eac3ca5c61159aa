#include "sls/lti.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sls/errors.hpp"

namespace sls {

namespace {

void require_finite(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) {
    throw ValidationError(std::string("plant matrix ") + name +
                          " has non-finite entries");
  }
}

std::string dims(const Eigen::MatrixXd& M) {
  std::ostringstream os;
  os << M.rows() << "x" << M.cols();
  return os.str();
}

// Union-find over raw eigenvalue indices.
int root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

PlantModel::PlantModel(Eigen::MatrixXd A, Eigen::MatrixXd B,
                       Eigen::MatrixXd Bhat, Eigen::MatrixXd C,
                       Eigen::MatrixXd D)
    : A_(std::move(A)),
      B_(std::move(B)),
      Bhat_(std::move(Bhat)),
      C_(std::move(C)),
      D_(std::move(D)) {
  const auto n = A_.rows();
  if (n == 0 || A_.cols() != n) {
    throw ValidationError("A must be square and nonempty, got " + dims(A_));
  }
  if (B_.rows() != n || B_.cols() == 0) {
    throw ValidationError("B must be n x p with p >= 1, got " + dims(B_));
  }
  if (Bhat_.rows() != n || Bhat_.cols() == 0) {
    throw ValidationError("Bhat must be n x q with q >= 1, got " + dims(Bhat_));
  }
  if (C_.cols() != n || C_.rows() == 0) {
    throw ValidationError("C must be m x n with m >= 1, got " + dims(C_));
  }
  if (D_.rows() != C_.rows() || D_.cols() != B_.cols()) {
    throw ValidationError("D must be m x p, got " + dims(D_));
  }
  require_finite(A_, "A");
  require_finite(B_, "B");
  require_finite(Bhat_, "Bhat");
  require_finite(C_, "C");
  require_finite(D_, "D");
}

int EigenStructure::total_multiplicity() const {
  return std::accumulate(entries.begin(), entries.end(), 0,
                         [](int s, const EigenCluster& e) {
                           return s + e.multiplicity;
                         });
}

int EigenStructure::find(Complex z, double tol) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (std::abs(entries[i].value - z) <= tol) return static_cast<int>(i);
  }
  return -1;
}

double default_cluster_tol(const PlantModel& plant) {
  return 1e-7 * (1.0 + plant.A().cwiseAbs().maxCoeff());
}

EigenStructure eigen_multiplicities(const PlantModel& plant) {
  return eigen_multiplicities(plant, default_cluster_tol(plant));
}

EigenStructure eigen_multiplicities(const PlantModel& plant,
                                    double cluster_tol) {
  if (!(cluster_tol >= 0.0)) {
    throw ValidationError("cluster tolerance must be nonnegative");
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(plant.A(), false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue iteration failed to converge for A (" +
                         std::to_string(plant.n()) + " states)");
  }
  const Eigen::VectorXcd raw = es.eigenvalues();
  const int n = static_cast<int>(raw.size());

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(raw(i) - raw(j)) <= cluster_tol) {
        parent[root(parent, i)] = root(parent, j);
      }
    }
  }

  std::vector<EigenCluster> clusters;
  std::vector<int> cluster_of_root(n, -1);
  std::vector<Complex> sums;
  for (int i = 0; i < n; ++i) {
    const int r = root(parent, i);
    if (cluster_of_root[r] < 0) {
      cluster_of_root[r] = static_cast<int>(clusters.size());
      clusters.push_back({Complex{}, 0});
      sums.emplace_back(0.0, 0.0);
    }
    const int c = cluster_of_root[r];
    sums[c] += raw(i);
    clusters[c].multiplicity += 1;
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    clusters[c].value = sums[c] / static_cast<double>(clusters[c].multiplicity);
  }

  // Real clusters get an exactly zero imaginary part; nonreal clusters are
  // paired with their conjugate and made exactly symmetric.
  const double real_tol = std::max(cluster_tol, 1e-14);
  std::vector<bool> used(clusters.size(), false);
  EigenStructure out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (used[c]) continue;
    auto& cl = clusters[c];
    if (std::abs(cl.value.imag()) <= real_tol) {
      used[c] = true;
      out.entries.push_back({Complex(cl.value.real(), 0.0), cl.multiplicity});
      continue;
    }
    int partner = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d < clusters.size(); ++d) {
      if (d == c || used[d]) continue;
      const double dist = std::abs(clusters[d].value - std::conj(cl.value));
      if (dist < best) {
        best = dist;
        partner = static_cast<int>(d);
      }
    }
    // Raw conjugate pairs from a real matrix agree to rounding, so anything
    // beyond a few cluster tolerances is a genuine mismatch.
    if (partner < 0 || best > 10.0 * real_tol + 1e-12 ||
        clusters[partner].multiplicity != cl.multiplicity) {
      std::ostringstream os;
      os << "eigenvalue cluster " << cl.value
         << " has no conjugate partner of equal multiplicity";
      throw NumericalError(os.str());
    }
    used[c] = used[partner] = true;
    const Complex upper =
        0.5 * (cl.value + std::conj(clusters[partner].value));
    const Complex top(upper.real(), std::abs(upper.imag()));
    out.entries.push_back({top, cl.multiplicity});
    out.entries.push_back({std::conj(top), cl.multiplicity});
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const EigenCluster& a, const EigenCluster& b) {
                     if (a.value.real() != b.value.real()) {
                       return a.value.real() > b.value.real();
                     }
                     return a.value.imag() > b.value.imag();
                   });
  return out;
}

bool pbh_full_rank(const PlantModel& plant, Complex q, double rank_tol) {
  const int n = plant.n();
  Eigen::MatrixXcd M(n, n + plant.p());
  M.leftCols(n) = q * Eigen::MatrixXcd::Identity(n, n) -
                  plant.A().cast<Complex>();
  M.rightCols(plant.p()) = plant.B().cast<Complex>();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return false;
  return s(n - 1) > rank_tol * s(0);
}

StabilizabilityReport is_stabilizable(const PlantModel& plant,
                                      double rank_tol) {
  StabilizabilityReport report;
  for (const auto& e : eigen_multiplicities(plant).entries) {
    if (std::abs(e.value) < 1.0) continue;
    if (!pbh_full_rank(plant, e.value, rank_tol)) {
      report.stabilizable = false;
      report.offending.push_back(e.value);
    }
  }
  return report;
}

std::vector<EigenCluster> uncontrollable_eigenvalues(const PlantModel& plant,
                                                     double rank_tol) {
  std::vector<EigenCluster> out;
  for (const auto& e : eigen_multiplicities(plant).entries) {
    if (!pbh_full_rank(plant, e.value, rank_tol)) out.push_back(e);
  }
  return out;
}

}  // namespace sls
