#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "sls/lti.hpp"

namespace sls {

enum class PoleTag { plant, prior, spiral };

const char* to_string(PoleTag tag);

struct TaggedPole {
  Complex value;
  PoleTag tag = PoleTag::spiral;
};

struct GeometryMetrics {
  double covering_radius = 0.0;  // D(P)
  double max_modulus = 0.0;      // r
  double plant_separation = 0.0;  // delta; +inf when no pair qualifies
};

/// Conjugate-closed, duplicate-free set of approximating poles inside the
/// open unit disk.
struct PoleSet {
  std::vector<TaggedPole> poles;
  std::optional<GeometryMetrics> metrics;

  std::size_t size() const { return poles.size(); }
  std::vector<Complex> values() const;
  bool contains(Complex z, double tol) const;
};

/// Radius cap constant c in r_max = 1 - c / sqrt(n - 1).
inline constexpr double kSpiralRadiusConstant = 0.886226925452758;  // sqrt(pi)/2

/// 2n - 2 poles from an Archimedean spiral (n >= 2).
PoleSet spiral_poles(int n);

/// Plant eigenvalues (once each, stable ones only) + prior poles + spiral
/// fill with parameter n_spiral (0 or 1 means no fill). Duplicates within
/// 1e-12 keep the tag with priority plant > prior > spiral.
PoleSet assemble(const EigenStructure& plant, std::span<const Complex> prior,
                 int n_spiral);
/// Same, with an explicit fill set instead of a spiral parameter.
PoleSet assemble(const EigenStructure& plant, std::span<const Complex> prior,
                 const PoleSet& fill);

/// Throws ValidationError unless the set is inside the disk, conjugate-closed
/// and duplicate-free.
void validate_pole_set(const PoleSet& poles);

inline constexpr int kDefaultGridPoints = 200000;
inline constexpr int kDefaultBoundaryPoints = 2000;

/// max over a quasi-uniform disk grid (plus boundary points) of the distance
/// to the nearest pole.
double covering_radius(const PoleSet& poles,
                       int grid_points = kDefaultGridPoints,
                       int boundary_points = kDefaultBoundaryPoints);

GeometryMetrics geometry_metrics(const PoleSet& poles,
                                 const EigenStructure& plant,
                                 int grid_points = kDefaultGridPoints);

}  // namespace sls
