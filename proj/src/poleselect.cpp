#include "sls/poleselect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sls/errors.hpp"

namespace sls {

namespace {

constexpr double kDupTol = 1e-12;

// Arc length of r = a*theta from 0 to theta.
double spiral_arc(double a, double theta) {
  return 0.5 * a * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

double bisect(auto&& f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void insert_unique(std::vector<TaggedPole>& out, Complex z, PoleTag tag) {
  for (const auto& p : out) {
    if (std::abs(p.value - z) <= kDupTol) return;
  }
  out.push_back({z, tag});
}

}  // namespace

const char* to_string(PoleTag tag) {
  switch (tag) {
    case PoleTag::plant:
      return "plant";
    case PoleTag::prior:
      return "prior";
    case PoleTag::spiral:
      return "spiral";
  }
  return "?";
}

std::vector<Complex> PoleSet::values() const {
  std::vector<Complex> v;
  v.reserve(poles.size());
  for (const auto& p : poles) v.push_back(p.value);
  return v;
}

bool PoleSet::contains(Complex z, double tol) const {
  return std::any_of(poles.begin(), poles.end(), [&](const TaggedPole& p) {
    return std::abs(p.value - z) <= tol;
  });
}

PoleSet spiral_poles(int n) {
  if (n < 2) throw ValidationError("spiral_poles requires n >= 2");
  const int count = n - 1;
  const double radius = 1.0 - kSpiralRadiusConstant / std::sqrt(count);

  // r = a phi with the angle wrapped into [0, pi): each half turn is one
  // ring of the upper half disk. Pitch a makes the ring spacing (pi a) equal
  // the arc-length spacing between consecutive samples.
  const double a = bisect(
      [&](double aa) {
        return std::numbers::pi * aa * count -
               spiral_arc(aa, radius / aa);
      },
      1e-9, radius);
  const double theta_max = radius / a;
  const double total = spiral_arc(a, theta_max);
  const double step = total / count;

  PoleSet out;
  std::vector<Complex> upper;
  for (int i = 1; i <= count; ++i) {
    const double target = step * (i - 0.5);
    const double theta = bisect(
        [&](double th) { return spiral_arc(a, th) - target; }, 0.0, theta_max);
    const double r = std::min(a * theta, radius);
    Complex z = std::polar(r, std::fmod(theta, std::numbers::pi));
    // Keep points off the real axis so every point has a distinct conjugate.
    const double min_imag = 0.5 * step;
    if (z.imag() < min_imag) {
      const double im = std::min(min_imag, radius);
      const double re_mag = std::sqrt(std::max(0.0, radius * radius - im * im));
      const double re = std::clamp(z.real(), -re_mag, re_mag);
      z = Complex(re, im);
    }
    upper.push_back(z);
  }
  // Resolve accidental collisions after folding by nudging along the arc.
  for (std::size_t i = 0; i < upper.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(upper[i] - upper[j]) <= 1e-9) {
        upper[i] = std::polar(std::abs(upper[i]) * (1.0 - 1e-6),
                              std::arg(upper[i]) + 1e-6);
      }
    }
  }
  for (const auto& z : upper) {
    out.poles.push_back({z, PoleTag::spiral});
    out.poles.push_back({std::conj(z), PoleTag::spiral});
  }
  return out;
}

void validate_pole_set(const PoleSet& poles) {
  for (std::size_t i = 0; i < poles.poles.size(); ++i) {
    const auto& p = poles.poles[i];
    if (!(std::abs(p.value) < 1.0)) {
      std::ostringstream os;
      os << "pole " << p.value << " is not strictly inside the unit disk";
      throw ValidationError(os.str());
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(poles.poles[j].value - p.value) <= kDupTol) {
        throw ValidationError("pole set contains duplicates");
      }
    }
    if (std::abs(p.value.imag()) > kDupTol) {
      const bool closed = std::any_of(
          poles.poles.begin(), poles.poles.end(), [&](const TaggedPole& o) {
            return std::abs(o.value - std::conj(p.value)) <= kDupTol &&
                   o.tag == p.tag;
          });
      if (!closed) {
        std::ostringstream os;
        os << "pole " << p.value << " has no conjugate partner";
        throw ValidationError(os.str());
      }
    }
  }
}

PoleSet assemble(const EigenStructure& plant, std::span<const Complex> prior,
                 const PoleSet& fill) {
  for (const auto& p : prior) {
    if (!(std::abs(p) < 1.0)) {
      std::ostringstream os;
      os << "prior pole " << p << " is not strictly inside the unit disk";
      throw ValidationError(os.str());
    }
    if (std::abs(p.imag()) > kDupTol) {
      const bool closed = std::any_of(prior.begin(), prior.end(), [&](Complex o) {
        return std::abs(o - std::conj(p)) <= kDupTol;
      });
      if (!closed) {
        std::ostringstream os;
        os << "prior pole set is not conjugate-closed at " << p;
        throw ValidationError(os.str());
      }
    }
  }
  PoleSet out;
  for (const auto& e : plant.entries) {
    if (std::abs(e.value) < 1.0) insert_unique(out.poles, e.value, PoleTag::plant);
  }
  for (const auto& p : prior) {
    const Complex z = std::abs(p.imag()) <= kDupTol ? Complex(p.real(), 0.0) : p;
    insert_unique(out.poles, z, PoleTag::prior);
  }
  for (const auto& p : fill.poles) insert_unique(out.poles, p.value, PoleTag::spiral);
  validate_pole_set(out);
  return out;
}

PoleSet assemble(const EigenStructure& plant, std::span<const Complex> prior,
                 int n_spiral) {
  if (n_spiral < 0) throw ValidationError("n_spiral must be >= 0");
  return assemble(plant, prior, n_spiral >= 2 ? spiral_poles(n_spiral) : PoleSet{});
}

double covering_radius(const PoleSet& poles, int grid_points,
                       int boundary_points) {
  if (poles.poles.empty()) {
    throw ValidationError("covering radius of an empty pole set");
  }
  if (grid_points < 1 || boundary_points < 0) {
    throw ValidationError("grid sizes must be positive");
  }
  const auto values = poles.values();
  auto nearest = [&](Complex z) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : values) best = std::min(best, std::norm(z - p));
    return best;
  };
  double worst = 0.0;
  // Vogel (sunflower) points: quasi-uniform over the disk.
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < grid_points; ++i) {
    const double r = std::sqrt((i + 0.5) / grid_points);
    worst = std::max(worst, nearest(std::polar(r, golden * i)));
  }
  for (int j = 0; j < boundary_points; ++j) {
    worst = std::max(
        worst, nearest(std::polar(1.0, 2.0 * std::numbers::pi * j / boundary_points)));
  }
  return std::sqrt(worst);
}

GeometryMetrics geometry_metrics(const PoleSet& poles,
                                 const EigenStructure& plant, int grid_points) {
  GeometryMetrics g;
  g.covering_radius = covering_radius(poles, grid_points);
  for (const auto& p : poles.poles) {
    g.max_modulus = std::max(g.max_modulus, std::abs(p.value));
  }
  g.plant_separation = std::numeric_limits<double>::infinity();
  for (const auto& p : poles.poles) {
    for (const auto& q : plant.entries) {
      const double d = std::abs(p.value - q.value);
      if (d <= kDupTol) continue;
      g.plant_separation = std::min(g.plant_separation, d);
    }
  }
  return g;
}

}  // namespace sls
