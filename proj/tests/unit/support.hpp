#pragma once

#include <random>
#include <vector>

#include "sls/config.hpp"
#include "sls/lti.hpp"

namespace testing_support {

using sls::Complex;

inline std::vector<Complex> unit_circle_points(int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> th(0.0, 2.0 * M_PI);
  std::vector<Complex> zs;
  for (int i = 0; i < count; ++i) zs.push_back(std::polar(1.0, th(rng)));
  return zs;
}

inline sls::PlantModel converter_plant() { return *sls::power_converter_preset().plant; }

inline sls::PlantModel scalar_plant(double a, double b, double bhat = 1.0,
                                    double c = 1.0, double d = 0.0) {
  return sls::PlantModel(Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b),
                         Eigen::MatrixXd::Constant(1, 1, bhat),
                         Eigen::MatrixXd::Constant(1, 1, c), Eigen::MatrixXd::Constant(1, 1, d));
}

}  // namespace testing_support
