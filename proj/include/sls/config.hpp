#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sls/lti.hpp"
#include "sls/rational.hpp"
#include "sls/spa.hpp"

namespace sls {

enum class Method { spa, dbc };

struct DesignConfig {
  Method method = Method::spa;
  double lambda = 0.0;
  int horizon = 0;                 // 0 selects the default
  std::vector<int> n_spiral;       // union of spiral(n) fills
  int T_fir = 0;
  std::vector<Complex> prior;
};

struct OutputConfig {
  std::string directory = "synth_out";
  int impulse_horizon = 5000;
  int step_horizon = 5000;
  std::vector<int> sweep;          // convergence sweep n values, empty = none
};

/// Parsed configuration file.
///
/// Layout: `[section]` headers followed by `key = value` lines whose values
/// are JSON. Matrices are arrays of rows, complex scalars are [re, im], and
/// `#` starts a comment. Sections: plant, desired, design, output.
struct RunConfig {
  std::string preset;  // empty when the plant was given explicitly
  std::optional<PlantModel> plant;
  PfdMatrix desired{1, 1};  // replaced on parse
  double sample_time = 0.0;  // seconds, 0 when unknown
  DesignConfig design;
  OutputConfig output;

  /// Pole set: stable plant eigenvalues + prior poles + spiral fills.
  PoleSet poles() const;
  SynthesisProblem problem() const;
};

/// Throws ValidationError with "line N:" diagnostics.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::string& path);

/// Writes explicit matrices, so the output reparses to the same numbers.
std::string serialize_config(const RunConfig& config);

/// Power converter example with h = 1 ms and T_desired poles at 0.999.
RunConfig power_converter_preset();

/// Nested spiral parameters giving the 7- and 15-pole sets of the example.
std::vector<int> power_converter_spirals(int num_poles);

}  // namespace sls
