#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qslp/experiment.hpp"
#include "qslp/medium.hpp"
#include "qslp/mbe_solver.hpp"
#include "qslp/photon_statistics.hpp"

namespace qslp {

// Physical kind of a configuration value; decides which unit suffixes parse.
enum class Quantity { kDimensionless, kRate, kTime, kLength, kWavenumber, kAngle, kCount };

// Parses "<number> [unit]" into SI. Rates are angular (rad/s); a Hz-family
// unit must carry an explicit 2pi factor, as in "2pi*6.0 MHz".
double parse_quantity(std::string_view text, Quantity kind);

struct AnalysisConfig {
  std::string events_file;
  double bin_width = 20e-9;
  double coincidence_window = 3.5e-6;
  int reference_index = 8;  // periods between first and reference peak
  std::uint64_t splitter_seed = 7;
};

// Everything a command needs, with the paper's fit point as defaults.
struct ResolvedConfig {
  std::string scenario = "eit_memory";
  std::uint64_t seed = 1;
  std::size_t repetitions = 1'000'000;
  double release_window = 3.7e-6;
  unsigned threads = 0;
  SolverConfig solver;
  PairSourceModel source;
  Geometry geometry{0.345 * std::numbers::pi / 180.0, 795e-9};
  PhiConvention phi_convention = PhiConvention::kAmplitudeRatio;
  AnalysisConfig analysis;
  std::string sweep_scenario = "eit_plus_qslp";
  std::vector<SweepAxis> sweep_axes;

  void validate() const;
  // One "key = value" line per known key, SI units, in a fixed order.
  std::vector<std::string> echo() const;
};

// Line-based "key = value" text with optional [section] headers. Throws
// ConfigError naming the line for syntax errors and unknown keys, and the
// field for invariant violations.
ResolvedConfig parse_config(std::string_view text);

// Applies a single setting (also used for --set key=value).
void apply_setting(ResolvedConfig& cfg, std::string_view key, std::string_view value);
void apply_override(ResolvedConfig& cfg, std::string_view assignment);

ExperimentSetup make_setup(const ResolvedConfig& cfg);

}  // namespace qslp
