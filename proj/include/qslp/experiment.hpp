#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qslp/mbe_solver.hpp"
#include "qslp/photon_statistics.hpp"

namespace qslp {

struct Metric {
  std::string name;
  double value = 0.0;
  std::string unit;
  std::vector<WindowSpec> windows;  // windows the value was computed over
  std::string note;
};

struct ScenarioReport {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Metric> metrics;
  std::vector<std::string> artifacts;
  std::vector<std::string> notes;

  // Throws std::out_of_range for unknown names.
  const Metric& metric(std::string_view name) const;
  std::string to_json() const;
};

struct ExperimentSetup {
  SolverConfig solver;
  PairSourceModel source;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1'000'000;
  double bin_width = 20e-9;
  double release_window = 3.7e-6;  // width of the release integration windows
  // '#' lines prepended to every emitted file.
  std::vector<std::string> header;
};

// '#' header lines followed by the JSON body.
void write_report(const std::filesystem::path& path, const ScenarioReport& report,
                  const std::vector<std::string>& header);

// Peak-arrival delay of b relative to a and the energy ratio b / a, both
// taken after each record's release instant.
struct TraceComparison {
  double delay = 0.0;
  double ratio = 0.0;
};

TraceComparison compare_traces(const SimulationRecord& a, const SimulationRecord& b);

// Least-squares fit of y = A exp(-t / tau) over the window; returns tau.
double fit_decay_time(const std::vector<double>& t, const std::vector<double>& y,
                      const WindowSpec& window);

// Metrics for one solver scenario. eit_plus_qslp also runs eit_memory as the
// reference for relative release, delay and suppression.
std::vector<Metric> scenario_metrics(Scenario scenario, const SolverConfig& cfg,
                                     double release_window = 3.7e-6);

// fig3a_eit_memory | fig3b_eit_qslp | fig4_statistics (or fig3a | fig3b | fig4).
// Writes traces and report.json into out_dir when it is non-empty.
ScenarioReport reproduce(std::string_view scenario, const ExperimentSetup& setup,
                         const std::filesystem::path& out_dir = {});

struct SweepAxis {
  std::string parameter;  // omega_fwc, omega_bwc, od, delta, delta_k, gamma_gs
  std::vector<double> values;
};

struct SweepRow {
  std::vector<std::pair<std::string, double>> point;
  std::vector<Metric> metrics;
  bool ok = true;
  std::string error;
};

// Applies one sweep coordinate to a config; throws ConfigError for unknown names.
void apply_sweep_parameter(SolverConfig& cfg, std::string_view parameter, double value);

// Cartesian product in axis order (last axis fastest). Rows keep grid order
// whatever the thread count; failed points are kept and marked.
std::vector<SweepRow> sweep(const std::vector<SweepAxis>& axes, Scenario scenario,
                            const SolverConfig& base, unsigned threads = 0,
                            double release_window = 3.7e-6);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header = {});

}  // namespace qslp
