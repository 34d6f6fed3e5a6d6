#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qslp/medium.hpp"
#include "qslp/pulse_sequence.hpp"

namespace qslp {

using cplx = std::complex<double>;

struct SolverConfig {
  int nz = 200;
  double dt = 1e-9;
  double t_max = 12e-6;
  double dt_record = 10e-9;
  MediumParams medium;
  DriveAmplitudes drives;
  InputWaveform input;
  double input_scale = 1.0;  // amplitude multiplier on the unit-energy input
  SequenceTiming timing;
  // Filled by run() from the scenario; simulate() uses them as given.
  std::map<Channel, TimingSequence> sequences;

  double dz() const { return medium.length / (nz - 1); }
  // Largest dt allowed by the stiffness guard.
  double max_stable_dt() const;
  int record_stride() const;
  long total_steps() const;
  // Throws ConfigError naming the violated invariant.
  void validate() const;
};

// Field envelopes (rad/s, the units of a Rabi frequency) and the five
// atomic coherences on the z grid at one instant.
struct SystemState {
  double t = 0.0;
  std::vector<cplx> e_plus;
  std::vector<cplx> e_minus;
  std::vector<cplx> rho_eg_plus;
  std::vector<cplx> rho_eg_minus;
  std::vector<cplx> rho_sg_pm;
  std::vector<cplx> rho_sg_mp;
  std::vector<cplx> rho_sg_0;

  static SystemState zero(int nz);
  std::size_t size() const { return e_plus.size(); }
};

struct Energies {
  double photonic = 0.0;
  double spin = 0.0;
  double higher_coherence = 0.0;
};

Energies energies(const SystemState& state, double dz);

// Raised when a non-finite value appears; carries the last finite state.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(double t, std::size_t z_index, std::string variable, SystemState last_valid);

  double time() const { return time_; }
  std::size_t z_index() const { return z_index_; }
  const std::string& variable() const { return variable_; }
  const SystemState& last_valid_state() const { return last_valid_; }

 private:
  double time_;
  std::size_t z_index_;
  std::string variable_;
  SystemState last_valid_;
};

struct SimulationRecord {
  std::vector<double> t;
  std::vector<cplx> e_plus_out;   // E+(L, t)
  std::vector<cplx> e_minus_out;  // E-(0, t)
  std::vector<cplx> e_plus_in;    // E+(0, t), the injected boundary value
  std::vector<double> photonic_energy;
  std::vector<double> spin_energy;
  std::vector<double> higher_coherence_energy;

  std::string scenario;
  int nz = 0;
  double dz = 0.0;
  double dt = 0.0;
  double dt_record = 0.0;
  ScheduleInstants instants;
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t size() const { return t.size(); }
};

// Advances the atoms by RK4 with fields frozen, then re-solves both field
// equations along z with the propagation term c0^-1 d/dt neglected.
class MbeIntegrator {
 public:
  explicit MbeIntegrator(const SolverConfig& cfg);

  SystemState initial_state() const;
  void advance(SystemState& state) const;
  void solve_fields(SystemState& state) const;

 private:
  void check_finite(const SystemState& state, const SystemState& previous) const;

  const SolverConfig& cfg_;
  double gamma_;         // time unit is 1 / gamma_
  double dtau_;          // dt in units of 1 / gamma
  double half_od_;       // field coupling OD / 2 per unit length L
  double dzeta_;         // dz / L
  double dk_;            // delta_k * L
  double dephase_;       // gamma_gs / gamma
  double dephase_prime_;
  double detuning_;      // delta / gamma
  double omega_fwc_;     // Omega0 / gamma
  double omega_bwc_;
};

SystemState step(const SystemState& state, const SolverConfig& cfg);

// Runs with the drive schedule of the named scenario.
SimulationRecord run(SolverConfig cfg, Scenario scenario);

// Runs with cfg.sequences exactly as supplied (missing channels are off).
SimulationRecord simulate(const SolverConfig& cfg, const std::string& scenario_label = "custom");

// Energy leaving through z = L after t_from (trapezoid on the record grid).
double output_energy(const SimulationRecord& record, double t_from = 0.0,
                     double t_to = 1e300);
double input_energy(const SimulationRecord& record);
// Peak of |E+(L,t)|^2 within [t_from, t_to], refined by a parabola through
// the three samples around the maximum. NaN when the trace is flat zero.
double peak_time(const SimulationRecord& record, double t_from = 0.0, double t_to = 1e300);

struct ConvergenceReport {
  double base_energy = 0.0;
  double refined_energy = 0.0;
  double relative_energy_change = 0.0;
  double base_peak_time = 0.0;
  double refined_peak_time = 0.0;
  double peak_time_shift = 0.0;
  double energy_tolerance = 1e-2;
  double peak_tolerance = 20e-9;
  bool converged = true;
  std::string failure;  // set when either run hit a non-finite value
};

// Reruns the scenario with dt/2 and dz/2 and compares the released pulse.
ConvergenceReport convergence_check(const SolverConfig& cfg, Scenario scenario,
                                    double energy_tolerance = 1e-2,
                                    double peak_tolerance = 20e-9);

// CSV with '#'-prefixed metadata: extra_header first, then the record's own.
void write_csv(std::ostream& os, const SimulationRecord& record,
               const std::vector<std::string>& extra_header = {});

std::vector<std::pair<std::string, std::string>> describe(const SolverConfig& cfg);

}  // namespace qslp
