#pragma once

#include <complex>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace qslp {

enum class Channel { kFwc, kBwc };

std::string_view to_string(Channel channel);

struct Interval {
  double t_on = 0.0;
  double t_off = 0.0;
};

// One repetition of a drive schedule. Edges are raised-cosine ramps
// centred on t_on / t_off, so the envelope is 0.5 exactly at an edge.
struct TimingSequence {
  Channel channel = Channel::kFwc;
  std::vector<Interval> intervals;
  double ramp_time = 50e-9;
  double period = 12e-6;

  void validate() const;
};

// Gaussian amplitude with unit energy: the integral of |w(t)|^2 over t is 1.
struct InputWaveform {
  double center = 1.5e-6;
  double fwhm = 0.57e-6;  // of the intensity |w|^2

  void validate() const;
  // Standard deviation of the intensity profile.
  double intensity_sigma() const;
  double peak_amplitude() const;
  // Fraction of the pulse energy that arrived before t.
  double cumulative_energy(double t) const;
  // Earliest t by which the given fraction of the energy has arrived.
  double time_at_energy_fraction(double fraction) const;
};

double envelope(const TimingSequence& seq, double t);

std::complex<double> waveform(const InputWaveform& w, double t);

enum class Scenario { kSlowLight, kEitMemory, kEitPlusQslp };

std::string_view to_string(Scenario scenario);
// Throws ConfigError on unknown names.
Scenario parse_scenario(std::string_view name);

// Scenario schedules are anchored at the storage instant, the moment a
// given fraction of the input energy has entered the medium.
struct SequenceTiming {
  double storage_threshold = 0.99;
  double storage_duration = 2e-6;
  double qslp_duration = 1e-6;
  double ramp_time = 50e-9;
  double period = 12e-6;

  void validate() const;
};

struct ScheduleInstants {
  double storage = 0.0;      // FWC switched off
  double release = 0.0;      // FWC back on (and BWC on for QSLP)
  double qslp_end = 0.0;     // BWC switched off; equals release without QSLP
  double last_edge = 0.0;
};

ScheduleInstants schedule_instants(Scenario scenario, const InputWaveform& input,
                                   const SequenceTiming& timing);

std::map<Channel, TimingSequence> standard_sequence(Scenario scenario,
                                                    const InputWaveform& input,
                                                    const SequenceTiming& timing);

}  // namespace qslp
