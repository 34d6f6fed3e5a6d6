#include "qslp/pulse_sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qslp/errors.hpp"

namespace qslp {

namespace {

// 0 -> 1 across [-ramp/2, ramp/2].
double rise(double x, double ramp) {
  if (ramp <= 0.0) return x > 0.0 ? 1.0 : (x < 0.0 ? 0.0 : 0.5);
  if (x <= -0.5 * ramp) return 0.0;
  if (x >= 0.5 * ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * (x / ramp + 0.5));
}

}  // namespace

std::string_view to_string(Channel channel) {
  return channel == Channel::kFwc ? "FWC" : "BWC";
}

void TimingSequence::validate() const {
  if (!(period > 0.0)) throw ConfigError("invariant violated: sequence period > 0");
  if (!(ramp_time >= 0.0)) throw ConfigError("invariant violated: ramp_time >= 0");
  double previous_off = 0.0;
  for (const auto& iv : intervals) {
    if (!(iv.t_on >= previous_off && iv.t_off > iv.t_on && iv.t_off <= period)) {
      throw ConfigError(
          "invariant violated: intervals must be sorted, disjoint and inside [0, period)");
    }
    if (!(ramp_time < 0.5 * (iv.t_off - iv.t_on))) {
      throw ConfigError("invariant violated: ramp_time < half the shortest interval");
    }
    previous_off = iv.t_off;
  }
}

void InputWaveform::validate() const {
  if (!(std::isfinite(fwhm) && fwhm > 0.0)) {
    throw ConfigError("invariant violated: input.fwhm > 0");
  }
  if (!std::isfinite(center)) throw ConfigError("invariant violated: input.t0 finite");
}

double InputWaveform::intensity_sigma() const {
  return fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

double InputWaveform::peak_amplitude() const {
  const double s = intensity_sigma();
  return std::pow(2.0 * std::numbers::pi * s * s, -0.25);
}

double InputWaveform::cumulative_energy(double t) const {
  return 0.5 * std::erfc(-(t - center) / (std::numbers::sqrt2 * intensity_sigma()));
}

double InputWaveform::time_at_energy_fraction(double fraction) const {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DomainError("energy fraction must lie in (0, 1)");
  }
  // Bisection on the erfc form; 200 halvings is far below double resolution.
  const double s = intensity_sigma();
  double lo = center - 40.0 * s;
  double hi = center + 40.0 * s;
  for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cumulative_energy(mid) < fraction) lo = mid; else hi = mid;
  }
  return hi;
}

double envelope(const TimingSequence& seq, double t) {
  const double tr = t - seq.period * std::floor(t / seq.period);
  double value = 0.0;
  // Neighbouring repetitions make wrap-around schedules seamless; adjacent
  // ramps are complementary so abutting intervals sum to exactly one.
  for (int image = -1; image <= 1; ++image) {
    const double shift = image * seq.period;
    for (const auto& iv : seq.intervals) {
      value += rise(tr - (iv.t_on + shift), seq.ramp_time) *
               rise((iv.t_off + shift) - tr, seq.ramp_time);
    }
  }
  return std::clamp(value, 0.0, 1.0);
}

std::complex<double> waveform(const InputWaveform& w, double t) {
  const double s = w.intensity_sigma();
  const double x = t - w.center;
  return {w.peak_amplitude() * std::exp(-x * x / (4.0 * s * s)), 0.0};
}

std::string_view to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kSlowLight: return "slow_light";
    case Scenario::kEitMemory: return "eit_memory";
    case Scenario::kEitPlusQslp: return "eit_plus_qslp";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "slow_light") return Scenario::kSlowLight;
  if (name == "eit_memory") return Scenario::kEitMemory;
  if (name == "eit_plus_qslp") return Scenario::kEitPlusQslp;
  throw ConfigError("unknown scenario '" + std::string(name) +
                    "' (expected slow_light, eit_memory or eit_plus_qslp)");
}

void SequenceTiming::validate() const {
  if (!(storage_threshold > 0.0 && storage_threshold < 1.0)) {
    throw ConfigError("invariant violated: solver.storage_threshold in (0, 1)");
  }
  if (!(storage_duration > 0.0)) {
    throw ConfigError("invariant violated: solver.storage_duration > 0");
  }
  if (!(qslp_duration > 0.0)) throw ConfigError("invariant violated: solver.qslp_duration > 0");
  if (!(ramp_time >= 0.0)) throw ConfigError("invariant violated: solver.ramp_time >= 0");
  if (!(period > 0.0)) throw ConfigError("invariant violated: solver.period > 0");
}

ScheduleInstants schedule_instants(Scenario scenario, const InputWaveform& input,
                                   const SequenceTiming& timing) {
  ScheduleInstants s;
  if (scenario == Scenario::kSlowLight) return s;
  s.storage = input.time_at_energy_fraction(timing.storage_threshold);
  s.release = s.storage + timing.storage_duration;
  s.qslp_end = scenario == Scenario::kEitPlusQslp ? s.release + timing.qslp_duration
                                                   : s.release;
  s.last_edge = s.qslp_end;
  return s;
}

std::map<Channel, TimingSequence> standard_sequence(Scenario scenario,
                                                    const InputWaveform& input,
                                                    const SequenceTiming& timing) {
  timing.validate();
  input.validate();
  TimingSequence fwc{Channel::kFwc, {}, timing.ramp_time, timing.period};
  TimingSequence bwc{Channel::kBwc, {}, timing.ramp_time, timing.period};
  if (scenario == Scenario::kSlowLight) {
    fwc.intervals.push_back({0.0, timing.period});
  } else {
    const ScheduleInstants s = schedule_instants(scenario, input, timing);
    if (!(s.storage > 0.0 && s.last_edge < timing.period)) {
      throw ConfigError("schedule does not fit inside one repetition period");
    }
    fwc.intervals.push_back({0.0, s.storage});
    fwc.intervals.push_back({s.release, timing.period});
    if (scenario == Scenario::kEitPlusQslp) bwc.intervals.push_back({s.release, s.qslp_end});
  }
  fwc.validate();
  bwc.validate();
  return {{Channel::kFwc, fwc}, {Channel::kBwc, bwc}};
}

}  // namespace qslp
