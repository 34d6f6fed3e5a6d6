#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qslp/pulse_sequence.hpp"

namespace qslp {

struct SimulationRecord;

struct WindowSpec {
  double t_start = 0.0;
  double t_end = 0.0;

  double width() const { return t_end - t_start; }
  void validate() const;
};

// Named windows used for the heralded-waveform and release analyses.
namespace windows {
inline constexpr WindowSpec kFirstPeak{0.0, 3.5e-6};
inline constexpr WindowSpec kEitRelease{3.3e-6, 7.0e-6};
inline constexpr WindowSpec kQslpRelease{4.3e-6, 8.0e-6};
}  // namespace windows

// Heralded-photon source: pair number per repetition follows
// p(n) = (1 - eta) eta^n, the photon statistics of a two-mode squeezed state.
struct PairSourceModel {
  double eta = 0.0988;
  double herald_efficiency = 1.0;
  double signal_efficiency = 1.0;
  double noise_floor = 0.0;          // background counts per bin per herald
  double noise_bin_width = 20e-9;    // bin width at which noise_floor is quoted
  double repetition_period = 12e-6;
  double jitter = 0.0;               // Gaussian detector timing blur, s
  InputWaveform waveform;

  void validate() const;
};

struct Histogram {
  double bin_width = 20e-9;
  double origin = 0.0;
  std::vector<double> counts;  // per herald
  std::size_t heralds = 0;

  double bin_start(std::size_t j) const { return origin + static_cast<double>(j) * bin_width; }
  double bin_center(std::size_t j) const { return bin_start(j) + 0.5 * bin_width; }
};

struct EventStream {
  std::vector<double> herald_times;  // sorted
  std::vector<double> signal_times;  // sorted
};

struct RatioEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

double g2_cross(double eta);
double eta_from_g2(double g2);
double g2_conditional(double eta);

Histogram build_histogram(const std::vector<double>& herald_times,
                          const std::vector<double>& signal_times, double bin_width,
                          double span);

// Mean bin value inside the plateau windows.
double dc_offset(const Histogram& h, const std::vector<WindowSpec>& plateaus);

// Sum of (count - offset) over bins whose centres fall in the window.
double window_sum(const Histogram& h, const WindowSpec& window, double offset = 0.0);

// Ratio of the first peak to an equally wide reference peak; offset = 0 is raw data.
double g2_from_histogram(const Histogram& h, const WindowSpec& first_peak,
                         const WindowSpec& reference_peak, double offset = 0.0);

// Same estimator with a delete-one-block jackknife error over herald blocks.
RatioEstimate g2_cross_estimate(const EventStream& events, double bin_width, double span,
                                const WindowSpec& first_peak,
                                const WindowSpec& reference_peak, double offset = 0.0,
                                int blocks = 20);

// Uniformly sampled intensity trace, either from the solver or a histogram.
struct TimeTrace {
  double origin = 0.0;
  double step = 0.0;
  std::vector<double> values;
};

TimeTrace output_trace(const SimulationRecord& record);
TimeTrace input_trace(const SimulationRecord& record);
TimeTrace histogram_trace(const Histogram& h);

double window_integral(const TimeTrace& trace, const WindowSpec& window, double offset = 0.0);
double window_efficiency(const TimeTrace& trace_a, const WindowSpec& win_a,
                         const TimeTrace& trace_b, const WindowSpec& win_b,
                         double offset = 0.0);

// Time constant of exp(-t / tau) that leaves `efficiency` after hold_duration.
double decay_time(double efficiency, double hold_duration);

// Inverse-CDF sampler for arrival times drawn from |waveform|^2.
class WaveformSampler {
 public:
  explicit WaveformSampler(const InputWaveform& waveform, std::size_t grid = 4096);
  double operator()(double u) const;

 private:
  std::vector<double> t_;
  std::vector<double> cdf_;
};

EventStream monte_carlo_events(const PairSourceModel& model, std::size_t n_repetitions,
                               std::uint64_t seed);

struct ConditionalCounts {
  double heralds = 0.0;
  double herald_arm1 = 0.0;
  double herald_arm2 = 0.0;
  double herald_arm1_arm2 = 0.0;
};

ConditionalCounts conditional_counts(const EventStream& events, std::uint64_t splitter_seed,
                                     double coincidence_window);

double g2_conditional_from_events(const EventStream& events, std::uint64_t splitter_seed,
                                  double coincidence_window);

RatioEstimate g2_conditional_estimate(const EventStream& events, std::uint64_t splitter_seed,
                                      double coincidence_window, int blocks = 20);

void write_events_csv(std::ostream& os, const EventStream& events,
                      const std::vector<std::string>& header = {});
// Throws ConfigError with the offending line number on malformed input.
EventStream read_events_csv(std::istream& is);
void write_histogram_csv(std::ostream& os, const Histogram& h,
                         const std::vector<std::string>& header = {});

}  // namespace qslp
