#include "qslp/photon_statistics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qslp/errors.hpp"
#include "qslp/mbe_solver.hpp"

namespace qslp {

void WindowSpec::validate() const {
  if (!(std::isfinite(t_start) && std::isfinite(t_end) && t_end > t_start)) {
    throw ConfigError(fmt::format("invariant violated: window t_end > t_start ({} .. {})",
                                  t_start, t_end));
  }
}

void PairSourceModel::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(eta >= 0.0 && eta < 1.0)) throw ConfigError("invariant violated: source.eta in [0, 1)");
  if (!unit(herald_efficiency)) {
    throw ConfigError("invariant violated: source.herald_efficiency in [0, 1]");
  }
  if (!unit(signal_efficiency)) {
    throw ConfigError("invariant violated: source.signal_efficiency in [0, 1]");
  }
  if (!(noise_floor >= 0.0 && std::isfinite(noise_floor))) {
    throw ConfigError("invariant violated: source.noise_floor >= 0");
  }
  if (!(noise_bin_width > 0.0)) {
    throw ConfigError("invariant violated: source.noise_bin_width > 0");
  }
  if (!(repetition_period > 0.0)) throw ConfigError("invariant violated: source.period > 0");
  if (!(jitter >= 0.0)) throw ConfigError("invariant violated: source.jitter >= 0");
  waveform.validate();
}

double g2_cross(double eta) {
  if (!(eta > 0.0)) throw DomainError("g2_cross: eta must be > 0");
  return 1.0 + 1.0 / eta;
}

double eta_from_g2(double g2) {
  if (!(g2 > 1.0)) throw DomainError("eta_from_g2: g2 must be > 1");
  return 1.0 / (g2 - 1.0);
}

double g2_conditional(double eta) {
  if (!(eta >= 0.0)) throw DomainError("g2_conditional: eta must be >= 0");
  return 2.0 * eta * (eta + 2.0) / ((eta + 1.0) * (eta + 1.0));
}

namespace {

const std::vector<double>& sorted_view(const std::vector<double>& v, std::vector<double>& tmp) {
  if (std::is_sorted(v.begin(), v.end())) return v;
  tmp = v;
  std::sort(tmp.begin(), tmp.end());
  return tmp;
}

// Raw pair counts for heralds [first, last) against sorted signals.
std::vector<double> pair_counts(const std::vector<double>& heralds, std::size_t first,
                                std::size_t last, const std::vector<double>& signals,
                                double bin_width, std::size_t bins) {
  std::vector<double> counts(bins, 0.0);
  const double span = bin_width * static_cast<double>(bins);
  for (std::size_t i = first; i < last; ++i) {
    const double h = heralds[i];
    auto it = std::lower_bound(signals.begin(), signals.end(), h);
    for (; it != signals.end() && *it - h < span; ++it) {
      const auto j = static_cast<std::size_t>((*it - h) / bin_width);
      if (j < bins) counts[j] += 1.0;
    }
  }
  return counts;
}

std::size_t bin_count(double bin_width, double span) {
  if (!(bin_width > 0.0)) throw DomainError("histogram bin_width must be > 0");
  if (!(span > 0.0)) throw DomainError("histogram span must be > 0");
  return static_cast<std::size_t>(std::ceil(span / bin_width - 1e-9));
}

std::vector<std::size_t> bins_in(const Histogram& h, const WindowSpec& w) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    const double c = h.bin_center(j);
    if (c >= w.t_start && c < w.t_end) out.push_back(j);
  }
  return out;
}

double jackknife_error(const std::vector<double>& leave_one_out) {
  const auto k = static_cast<double>(leave_one_out.size());
  if (k < 2) return 0.0;
  double mean = 0.0;
  for (double v : leave_one_out) mean += v;
  mean /= k;
  double ss = 0.0;
  for (double v : leave_one_out) ss += (v - mean) * (v - mean);
  return std::sqrt((k - 1.0) / k * ss);
}

std::vector<std::size_t> block_edges(std::size_t n, int blocks) {
  const auto k = static_cast<std::size_t>(std::max(1, blocks));
  std::vector<std::size_t> edges(k + 1);
  for (std::size_t b = 0; b <= k; ++b) edges[b] = n * b / k;
  return edges;
}

}  // namespace

Histogram build_histogram(const std::vector<double>& herald_times,
                          const std::vector<double>& signal_times, double bin_width,
                          double span) {
  if (herald_times.empty()) throw DomainError("build_histogram: no herald events");
  const std::size_t bins = bin_count(bin_width, span);
  std::vector<double> tmp;
  const auto& signals = sorted_view(signal_times, tmp);
  Histogram h;
  h.bin_width = bin_width;
  h.heralds = herald_times.size();
  h.counts = pair_counts(herald_times, 0, herald_times.size(), signals, bin_width, bins);
  const double norm = 1.0 / static_cast<double>(h.heralds);
  for (double& c : h.counts) c *= norm;
  return h;
}

double dc_offset(const Histogram& h, const std::vector<WindowSpec>& plateaus) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : plateaus) {
    w.validate();
    for (std::size_t j : bins_in(h, w)) {
      sum += h.counts[j];
      ++n;
    }
  }
  if (n == 0) throw DomainError("dc_offset: plateau windows cover no bins");
  return sum / static_cast<double>(n);
}

double window_sum(const Histogram& h, const WindowSpec& window, double offset) {
  window.validate();
  double sum = 0.0;
  for (std::size_t j : bins_in(h, window)) sum += h.counts[j] - offset;
  return sum;
}

namespace {

void check_equal_windows(const Histogram& h, const WindowSpec& a, const WindowSpec& b) {
  a.validate();
  b.validate();
  const double tol = 1e-9 * std::max(a.width(), b.width());
  if (std::abs(a.width() - b.width()) > tol || bins_in(h, a).size() != bins_in(h, b).size()) {
    throw DomainError("g2 windows must have the same temporal width");
  }
}

}  // namespace

double g2_from_histogram(const Histogram& h, const WindowSpec& first_peak,
                         const WindowSpec& reference_peak, double offset) {
  check_equal_windows(h, first_peak, reference_peak);
  const double reference = window_sum(h, reference_peak, offset);
  if (!(reference > 0.0)) {
    throw DegenerateStatisticsError("g2_from_histogram: reference peak sum is not positive");
  }
  return window_sum(h, first_peak, offset) / reference;
}

RatioEstimate g2_cross_estimate(const EventStream& events, double bin_width, double span,
                                const WindowSpec& first_peak,
                                const WindowSpec& reference_peak, double offset,
                                int blocks) {
  const Histogram pooled =
      build_histogram(events.herald_times, events.signal_times, bin_width, span);
  RatioEstimate est;
  est.value = g2_from_histogram(pooled, first_peak, reference_peak, offset);

  std::vector<double> tmp;
  const auto& signals = sorted_view(events.signal_times, tmp);
  const auto first_bins = bins_in(pooled, first_peak);
  const auto ref_bins = bins_in(pooled, reference_peak);
  const auto edges = block_edges(events.herald_times.size(), blocks);
  std::vector<double> a(edges.size() - 1), b(edges.size() - 1);
  double total_a = 0.0, total_b = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const auto counts = pair_counts(events.herald_times, edges[k], edges[k + 1], signals,
                                    bin_width, pooled.counts.size());
    const double heralds = static_cast<double>(edges[k + 1] - edges[k]);
    for (std::size_t j : first_bins) a[k] += counts[j] - offset * heralds;
    for (std::size_t j : ref_bins) b[k] += counts[j] - offset * heralds;
    total_a += a[k];
    total_b += b[k];
  }
  std::vector<double> loo;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (total_b - b[k] > 0.0) loo.push_back((total_a - a[k]) / (total_b - b[k]));
  }
  est.standard_error = jackknife_error(loo);
  return est;
}

TimeTrace output_trace(const SimulationRecord& record) {
  TimeTrace tr{record.t.empty() ? 0.0 : record.t.front(), record.dt_record, {}};
  for (const auto& e : record.e_plus_out) tr.values.push_back(std::norm(e));
  return tr;
}

TimeTrace input_trace(const SimulationRecord& record) {
  TimeTrace tr{record.t.empty() ? 0.0 : record.t.front(), record.dt_record, {}};
  for (const auto& e : record.e_plus_in) tr.values.push_back(std::norm(e));
  return tr;
}

TimeTrace histogram_trace(const Histogram& h) {
  return {h.origin + 0.5 * h.bin_width, h.bin_width, h.counts};
}

double window_integral(const TimeTrace& trace, const WindowSpec& window, double offset) {
  window.validate();
  if (trace.values.empty()) throw DomainError("window_integral: empty trace");
  const double first = trace.origin;
  const double last = trace.origin + trace.step * static_cast<double>(trace.values.size() - 1);
  const double slack = 0.5 * trace.step;
  if (window.t_start < first - slack || window.t_end > last + slack) {
    throw DomainError(fmt::format("window [{:.6g}, {:.6g}] s lies outside the trace span "
                                  "[{:.6g}, {:.6g}] s",
                                  window.t_start, window.t_end, first, last));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    const double t = trace.origin + trace.step * static_cast<double>(i);
    if (t >= window.t_start && t < window.t_end) sum += trace.values[i] - offset;
  }
  return sum * trace.step;
}

double window_efficiency(const TimeTrace& trace_a, const WindowSpec& win_a,
                         const TimeTrace& trace_b, const WindowSpec& win_b, double offset) {
  const double denominator = window_integral(trace_b, win_b, offset);
  if (denominator == 0.0) {
    throw DegenerateStatisticsError("window_efficiency: zero denominator");
  }
  return window_integral(trace_a, win_a, offset) / denominator;
}

double decay_time(double efficiency, double hold_duration) {
  if (!(efficiency > 0.0 && efficiency < 1.0)) {
    throw DomainError("decay_time: efficiency must lie in (0, 1)");
  }
  if (!(hold_duration > 0.0)) throw DomainError("decay_time: hold duration must be > 0");
  return -hold_duration / std::log(efficiency);
}

WaveformSampler::WaveformSampler(const InputWaveform& waveform, std::size_t grid) {
  waveform.validate();
  const double s = waveform.intensity_sigma();
  const double lo = waveform.center - 10.0 * s;
  const double hi = waveform.center + 10.0 * s;
  t_.resize(grid);
  cdf_.resize(grid);
  double previous = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    t_[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    const double intensity = std::norm(qslp::waveform(waveform, t_[i]));
    cdf_[i] = i == 0 ? 0.0 : cdf_[i - 1] + 0.5 * (previous + intensity) * (t_[i] - t_[i - 1]);
    previous = intensity;
  }
  const double total = cdf_.back();
  for (double& c : cdf_) c /= total;
}

double WaveformSampler::operator()(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.begin()) return t_.front();
  if (it == cdf_.end()) return t_.back();
  const auto i = static_cast<std::size_t>(it - cdf_.begin());
  const double span = cdf_[i] - cdf_[i - 1];
  const double frac = span > 0.0 ? (u - cdf_[i - 1]) / span : 0.0;
  return t_[i - 1] + frac * (t_[i] - t_[i - 1]);
}

namespace {

constexpr std::size_t kRepetitionsPerChunk = 1 << 16;

EventStream generate_chunk(const PairSourceModel& model, const WaveformSampler& sampler,
                           std::size_t first_rep, std::size_t last_rep, std::uint64_t seed,
                           std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::geometric_distribution<long> pairs(1.0 - model.eta);
  std::bernoulli_distribution herald_hit(model.herald_efficiency);
  std::bernoulli_distribution signal_hit(model.signal_efficiency);
  std::normal_distribution<double> blur(0.0, model.jitter > 0.0 ? model.jitter : 1.0);
  const double noise_mean =
      model.noise_floor / model.noise_bin_width * model.repetition_period;
  std::poisson_distribution<long> noise(noise_mean > 0.0 ? noise_mean : 1.0);
  auto jitter = [&] { return model.jitter > 0.0 ? blur(rng) : 0.0; };

  EventStream out;
  for (std::size_t rep = first_rep; rep < last_rep; ++rep) {
    const double offset = static_cast<double>(rep) * model.repetition_period;
    const long n = model.eta > 0.0 ? pairs(rng) : 0;
    for (long p = 0; p < n; ++p) {
      if (herald_hit(rng)) out.herald_times.push_back(offset + jitter());
      if (signal_hit(rng)) out.signal_times.push_back(offset + sampler(uniform(rng)) + jitter());
    }
    if (noise_mean > 0.0) {
      const long k = noise(rng);
      for (long i = 0; i < k; ++i) {
        out.signal_times.push_back(offset + model.repetition_period * uniform(rng));
      }
    }
  }
  return out;
}

}  // namespace

EventStream monte_carlo_events(const PairSourceModel& model, std::size_t n_repetitions,
                               std::uint64_t seed) {
  model.validate();
  if (n_repetitions == 0) throw DomainError("monte_carlo_events: need at least one repetition");
  const WaveformSampler sampler(model.waveform);
  // Fixed-size chunks with their own sub-seeds, so the stream does not
  // depend on how many workers generate it.
  std::vector<std::future<EventStream>> parts;
  for (std::size_t first = 0, chunk = 0; first < n_repetitions;
       first += kRepetitionsPerChunk, ++chunk) {
    const std::size_t last = std::min(n_repetitions, first + kRepetitionsPerChunk);
    parts.push_back(std::async(std::launch::async, generate_chunk, std::cref(model),
                               std::cref(sampler), first, last, seed, chunk));
  }
  EventStream all;
  for (auto& f : parts) {
    EventStream part = f.get();
    all.herald_times.insert(all.herald_times.end(), part.herald_times.begin(),
                            part.herald_times.end());
    all.signal_times.insert(all.signal_times.end(), part.signal_times.begin(),
                            part.signal_times.end());
  }
  std::sort(all.herald_times.begin(), all.herald_times.end());
  std::sort(all.signal_times.begin(), all.signal_times.end());
  return all;
}

namespace {

struct ArmPrefix {
  std::vector<double> signals;
  std::vector<std::size_t> arm1;  // prefix counts
  std::vector<std::size_t> arm2;
};

ArmPrefix split_arms(const EventStream& events, std::uint64_t splitter_seed) {
  ArmPrefix p;
  std::vector<double> tmp;
  p.signals = sorted_view(events.signal_times, tmp);
  std::mt19937_64 rng(splitter_seed);
  std::bernoulli_distribution to_arm1(0.5);
  p.arm1.assign(p.signals.size() + 1, 0);
  p.arm2.assign(p.signals.size() + 1, 0);
  for (std::size_t i = 0; i < p.signals.size(); ++i) {
    const bool first = to_arm1(rng);
    p.arm1[i + 1] = p.arm1[i] + (first ? 1 : 0);
    p.arm2[i + 1] = p.arm2[i] + (first ? 0 : 1);
  }
  return p;
}

ConditionalCounts count_range(const EventStream& events, const ArmPrefix& arms,
                              std::size_t first, std::size_t last, double window) {
  ConditionalCounts c;
  for (std::size_t i = first; i < last; ++i) {
    const double h = events.herald_times[i];
    const auto lo = static_cast<std::size_t>(
        std::lower_bound(arms.signals.begin(), arms.signals.end(), h) - arms.signals.begin());
    const auto hi = static_cast<std::size_t>(
        std::lower_bound(arms.signals.begin(), arms.signals.end(), h + window) -
        arms.signals.begin());
    const auto n1 = static_cast<double>(arms.arm1[hi] - arms.arm1[lo]);
    const auto n2 = static_cast<double>(arms.arm2[hi] - arms.arm2[lo]);
    c.heralds += 1.0;
    c.herald_arm1 += n1;
    c.herald_arm2 += n2;
    c.herald_arm1_arm2 += n1 * n2;
  }
  return c;
}

double conditional_ratio(const ConditionalCounts& c) {
  if (!(c.herald_arm1 > 0.0) || !(c.herald_arm2 > 0.0)) {
    throw DegenerateStatisticsError("conditional g2: no heralded singles in one arm");
  }
  return c.heralds * c.herald_arm1_arm2 / (c.herald_arm1 * c.herald_arm2);
}

}  // namespace

ConditionalCounts conditional_counts(const EventStream& events, std::uint64_t splitter_seed,
                                     double coincidence_window) {
  if (events.herald_times.empty() || events.signal_times.empty()) {
    throw DomainError("conditional g2: empty event stream");
  }
  if (!(coincidence_window > 0.0)) throw DomainError("coincidence window must be > 0");
  const ArmPrefix arms = split_arms(events, splitter_seed);
  return count_range(events, arms, 0, events.herald_times.size(), coincidence_window);
}

double g2_conditional_from_events(const EventStream& events, std::uint64_t splitter_seed,
                                  double coincidence_window) {
  return conditional_ratio(conditional_counts(events, splitter_seed, coincidence_window));
}

RatioEstimate g2_conditional_estimate(const EventStream& events, std::uint64_t splitter_seed,
                                      double coincidence_window, int blocks) {
  if (events.herald_times.empty() || events.signal_times.empty()) {
    throw DomainError("conditional g2: empty event stream");
  }
  if (!(coincidence_window > 0.0)) throw DomainError("coincidence window must be > 0");
  const ArmPrefix arms = split_arms(events, splitter_seed);
  const auto edges = block_edges(events.herald_times.size(), blocks);
  std::vector<ConditionalCounts> parts;
  ConditionalCounts total;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    parts.push_back(count_range(events, arms, edges[k], edges[k + 1], coincidence_window));
    total.heralds += parts.back().heralds;
    total.herald_arm1 += parts.back().herald_arm1;
    total.herald_arm2 += parts.back().herald_arm2;
    total.herald_arm1_arm2 += parts.back().herald_arm1_arm2;
  }
  RatioEstimate est;
  est.value = conditional_ratio(total);
  std::vector<double> loo;
  for (const auto& p : parts) {
    ConditionalCounts rest{total.heralds - p.heralds, total.herald_arm1 - p.herald_arm1,
                           total.herald_arm2 - p.herald_arm2,
                           total.herald_arm1_arm2 - p.herald_arm1_arm2};
    if (rest.herald_arm1 > 0.0 && rest.herald_arm2 > 0.0) loo.push_back(conditional_ratio(rest));
  }
  est.standard_error = jackknife_error(loo);
  return est;
}

void write_events_csv(std::ostream& os, const EventStream& events,
                      const std::vector<std::string>& header) {
  for (const auto& line : header) fmt::print(os, "# {}\n", line);
  os << "channel,time_s\n";
  // Merge by time so the file reads as a detector log.
  std::size_t i = 0, j = 0;
  const auto& h = events.herald_times;
  const auto& s = events.signal_times;
  while (i < h.size() || j < s.size()) {
    if (j >= s.size() || (i < h.size() && h[i] <= s[j])) {
      fmt::print(os, "herald,{:.17g}\n", h[i++]);
    } else {
      fmt::print(os, "signal,{:.17g}\n", s[j++]);
    }
  }
}

EventStream read_events_csv(std::istream& is) {
  EventStream events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#' || line == "channel,time_s") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError(fmt::format("events line {}: expected 'channel,time_s'", line_no));
    }
    const std::string channel = line.substr(0, comma);
    double t = 0.0;
    std::istringstream num(line.substr(comma + 1));
    if (!(num >> t) || !std::isfinite(t)) {
      throw ConfigError(fmt::format("events line {}: malformed time value", line_no));
    }
    if (channel == "herald") {
      events.herald_times.push_back(t);
    } else if (channel == "signal") {
      events.signal_times.push_back(t);
    } else {
      throw ConfigError(fmt::format("events line {}: unknown channel '{}'", line_no, channel));
    }
  }
  std::sort(events.herald_times.begin(), events.herald_times.end());
  std::sort(events.signal_times.begin(), events.signal_times.end());
  return events;
}

void write_histogram_csv(std::ostream& os, const Histogram& h,
                         const std::vector<std::string>& header) {
  for (const auto& line : header) fmt::print(os, "# {}\n", line);
  fmt::print(os, "# heralds = {}\n# bin_width_s = {:.17g}\n", h.heralds, h.bin_width);
  os << "bin_start_s,normalized_count\n";
  for (std::size_t j = 0; j < h.counts.size(); ++j) {
    fmt::print(os, "{:.17g},{:.17g}\n", h.bin_start(j), h.counts[j]);
  }
}

}  // namespace qslp
