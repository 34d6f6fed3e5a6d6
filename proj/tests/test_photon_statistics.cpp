#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "qslp/errors.hpp"
#include "qslp/photon_statistics.hpp"

using namespace qslp;

namespace {

constexpr double kPeriod = 12e-6;
const WindowSpec kFirst = windows::kFirstPeak;
const WindowSpec kReference{8 * kPeriod, 8 * kPeriod + kFirst.t_end};

std::vector<WindowSpec> plateaus() {
  std::vector<WindowSpec> p;
  for (int k = 0; k < 8; ++k) p.push_back({k * kPeriod + 4e-6, (k + 1) * kPeriod - 0.5e-6});
  return p;
}

Histogram flat(double value, std::size_t bins = 100) {
  Histogram h;
  h.bin_width = 10e-9;
  h.counts.assign(bins, value);
  h.heralds = 1;
  return h;
}

}  // namespace

TEST(ClosedForms, CrossCorrelation) {
  EXPECT_NEAR(g2_cross(1.0 - 1e-12), 2.0, 1e-11);
  EXPECT_DOUBLE_EQ(g2_cross(0.1), 11.0);
  EXPECT_NEAR(g2_cross(0.09881), 11.12, 0.005);
  EXPECT_THROW(g2_cross(0.0), DomainError);
  EXPECT_THROW(g2_cross(-0.2), DomainError);
}

TEST(ClosedForms, EtaFromG2) {
  EXPECT_DOUBLE_EQ(eta_from_g2(2.0), 1.0);
  EXPECT_DOUBLE_EQ(eta_from_g2(11.0), 0.1);
  EXPECT_NEAR(eta_from_g2(11.12), 0.09881, 5e-6);
  EXPECT_THROW(eta_from_g2(1.0), DomainError);
  EXPECT_THROW(eta_from_g2(0.5), DomainError);
}

TEST(ClosedForms, RoundTrip) {
  for (double eta = 0.001; eta < 0.999; eta += 0.0007) {
    ASSERT_NEAR(eta_from_g2(g2_cross(eta)), eta, 1e-12);
  }
}

TEST(ClosedForms, ConditionalAutoCorrelation) {
  EXPECT_EQ(g2_conditional(0.0), 0.0);
  EXPECT_DOUBLE_EQ(g2_conditional(1.0), 1.5);
  EXPECT_NEAR(g2_conditional(eta_from_g2(11.12)), 0.3435, 5e-5);
  EXPECT_NEAR(g2_conditional(0.9), 2 * 0.9 * 2.9 / (1.9 * 1.9), 1e-15);
}

TEST(ClosedForms, ConditionalIsMonotoneAndBelowTwo) {
  double prev = -1.0;
  for (double eta = 0.0; eta < 1e3; eta = eta * 1.01 + 1e-4) {
    const double g = g2_conditional(eta);
    ASSERT_GT(g, prev);
    ASSERT_LT(g, 2.0);
    prev = g;
  }
}

TEST(ClosedForms, SubPoissonianBoundary) {
  const double edge = std::sqrt(2.0) - 1.0;
  for (double eta = 0.0; eta < 3.0; eta += 1e-4) {
    if (std::abs(eta - edge) < 1e-9) continue;
    ASSERT_EQ(g2_conditional(eta) < 1.0, eta < edge) << eta;
  }
}

TEST(ClosedForms, PaperSourceIsNonclassical) {
  EXPECT_GT(g2_cross(0.0988), 2.0);
}

TEST(Histogram, SingleEvent) {
  const auto h = build_histogram({0.0}, {0.5e-6}, 0.1e-6, 1e-6);
  ASSERT_EQ(h.counts.size(), 10u);
  for (std::size_t j = 0; j < h.counts.size(); ++j) EXPECT_EQ(h.counts[j], j == 5 ? 1.0 : 0.0);
}

TEST(Histogram, NoSignals) {
  const auto h = build_histogram({0.0, 1.0}, {}, 0.1e-6, 1e-6);
  for (double c : h.counts) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(h.heralds, 2u);
}

TEST(Histogram, EmptyHeraldsRejected) {
  EXPECT_THROW(build_histogram({}, {1.0}, 1e-8, 1e-6), DomainError);
}

TEST(Histogram, TotalEqualsInSpanPairs) {
  PairSourceModel m;
  m.eta = 0.3;
  m.noise_floor = 1e-3;
  const auto ev = monte_carlo_events(m, 20000, 11);
  const double span = 30e-6;
  const auto h = build_histogram(ev.herald_times, ev.signal_times, 20e-9, span);
  std::size_t pairs = 0;
  for (double hd : ev.herald_times) {
    for (double s : ev.signal_times) pairs += (s >= hd && s - hd < span) ? 1 : 0;
  }
  const double total = std::accumulate(h.counts.begin(), h.counts.end(), 0.0) *
                       static_cast<double>(h.heralds);
  EXPECT_NEAR(total, static_cast<double>(pairs), 1e-6);
  for (double c : h.counts) ASSERT_GE(c, 0.0);
}

TEST(Histogram, CsvRoundTripShape) {
  const auto h = build_histogram({0.0}, {0.5e-6}, 0.1e-6, 1e-6);
  std::ostringstream os;
  write_histogram_csv(os, h, {"a = 1"});
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("# a = 1\n", 0), 0u);
  EXPECT_NE(text.find("bin_start_s,normalized_count\n"), std::string::npos);
}

TEST(DcOffset, Examples) {
  EXPECT_DOUBLE_EQ(dc_offset(flat(0.25), {{0.0, 0.5e-6}}), 0.25);
  EXPECT_EQ(dc_offset(flat(0.0), {{0.0, 0.5e-6}}), 0.0);
  auto h = flat(0.03);
  for (std::size_t j = 10; j < 20; ++j) h.counts[j] += 5.0;
  EXPECT_NEAR(dc_offset(h, {{0.3e-6, 0.6e-6}, {0.7e-6, 0.9e-6}}), 0.03, 1e-15);
  EXPECT_THROW(dc_offset(h, {{2e-6, 3e-6}}), DomainError);
}

TEST(G2FromHistogram, Arithmetic) {
  auto h = flat(0.0, 40);
  EXPECT_THROW(g2_from_histogram(h, {0, 100e-9}, {200e-9, 300e-9}), DegenerateStatisticsError);
  h.counts[2] = 22.24;
  h.counts[22] = 2.0;
  EXPECT_DOUBLE_EQ(g2_from_histogram(h, {0, 100e-9}, {0, 100e-9}), 1.0);
  EXPECT_NEAR(g2_from_histogram(h, {0, 100e-9}, {200e-9, 300e-9}), 11.12, 1e-12);
  EXPECT_THROW(g2_from_histogram(h, {0, 100e-9}, {200e-9, 350e-9}), DomainError);
}

TEST(WindowEfficiency, Examples) {
  TimeTrace b{0.0, 10e-9, {}};
  for (int i = 0; i < 1000; ++i) b.values.push_back(std::exp(-std::pow((i - 300) / 40.0, 2)));
  TimeTrace a = b;
  for (auto& v : a.values) v = 0.0;
  for (int i = 0; i + 150 < 1000; ++i) a.values[i + 150] = 0.478 * b.values[i];
  EXPECT_DOUBLE_EQ(window_efficiency(b, {0, 9e-6}, b, {0, 9e-6}), 1.0);
  EXPECT_NEAR(window_efficiency(a, {1.5e-6, 9.5e-6}, b, {0.0, 8e-6}), 0.478, 1e-9);
  TimeTrace zero{0.0, 10e-9, std::vector<double>(1000, 0.0)};
  EXPECT_THROW(window_efficiency(a, {0, 1e-6}, zero, {0, 1e-6}), DegenerateStatisticsError);
  EXPECT_THROW(window_integral(b, {0, 20e-6}), DomainError);
}

TEST(DecayTime, Examples) {
  EXPECT_NEAR(decay_time(std::exp(-1.0), 1e-6), 1e-6, 1e-18);
  EXPECT_NEAR(decay_time(0.478, 1e-6), 1.3548e-6, 0.0001e-6);
  EXPECT_NEAR(decay_time(0.478 * 0.478, 2e-6), decay_time(0.478, 1e-6), 1e-18);
  EXPECT_THROW(decay_time(0.0, 1e-6), DomainError);
  EXPECT_THROW(decay_time(1.0, 1e-6), DomainError);
  EXPECT_THROW(decay_time(0.5, 0.0), DomainError);
}

TEST(Sampler, ReproducesWaveformMoments) {
  const InputWaveform w;
  const WaveformSampler s(w);
  double m1 = 0.0, m2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double t = s((i + 0.5) / n);
    m1 += t;
    m2 += t * t;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, w.center, 1e-9);
  EXPECT_NEAR(std::sqrt(m2 - m1 * m1), w.intensity_sigma(), 2e-9);
}

TEST(MonteCarlo, NoPairsWithoutEta) {
  PairSourceModel m;
  m.eta = 0.0;
  auto ev = monte_carlo_events(m, 1000, 3);
  EXPECT_TRUE(ev.herald_times.empty());
  EXPECT_TRUE(ev.signal_times.empty());
  m.noise_floor = 1e-4;
  ev = monte_carlo_events(m, 1000, 3);
  EXPECT_TRUE(ev.herald_times.empty());
  // Poisson mean 0.06 per repetition
  EXPECT_NEAR(static_cast<double>(ev.signal_times.size()), 60.0, 4 * std::sqrt(60.0));
}

TEST(MonteCarlo, GeometricPairLaw) {
  PairSourceModel m;
  m.eta = 0.5;
  const std::size_t n = 200000;
  const auto ev = monte_carlo_events(m, n, 5);
  std::map<std::size_t, std::size_t> per_rep;
  for (double t : ev.herald_times) ++per_rep[static_cast<std::size_t>(std::lround(t / kPeriod))];
  std::vector<double> freq(3, 0.0);
  freq[0] = static_cast<double>(n - per_rep.size());
  for (const auto& [rep, k] : per_rep) {
    if (k < 3) freq[k] += 1.0;
  }
  for (int k = 0; k < 3; ++k) {
    const double p = 0.5 * std::pow(0.5, k);
    const double sigma = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(freq[k] / n, p, 3 * sigma) << "n = " << k;
  }
}

TEST(MonteCarlo, DeterministicPerSeed) {
  PairSourceModel m;
  m.noise_floor = 1e-3;
  m.jitter = 1e-9;
  const auto a = monte_carlo_events(m, 150000, 42);
  const auto b = monte_carlo_events(m, 150000, 42);
  const auto c = monte_carlo_events(m, 150000, 43);
  EXPECT_EQ(a.herald_times, b.herald_times);
  EXPECT_EQ(a.signal_times, b.signal_times);
  EXPECT_NE(a.signal_times, c.signal_times);
}

TEST(MonteCarlo, CrossCorrelationClosedLoop) {
  PairSourceModel m;
  m.eta = 0.1;
  const auto ev = monte_carlo_events(m, 1'000'000, 17);
  const auto h = build_histogram(ev.herald_times, ev.signal_times, 20e-9, kReference.t_end);
  const auto est = g2_cross_estimate(ev, 20e-9, kReference.t_end, kFirst, kReference);
  EXPECT_DOUBLE_EQ(est.value, g2_from_histogram(h, kFirst, kReference));
  EXPECT_GT(est.standard_error, 0.0);
  EXPECT_NEAR(est.value, 11.0, 3 * est.standard_error);
}

TEST(MonteCarlo, EstimatorIsUnbiasedAcrossSeeds) {
  PairSourceModel m;
  m.eta = 0.1;
  std::vector<double> values;
  for (std::uint64_t seed = 100; seed < 112; ++seed) {
    const auto ev = monte_carlo_events(m, 200000, seed);
    values.push_back(g2_cross_estimate(ev, 20e-9, kReference.t_end, kFirst, kReference).value);
  }
  const double k = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / k;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sem = std::sqrt(ss / (k - 1) / k);
  EXPECT_LT(std::abs(mean - g2_cross(0.1)), 3 * sem);
}

TEST(MonteCarlo, NoiseFloorDilutesRawG2) {
  PairSourceModel m;
  m.eta = 0.0988;
  m.noise_floor = 2e-4;
  const auto ev = monte_carlo_events(m, 500000, 23);
  const auto h = build_histogram(ev.herald_times, ev.signal_times, 20e-9, kReference.t_end);
  const double offset = dc_offset(h, plateaus());
  EXPECT_NEAR(offset, 2e-4, 2e-5);
  const double raw = g2_from_histogram(h, kFirst, kReference);
  const double subtracted = g2_from_histogram(h, kFirst, kReference, offset);
  EXPECT_LT(raw, subtracted);
  EXPECT_NEAR(subtracted, g2_cross(0.0988), 1.0);
}

TEST(Conditional, OneSignalPerHeraldHasNoTriples) {
  EventStream ev;
  for (int k = 0; k < 1000; ++k) {
    ev.herald_times.push_back(k * kPeriod);
    ev.signal_times.push_back(k * kPeriod + 1e-6);
  }
  EXPECT_EQ(g2_conditional_from_events(ev, 9, 3.5e-6), 0.0);
}

TEST(Conditional, EmptyArmIsDegenerate) {
  EventStream ev{{0.0}, {1e-6}};
  EXPECT_THROW(g2_conditional_from_events(ev, 1, 3.5e-6), DegenerateStatisticsError);
  EXPECT_THROW(g2_conditional_from_events(EventStream{}, 1, 3.5e-6), DomainError);
}

TEST(Conditional, ClosedLoopAtPaperEta) {
  PairSourceModel m;
  m.eta = 0.0988;
  const auto ev = monte_carlo_events(m, 1'000'000, 29);
  const auto est = g2_conditional_estimate(ev, 7, 3.5e-6);
  EXPECT_DOUBLE_EQ(est.value, g2_conditional_from_events(ev, 7, 3.5e-6));
  EXPECT_NEAR(est.value, g2_conditional(0.0988), 3 * est.standard_error);
}

TEST(Conditional, ClosedLoopThermalStream) {
  PairSourceModel m;
  m.eta = 0.9;
  const auto ev = monte_carlo_events(m, 100000, 31);
  const auto est = g2_conditional_estimate(ev, 7, 3.5e-6);
  EXPECT_NEAR(est.value, 1.446, 3 * est.standard_error + 5e-4);
}

TEST(Conditional, EfficienciesCancel) {
  PairSourceModel m;
  m.eta = 0.2;
  m.herald_efficiency = 0.5;
  m.signal_efficiency = 0.3;
  const auto ev = monte_carlo_events(m, 1'000'000, 37);
  const auto est = g2_conditional_estimate(ev, 7, 3.5e-6);
  EXPECT_NEAR(est.value, g2_conditional(0.2), 3 * est.standard_error);
}

TEST(EventsCsv, RoundTrip) {
  PairSourceModel m;
  m.noise_floor = 1e-3;
  const auto ev = monte_carlo_events(m, 5000, 2);
  std::stringstream ss;
  write_events_csv(ss, ev, {"run.seed = 2"});
  const auto back = read_events_csv(ss);
  EXPECT_EQ(back.herald_times, ev.herald_times);
  EXPECT_EQ(back.signal_times, ev.signal_times);
}

TEST(EventsCsv, MalformedLineNamed) {
  std::istringstream is("# c\nchannel,time_s\nherald,0\nsignal,abc\n");
  try {
    read_events_csv(is);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}
