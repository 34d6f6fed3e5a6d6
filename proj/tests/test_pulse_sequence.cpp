#include <cmath>

#include <gtest/gtest.h>

#include "qslp/errors.hpp"
#include "qslp/pulse_sequence.hpp"

using namespace qslp;

namespace {

TimingSequence single(double on, double off, double ramp = 50e-9) {
  return {Channel::kFwc, {{on, off}}, ramp, 12e-6};
}

// Simpson integral of |w|^2 over [0, t_max] with n intervals.
double pulse_energy(const InputWaveform& w, double t_max, int n) {
  const double h = t_max / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double f = std::norm(waveform(w, i * h));
    s += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

}  // namespace

TEST(Envelope, Examples) {
  const auto seq = single(2e-6, 4e-6);
  EXPECT_DOUBLE_EQ(envelope(seq, 3e-6), 1.0);
  EXPECT_DOUBLE_EQ(envelope(seq, 1e-6), 0.0);
  EXPECT_DOUBLE_EQ(envelope(seq, 5e-6), 0.0);
  EXPECT_NEAR(envelope(seq, 2e-6), 0.5, 1e-12);
  EXPECT_NEAR(envelope(seq, 4e-6), 0.5, 1e-12);
}

TEST(Envelope, ReducedModuloPeriod) {
  const auto seq = single(2e-6, 4e-6);
  EXPECT_DOUBLE_EQ(envelope(seq, 15e-6), envelope(seq, 3e-6));
  EXPECT_DOUBLE_EQ(envelope(seq, 13e-6), envelope(seq, 1e-6));
}

TEST(Envelope, ContinuousAndBounded) {
  TimingSequence seq{Channel::kFwc, {{0.0, 2.0e-6}, {4.0e-6, 5.0e-6}, {5.3e-6, 12e-6}}, 50e-9,
                     12e-6};
  const double h = 1e-10;
  double prev = envelope(seq, 0.0);
  // max slope of a raised cosine is pi / (2 ramp)
  const double max_jump = 3.1416 / (2 * 50e-9) * h * 1.01;
  for (double t = h; t < 30e-6; t += h) {
    const double v = envelope(seq, t);
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_LE(std::abs(v - prev), max_jump) << "t = " << t;
    prev = v;
  }
}

TEST(Envelope, AlwaysOnChannelIsOneEverywhere) {
  const auto seq = single(0.0, 12e-6);
  for (double t = 0.0; t < 36e-6; t += 7e-9) EXPECT_NEAR(envelope(seq, t), 1.0, 1e-15);
}

TEST(TimingSequence, Validation) {
  EXPECT_NO_THROW(single(1e-6, 2e-6).validate());
  EXPECT_THROW(single(2e-6, 1e-6).validate(), ConfigError);
  EXPECT_THROW(single(1e-6, 13e-6).validate(), ConfigError);
  EXPECT_THROW(single(1e-6, 1.05e-6).validate(), ConfigError);  // ramp too long
  EXPECT_THROW(single(1e-6, 2e-6, -1.0).validate(), ConfigError);
  TimingSequence overlap{Channel::kFwc, {{1e-6, 3e-6}, {2e-6, 4e-6}}, 50e-9, 12e-6};
  EXPECT_THROW(overlap.validate(), ConfigError);
}

TEST(Waveform, PeakAndHalfMaximum) {
  const InputWaveform w;
  const double peak = std::norm(waveform(w, w.center));
  EXPECT_DOUBLE_EQ(std::abs(waveform(w, w.center)), w.peak_amplitude());
  EXPECT_NEAR(std::norm(waveform(w, w.center + w.fwhm / 2)), 0.5 * peak, 1e-12 * peak);
  EXPECT_NEAR(std::norm(waveform(w, w.center - w.fwhm / 2)), 0.5 * peak, 1e-12 * peak);
  EXPECT_EQ(waveform(w, 0.3e-6).imag(), 0.0);
}

TEST(Waveform, UnitEnergyOnSimulationWindow) {
  const InputWaveform w;
  EXPECT_NEAR(pulse_energy(w, 12e-6, 12000), 1.0, 1e-6);
}

TEST(Waveform, EnergyInvariantUnderGridRefinement) {
  const InputWaveform w;
  const double coarse = pulse_energy(w, 12e-6, 12000);
  const double fine = pulse_energy(w, 12e-6, 24000);
  EXPECT_LT(std::abs(fine - coarse), 1e-6);
}

TEST(Waveform, CumulativeEnergy) {
  const InputWaveform w;
  EXPECT_NEAR(w.cumulative_energy(w.center), 0.5, 1e-12);
  const double t99 = w.time_at_energy_fraction(0.99);
  EXPECT_NEAR(w.cumulative_energy(t99), 0.99, 1e-9);
  // 99 % point of a Gaussian sits 2.3263 sigma past the centre
  EXPECT_NEAR(t99 - w.center, 2.3263479 * w.intensity_sigma(), 1e-11);
  EXPECT_THROW(w.time_at_energy_fraction(1.5), DomainError);
}

TEST(Waveform, Validation) {
  InputWaveform w;
  w.fwhm = 0.0;
  EXPECT_THROW(w.validate(), ConfigError);
}

TEST(StandardSequence, SlowLight) {
  const auto m = standard_sequence(Scenario::kSlowLight, {}, {});
  ASSERT_EQ(m.at(Channel::kFwc).intervals.size(), 1u);
  EXPECT_EQ(m.at(Channel::kFwc).intervals[0].t_on, 0.0);
  EXPECT_EQ(m.at(Channel::kFwc).intervals[0].t_off, 12e-6);
  EXPECT_TRUE(m.count(Channel::kBwc) == 0 || m.at(Channel::kBwc).intervals.empty());
}

TEST(StandardSequence, EitMemoryHasTwoMicrosecondGap) {
  const InputWaveform in;
  const auto m = standard_sequence(Scenario::kEitMemory, in, {});
  const auto& iv = m.at(Channel::kFwc).intervals;
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_NEAR(iv[1].t_on - iv[0].t_off, 2e-6, 1e-15);
  EXPECT_NEAR(in.cumulative_energy(iv[0].t_off), 0.99, 1e-9);
  EXPECT_TRUE(m.count(Channel::kBwc) == 0 || m.at(Channel::kBwc).intervals.empty());
}

TEST(StandardSequence, QslpAddsOneMicrosecondOfBwcAtRelease) {
  const auto m = standard_sequence(Scenario::kEitPlusQslp, {}, {});
  const auto& fwc = m.at(Channel::kFwc).intervals;
  const auto& bwc = m.at(Channel::kBwc).intervals;
  ASSERT_EQ(bwc.size(), 1u);
  EXPECT_DOUBLE_EQ(bwc[0].t_on, fwc[1].t_on);
  EXPECT_NEAR(bwc[0].t_off - bwc[0].t_on, 1e-6, 1e-15);
}

TEST(StandardSequence, BothDrivesFullyOnDuringHold) {
  const auto m = standard_sequence(Scenario::kEitPlusQslp, {}, {});
  const auto& bwc = m.at(Channel::kBwc);
  const double ramp = bwc.ramp_time;
  for (double t = bwc.intervals[0].t_on + ramp; t <= bwc.intervals[0].t_off - ramp;
       t += 1e-9) {
    ASSERT_DOUBLE_EQ(envelope(m.at(Channel::kFwc), t), 1.0);
    ASSERT_DOUBLE_EQ(envelope(bwc, t), 1.0);
  }
}

TEST(StandardSequence, InstantsFollowTheEnergyThreshold) {
  SequenceTiming timing;
  timing.storage_threshold = 0.9;
  const InputWaveform in;
  const auto inst = schedule_instants(Scenario::kEitPlusQslp, in, timing);
  EXPECT_NEAR(in.cumulative_energy(inst.storage), 0.9, 1e-9);
  EXPECT_NEAR(inst.release - inst.storage, 2e-6, 1e-15);
  EXPECT_NEAR(inst.qslp_end - inst.release, 1e-6, 1e-15);
}

TEST(Scenario, Names) {
  for (auto s : {Scenario::kSlowLight, Scenario::kEitMemory, Scenario::kEitPlusQslp}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
  EXPECT_THROW(parse_scenario("eit_qslp_memory"), ConfigError);
}
