#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qslp/errors.hpp"
#include "qslp/medium.hpp"

using namespace qslp;

namespace {

constexpr double kPi = std::numbers::pi;
double deg(double d) { return d * kPi / 180.0; }

MixingAngles angles(double theta, double phi) { return {theta, phi}; }

}  // namespace

TEST(MixingAngles, BalancedDrivesGiveFortyFiveDegrees) {
  for (auto conv : {PhiConvention::kAmplitudeRatio, PhiConvention::kIntensityRatio}) {
    const auto a = mixing_angles({angular(3e6), angular(3e6), std::nullopt}, conv);
    EXPECT_NEAR(a.phi, kPi / 4, 1e-15);
    EXPECT_FALSE(a.theta.has_value());
  }
}

TEST(MixingAngles, NoBackwardDriveGivesZero) {
  EXPECT_EQ(mixing_angles({angular(6e6), 0.0, std::nullopt}).phi, 0.0);
}

TEST(MixingAngles, OperatingPointLiteralConvention) {
  const auto a = mixing_angles({angular(6.0e6), angular(4.2e6), std::nullopt});
  // sin^2 = r / (1 + r) for tan^2 = r
  const double r = 4.2 / 6.0;
  const double oracle = std::asin(std::sqrt(r / (1.0 + r)));
  EXPECT_NEAR(a.phi, oracle, 1e-14);
  EXPECT_NEAR(a.phi * 180.0 / kPi, 39.918, 0.001);
}

TEST(MixingAngles, IntensityConventionSquaresTheRatio) {
  const auto a = mixing_angles({angular(6.0e6), angular(4.2e6), std::nullopt},
                               PhiConvention::kIntensityRatio);
  EXPECT_NEAR(std::cos(a.phi), 6.0 / std::hypot(6.0, 4.2), 1e-14);
}

TEST(MixingAngles, ThetaFromCouplingStrength) {
  DriveAmplitudes d{angular(6e6), angular(4.2e6), std::nullopt};
  d.coupling_strength = 3.0 * d.total_squared();
  const auto a = mixing_angles(d);
  ASSERT_TRUE(a.theta.has_value());
  EXPECT_NEAR(std::tan(*a.theta), std::sqrt(3.0), 1e-13);
}

TEST(MixingAngles, AllZeroDrivesRejected) {
  EXPECT_THROW(mixing_angles({0.0, 0.0, std::nullopt}), DomainError);
}

TEST(GroupVelocity, Limits) {
  const double c0 = kSpeedOfLight;
  EXPECT_DOUBLE_EQ(group_velocity(angles(0, 0), c0), c0);
  EXPECT_NEAR(group_velocity(angles(deg(30), kPi / 4), c0), 0.0, 1e-10 * c0);
  EXPECT_NEAR(group_velocity(angles(kPi / 2, 0.3), c0), 0.0, 1e-10 * c0);
}

TEST(GroupVelocity, AntisymmetricAboutFortyFiveDegrees) {
  const double c0 = kSpeedOfLight;
  for (double theta = 0.0; theta <= kPi / 2; theta += 0.05) {
    for (double phi = 0.0; phi <= kPi / 2; phi += 0.01) {
      const double v = group_velocity(angles(theta, phi), c0);
      EXPECT_NEAR(v, -group_velocity(angles(theta, kPi / 2 - phi), c0), 1e-6);
      EXPECT_LE(std::abs(v), c0);
    }
  }
}

TEST(GroupVelocity, BalancedDrivesStopThePolariton) {
  for (double omega : {1e3, angular(1e6), angular(6e6), 1e12}) {
    for (auto conv : {PhiConvention::kAmplitudeRatio, PhiConvention::kIntensityRatio}) {
      DriveAmplitudes d{omega, omega, 7.0 * omega * omega};
      EXPECT_LT(std::abs(group_velocity(mixing_angles(d, conv), kSpeedOfLight)),
                1e-10 * kSpeedOfLight);
    }
  }
}

TEST(Polariton, Examples) {
  auto w = polariton_decomposition(angles(0, 0));
  EXPECT_DOUBLE_EQ(w.forward_photonic_weight, 1.0);
  EXPECT_DOUBLE_EQ(w.backward_photonic_weight, 0.0);
  EXPECT_DOUBLE_EQ(w.atomic_weight, 0.0);
  w = polariton_decomposition(angles(0, kPi / 4));
  EXPECT_NEAR(w.forward_photonic_weight, 0.5, 1e-15);
  EXPECT_NEAR(w.backward_photonic_weight, 0.5, 1e-15);
  w = polariton_decomposition(angles(kPi / 2, 0.4));
  EXPECT_NEAR(w.atomic_weight, 1.0, 1e-15);
  EXPECT_NEAR(w.forward_photonic_weight + w.backward_photonic_weight, 0.0, 1e-15);
}

TEST(Polariton, WeightsSumToOne) {
  for (double theta = 0.0; theta <= kPi / 2; theta += kPi / 97) {
    for (double phi = 0.0; phi <= kPi / 2; phi += kPi / 89) {
      const auto w = polariton_decomposition(angles(theta, phi));
      EXPECT_LT(std::abs(w.forward_photonic_weight + w.backward_photonic_weight +
                         w.atomic_weight - 1.0),
                1e-12);
    }
  }
}

TEST(Polariton, RequiresTheta) {
  EXPECT_THROW(polariton_decomposition(MixingAngles{std::nullopt, 0.1}), DomainError);
}

TEST(PhaseMismatch, Examples) {
  EXPECT_EQ(phase_mismatch({0.0, 795e-9}), 0.0);
  const Geometry g{deg(0.345), 795e-9};
  // independent route: cos(2x) - 1 = -2 sin^2 x
  const double oracle = -2.0 * (2.0 * kPi / 795e-9) * std::pow(std::sin(deg(0.345)), 2);
  EXPECT_NEAR(phase_mismatch(g), oracle, 1e-9 * std::abs(oracle));
  EXPECT_NEAR(phase_mismatch(g), -573.1, 0.05);
  const Geometry perpendicular{deg(89.999999), 795e-9};
  EXPECT_NEAR(phase_mismatch(perpendicular), -2.0 * perpendicular.wavenumber(), 1e-3);
}

TEST(PhaseMismatch, EvenInAngle) {
  for (double a = 0.0; a < 1.5; a += 0.01) {
    EXPECT_DOUBLE_EQ(phase_mismatch({a, 780e-9}), phase_mismatch({-a, 780e-9}));
  }
}

TEST(PhaseMismatch, GeometryValidated) {
  EXPECT_THROW(Geometry({0.0, 0.0}).validate(), ConfigError);
  EXPECT_THROW(Geometry({kPi / 2, 795e-9}).validate(), ConfigError);
}

TEST(PhaseMatching, Residual) {
  EXPECT_EQ(phase_matching_residual(3, 3, 3, 3), 0.0);
  EXPECT_EQ(phase_matching_residual(5, 5, 2, 2), 0.0);
  EXPECT_EQ(phase_matching_residual(10, 0, 3, 0), 7.0);
}

TEST(MediumParams, ValidationNamesTheField) {
  MediumParams m;
  EXPECT_NO_THROW(m.validate());
  m.optical_depth = -1;
  try {
    m.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("od"), std::string::npos);
  }
  m = {};
  m.gamma_gs = -1;
  EXPECT_THROW(m.validate(), ConfigError);
  m = {};
  m.length = 0;
  EXPECT_THROW(m.validate(), ConfigError);
  DriveAmplitudes d;
  d.omega_bwc = -1;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Medium, PaperDefaultsStoredAsAngularFrequencies) {
  const MediumParams m;
  EXPECT_DOUBLE_EQ(m.gamma, 2 * kPi * 5.746e6);
  EXPECT_DOUBLE_EQ(m.gamma_gs, 2 * kPi * 60e3);
  const DriveAmplitudes d;
  EXPECT_DOUBLE_EQ(d.omega_fwc, 2 * kPi * 6.0e6);
  EXPECT_DOUBLE_EQ(d.total_squared(), d.omega_fwc * d.omega_fwc + d.omega_bwc * d.omega_bwc);
}

TEST(Medium, EitGroupDelay) {
  const MediumParams m;
  EXPECT_NEAR(eit_group_delay(m, angular(6e6)), 100 * angular(5.746e6) / std::pow(angular(6e6), 2),
              1e-20);
  EXPECT_NEAR(eit_group_delay(m, angular(6e6)), 2.54e-6, 0.01e-6);
}
