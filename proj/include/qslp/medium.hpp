#pragma once

#include <numbers>
#include <optional>

namespace qslp {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;

// Angular frequency from a frequency quoted in Hz, e.g. angular(6.0e6) for "2pi x 6.0 MHz".
constexpr double angular(double hertz) { return kTwoPi * hertz; }

// Atomic-ensemble constants. Every rate is an angular frequency in rad/s.
struct MediumParams {
  double optical_depth = 100.0;
  double gamma = angular(5.746e6);           // excited-state decay, 87Rb D1
  double gamma_gs = angular(60e3);           // dephasing of the spin wave
  double gamma_gs_prime = angular(60e3);     // dephasing of the cross Raman coherences
  double length = 0.010;                     // m
  double two_photon_detuning = angular(4e6); // BWC red detuning
  double delta_k = 5.0;                      // 1/m
  double light_speed = kSpeedOfLight;

  // Throws ConfigError naming the violated field.
  void validate() const;
};

struct DriveAmplitudes {
  double omega_fwc = angular(6.0e6);
  double omega_bwc = angular(4.2e6);
  std::optional<double> coupling_strength;  // g^2 N, rad^2/s^2

  double total_squared() const { return omega_fwc * omega_fwc + omega_bwc * omega_bwc; }
  void validate() const;
};

struct MixingAngles {
  std::optional<double> theta;  // unset when g^2 N was not supplied
  double phi = 0.0;
};

// tan^2(phi) = Omega_BWC / Omega_FWC (literal) or (Omega_BWC / Omega_FWC)^2.
enum class PhiConvention { kAmplitudeRatio, kIntensityRatio };

struct PolaritonDecomposition {
  double forward_photonic_weight = 0.0;
  double backward_photonic_weight = 0.0;
  double atomic_weight = 0.0;
};

struct Geometry {
  double angle = 0.0;       // rad, between input and coupling beams
  double wavelength = 795e-9;

  double wavenumber() const { return kTwoPi / wavelength; }
  void validate() const;
};

MixingAngles mixing_angles(const DriveAmplitudes& drives,
                           PhiConvention convention = PhiConvention::kAmplitudeRatio);

// v_g = c0 cos^2(theta) cos(2 phi); an unset theta is treated as 0.
double group_velocity(const MixingAngles& angles, double light_speed);

// Requires theta to be set.
PolaritonDecomposition polariton_decomposition(const MixingAngles& angles);

double phase_mismatch(const Geometry& geometry);

double phase_matching_residual(double k_as_forward, double k_fwc, double k_as_backward,
                               double k_bwc);

// Slow-light group delay OD * Gamma / Omega^2 of a single-Lambda EIT medium.
double eit_group_delay(const MediumParams& medium, double omega_coupling);

}  // namespace qslp
