#include "qslp/medium.hpp"

#include <cmath>
#include <string>

#include "qslp/errors.hpp"

namespace qslp {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invariant violated: ") + what);
}

}  // namespace

void MediumParams::validate() const {
  require(std::isfinite(optical_depth) && optical_depth > 0.0, "medium.od > 0");
  require(std::isfinite(gamma) && gamma > 0.0, "medium.gamma > 0");
  require(std::isfinite(gamma_gs) && gamma_gs >= 0.0, "medium.gamma_gs >= 0");
  require(std::isfinite(gamma_gs_prime) && gamma_gs_prime >= 0.0,
          "medium.gamma_gs_prime >= 0");
  require(std::isfinite(length) && length > 0.0, "medium.length > 0");
  require(std::isfinite(two_photon_detuning), "medium.delta finite");
  require(std::isfinite(delta_k), "medium.delta_k finite");
  require(std::isfinite(light_speed) && light_speed > 0.0, "medium.c0 > 0");
}

void DriveAmplitudes::validate() const {
  require(std::isfinite(omega_fwc) && omega_fwc >= 0.0, "drives.omega_fwc >= 0");
  require(std::isfinite(omega_bwc) && omega_bwc >= 0.0, "drives.omega_bwc >= 0");
  if (coupling_strength) {
    require(std::isfinite(*coupling_strength) && *coupling_strength >= 0.0,
            "drives.coupling_strength >= 0");
  }
}

void Geometry::validate() const {
  require(std::isfinite(wavelength) && wavelength > 0.0, "geometry.wavelength > 0");
  require(std::isfinite(angle) && std::abs(angle) < std::numbers::pi / 2,
          "|geometry.angle| < pi/2");
}

MixingAngles mixing_angles(const DriveAmplitudes& drives, PhiConvention convention) {
  if (!(drives.omega_fwc >= 0.0 && drives.omega_bwc >= 0.0) ||
      drives.omega_fwc + drives.omega_bwc <= 0.0) {
    throw DomainError("mixing_angles: drive amplitudes must be nonnegative and not all zero");
  }
  MixingAngles angles;
  // atan2 keeps Omega_FWC = 0 well defined (phi = 90 deg).
  const double ratio_num = convention == PhiConvention::kAmplitudeRatio
                               ? drives.omega_bwc
                               : drives.omega_bwc * drives.omega_bwc;
  const double ratio_den = convention == PhiConvention::kAmplitudeRatio
                               ? drives.omega_fwc
                               : drives.omega_fwc * drives.omega_fwc;
  angles.phi = std::atan2(std::sqrt(ratio_num), std::sqrt(ratio_den));
  if (drives.coupling_strength) {
    const double omega_sq = drives.total_squared();
    if (!(omega_sq > 0.0)) throw DomainError("mixing_angles: Omega^2 must be positive");
    angles.theta = std::atan(std::sqrt(*drives.coupling_strength / omega_sq));
  }
  return angles;
}

double group_velocity(const MixingAngles& angles, double light_speed) {
  const double c = std::cos(angles.theta.value_or(0.0));
  return light_speed * c * c * std::cos(2.0 * angles.phi);
}

PolaritonDecomposition polariton_decomposition(const MixingAngles& angles) {
  if (!angles.theta) {
    throw DomainError("polariton_decomposition: theta requires drives.coupling_strength");
  }
  const double ct = std::cos(*angles.theta);
  const double st = std::sin(*angles.theta);
  const double fwd = std::cos(angles.phi) * ct;
  const double bwd = std::sin(angles.phi) * ct;
  return {fwd * fwd, bwd * bwd, st * st};
}

double phase_mismatch(const Geometry& geometry) {
  return geometry.wavenumber() * (std::cos(2.0 * geometry.angle) - 1.0);
}

double phase_matching_residual(double k_as_forward, double k_fwc, double k_as_backward,
                               double k_bwc) {
  return (k_as_forward - k_fwc) - (k_as_backward - k_bwc);
}

double eit_group_delay(const MediumParams& medium, double omega_coupling) {
  if (!(omega_coupling > 0.0)) throw DomainError("eit_group_delay: coupling must be > 0");
  return medium.optical_depth * medium.gamma / (omega_coupling * omega_coupling);
}

}  // namespace qslp
