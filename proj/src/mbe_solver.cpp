#include "qslp/mbe_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qslp/errors.hpp"

namespace qslp {

namespace {

constexpr cplx kI{0.0, 1.0};

// Order used by the RK4 stage vector.
enum Var { kEgPlus, kEgMinus, kSgPm, kSgMp, kSg0, kVarCount };
using AtomVec = std::array<cplx, kVarCount>;

struct LocalDrive {
  double fwc;
  double bwc;
};

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

double drive_envelope(const SolverConfig& cfg, Channel channel, double t) {
  const auto it = cfg.sequences.find(channel);
  return it == cfg.sequences.end() ? 0.0 : envelope(it->second, t);
}

}  // namespace

double SolverConfig::max_stable_dt() const {
  const double fastest = std::max({medium.gamma, drives.omega_fwc, drives.omega_bwc,
                                   std::abs(medium.two_photon_detuning)});
  return 1.0 / (10.0 * fastest);
}

int SolverConfig::record_stride() const {
  return std::max(1, static_cast<int>(std::lround(dt_record / dt)));
}

long SolverConfig::total_steps() const { return std::lround(t_max / dt); }

void SolverConfig::validate() const {
  medium.validate();
  drives.validate();
  input.validate();
  timing.validate();
  if (nz < 50) throw ConfigError("invariant violated: solver.nz >= 50");
  if (!(std::isfinite(dt) && dt > 0.0)) throw ConfigError("invariant violated: solver.dt > 0");
  if (!(std::isfinite(t_max) && t_max > 0.0)) {
    throw ConfigError("invariant violated: solver.t_max > 0");
  }
  if (!(std::isfinite(dt_record) && dt_record >= dt)) {
    throw ConfigError("invariant violated: solver.dt_record >= solver.dt");
  }
  if (!std::isfinite(input_scale)) throw ConfigError("invariant violated: input.scale finite");
  const double guard = max_stable_dt();
  if (dt > guard * (1.0 + 1e-12)) {
    throw ConfigError(fmt::format(
        "invariant violated: stiffness guard dt <= 1/(10 max(Gamma, Omega_FWC, Omega_BWC, "
        "|delta|)) = {:.6g} s, got dt = {:.6g} s",
        guard, dt));
  }
  for (const auto& [channel, seq] : sequences) seq.validate();
}

SystemState SystemState::zero(int nz) {
  const std::vector<cplx> z(static_cast<std::size_t>(nz), cplx{});
  return {0.0, z, z, z, z, z, z, z};
}

Energies energies(const SystemState& state, double dz) {
  Energies e;
  for (std::size_t j = 0; j < state.size(); ++j) {
    e.photonic += std::norm(state.e_plus[j]) + std::norm(state.e_minus[j]);
    e.spin += std::norm(state.rho_sg_0[j]);
    e.higher_coherence += std::norm(state.rho_sg_pm[j]) + std::norm(state.rho_sg_mp[j]);
  }
  e.photonic *= dz;
  e.spin *= dz;
  e.higher_coherence *= dz;
  return e;
}

NumericalError::NumericalError(double t, std::size_t z_index, std::string variable,
                               SystemState last_valid)
    : std::runtime_error(fmt::format("non-finite {} at t = {:.9g} s, z index {}", variable, t,
                                     z_index)),
      time_(t),
      z_index_(z_index),
      variable_(std::move(variable)),
      last_valid_(std::move(last_valid)) {}

MbeIntegrator::MbeIntegrator(const SolverConfig& cfg)
    : cfg_(cfg),
      gamma_(cfg.medium.gamma),
      dtau_(cfg.dt * cfg.medium.gamma),
      half_od_(0.5 * cfg.medium.optical_depth),
      dzeta_(1.0 / (cfg.nz - 1)),
      dk_(cfg.medium.delta_k * cfg.medium.length),
      dephase_(cfg.medium.gamma_gs / cfg.medium.gamma),
      dephase_prime_(cfg.medium.gamma_gs_prime / cfg.medium.gamma),
      detuning_(cfg.medium.two_photon_detuning / cfg.medium.gamma),
      omega_fwc_(cfg.drives.omega_fwc / cfg.medium.gamma),
      omega_bwc_(cfg.drives.omega_bwc / cfg.medium.gamma) {}

SystemState MbeIntegrator::initial_state() const {
  SystemState s = SystemState::zero(cfg_.nz);
  solve_fields(s);
  return s;
}

void MbeIntegrator::advance(SystemState& state) const {
  const SystemState previous = state;
  const double t = state.t;
  const std::array<LocalDrive, 3> drive = {{
      {omega_fwc_ * drive_envelope(cfg_, Channel::kFwc, t),
       omega_bwc_ * drive_envelope(cfg_, Channel::kBwc, t)},
      {omega_fwc_ * drive_envelope(cfg_, Channel::kFwc, t + 0.5 * cfg_.dt),
       omega_bwc_ * drive_envelope(cfg_, Channel::kBwc, t + 0.5 * cfg_.dt)},
      {omega_fwc_ * drive_envelope(cfg_, Channel::kFwc, t + cfg_.dt),
       omega_bwc_ * drive_envelope(cfg_, Channel::kBwc, t + cfg_.dt)},
  }};
  const double inv_gamma = 1.0 / gamma_;
  const cplx decay_eg_minus{0.5, -detuning_};
  const cplx decay_pm{dephase_prime_, -detuning_};
  const cplx decay_mp{dephase_prime_, detuning_};

  for (std::size_t j = 0; j < state.size(); ++j) {
    const cplx ep = state.e_plus[j] * inv_gamma;
    const cplx em = state.e_minus[j] * inv_gamma;
    auto rhs = [&](const AtomVec& y, const LocalDrive& d) {
      AtomVec f;
      f[kEgPlus] = 0.5 * kI * ep + 0.5 * kI * (y[kSg0] * d.fwc + y[kSgMp] * d.bwc) -
                   0.5 * y[kEgPlus];
      f[kEgMinus] = 0.5 * kI * em + 0.5 * kI * (y[kSg0] * d.bwc + y[kSgPm] * d.fwc) -
                    decay_eg_minus * y[kEgMinus];
      f[kSgPm] = 0.5 * kI * d.fwc * y[kEgMinus] - decay_pm * y[kSgPm];
      f[kSgMp] = 0.5 * kI * d.bwc * y[kEgPlus] - decay_mp * y[kSgMp];
      f[kSg0] = 0.5 * kI * (d.fwc * y[kEgPlus] + d.bwc * y[kEgMinus]) - dephase_ * y[kSg0];
      return f;
    };
    auto axpy = [](const AtomVec& y, double a, const AtomVec& k) {
      AtomVec r;
      for (int v = 0; v < kVarCount; ++v) r[v] = y[v] + a * k[v];
      return r;
    };
    const AtomVec y0 = {state.rho_eg_plus[j], state.rho_eg_minus[j], state.rho_sg_pm[j],
                        state.rho_sg_mp[j], state.rho_sg_0[j]};
    const AtomVec k1 = rhs(y0, drive[0]);
    const AtomVec k2 = rhs(axpy(y0, 0.5 * dtau_, k1), drive[1]);
    const AtomVec k3 = rhs(axpy(y0, 0.5 * dtau_, k2), drive[1]);
    const AtomVec k4 = rhs(axpy(y0, dtau_, k3), drive[2]);
    AtomVec y1;
    for (int v = 0; v < kVarCount; ++v) {
      y1[v] = y0[v] + (dtau_ / 6.0) * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]);
    }
    state.rho_eg_plus[j] = y1[kEgPlus];
    state.rho_eg_minus[j] = y1[kEgMinus];
    state.rho_sg_pm[j] = y1[kSgPm];
    state.rho_sg_mp[j] = y1[kSgMp];
    state.rho_sg_0[j] = y1[kSg0];
  }
  state.t = t + cfg_.dt;
  solve_fields(state);
  check_finite(state, previous);
}

void MbeIntegrator::solve_fields(SystemState& state) const {
  const std::size_t n = state.size();
  // Forward sweep, dE+/dz = i OD Gamma/(2L) rho+_eg, trapezoidal in z.
  const cplx coupling = kI * half_od_ * 0.5 * dzeta_;
  cplx e = cfg_.input_scale * waveform(cfg_.input, state.t) / gamma_;
  state.e_plus[0] = e * gamma_;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    e += coupling * (state.rho_eg_plus[j] + state.rho_eg_plus[j + 1]);
    state.e_plus[j + 1] = e * gamma_;
  }
  // Backward sweep from E-(L) = 0, dE-/dz = i dk E- - i OD Gamma/(2L) rho-_eg.
  const cplx lead{1.0, -0.5 * dk_ * dzeta_};
  const cplx trail{1.0, 0.5 * dk_ * dzeta_};
  e = 0.0;
  state.e_minus[n - 1] = 0.0;
  for (std::size_t j = n - 1; j > 0; --j) {
    e = (lead * e + coupling * (state.rho_eg_minus[j - 1] + state.rho_eg_minus[j])) / trail;
    state.e_minus[j - 1] = e * gamma_;
  }
}

void MbeIntegrator::check_finite(const SystemState& state, const SystemState& previous) const {
  const std::array<std::pair<const char*, const std::vector<cplx>*>, 7> arrays = {{
      {"E_plus", &state.e_plus},
      {"E_minus", &state.e_minus},
      {"rho_eg_plus", &state.rho_eg_plus},
      {"rho_eg_minus", &state.rho_eg_minus},
      {"rho_sg_pm", &state.rho_sg_pm},
      {"rho_sg_mp", &state.rho_sg_mp},
      {"rho_sg_0", &state.rho_sg_0},
  }};
  for (const auto& [name, values] : arrays) {
    for (std::size_t j = 0; j < values->size(); ++j) {
      const cplx v = (*values)[j];
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NumericalError(state.t, j, name, previous);
      }
    }
  }
}

SystemState step(const SystemState& state, const SolverConfig& cfg) {
  if (state.size() != static_cast<std::size_t>(cfg.nz)) {
    throw ConfigError("state grid does not match solver.nz");
  }
  SystemState next = state;
  MbeIntegrator(cfg).advance(next);
  return next;
}

std::vector<std::pair<std::string, std::string>> describe(const SolverConfig& cfg) {
  return {
      {"solver.nz", fmt::format("{}", cfg.nz)},
      {"solver.dt", fmt_num(cfg.dt)},
      {"solver.t_max", fmt_num(cfg.t_max)},
      {"solver.dt_record", fmt_num(cfg.dt_record)},
      {"solver.storage_threshold", fmt_num(cfg.timing.storage_threshold)},
      {"solver.storage_duration", fmt_num(cfg.timing.storage_duration)},
      {"solver.qslp_duration", fmt_num(cfg.timing.qslp_duration)},
      {"solver.ramp_time", fmt_num(cfg.timing.ramp_time)},
      {"solver.period", fmt_num(cfg.timing.period)},
      {"medium.od", fmt_num(cfg.medium.optical_depth)},
      {"medium.gamma", fmt_num(cfg.medium.gamma)},
      {"medium.gamma_gs", fmt_num(cfg.medium.gamma_gs)},
      {"medium.gamma_gs_prime", fmt_num(cfg.medium.gamma_gs_prime)},
      {"medium.length", fmt_num(cfg.medium.length)},
      {"medium.delta", fmt_num(cfg.medium.two_photon_detuning)},
      {"medium.delta_k", fmt_num(cfg.medium.delta_k)},
      {"medium.c0", fmt_num(cfg.medium.light_speed)},
      {"drives.omega_fwc", fmt_num(cfg.drives.omega_fwc)},
      {"drives.omega_bwc", fmt_num(cfg.drives.omega_bwc)},
      {"input.t0", fmt_num(cfg.input.center)},
      {"input.fwhm", fmt_num(cfg.input.fwhm)},
      {"input.scale", fmt_num(cfg.input_scale)},
  };
}

SimulationRecord simulate(const SolverConfig& cfg, const std::string& scenario_label) {
  cfg.validate();
  const MbeIntegrator integrator(cfg);
  SystemState state = integrator.initial_state();
  const double dz = cfg.dz();
  const int stride = cfg.record_stride();
  const long steps = cfg.total_steps();

  SimulationRecord rec;
  rec.scenario = scenario_label;
  rec.nz = cfg.nz;
  rec.dz = dz;
  rec.dt = cfg.dt;
  rec.dt_record = stride * cfg.dt;
  rec.metadata = describe(cfg);
  rec.metadata.emplace_back("field_model", "quasi-static (c0^-1 d/dt dropped)");
  const std::size_t expected = static_cast<std::size_t>(steps / stride) + 1;
  rec.t.reserve(expected);

  auto sample = [&](const SystemState& s) {
    const Energies en = energies(s, dz);
    rec.t.push_back(s.t);
    rec.e_plus_out.push_back(s.e_plus.back());
    rec.e_minus_out.push_back(s.e_minus.front());
    rec.e_plus_in.push_back(s.e_plus.front());
    rec.photonic_energy.push_back(en.photonic);
    rec.spin_energy.push_back(en.spin);
    rec.higher_coherence_energy.push_back(en.higher_coherence);
  };

  sample(state);
  for (long n = 1; n <= steps; ++n) {
    integrator.advance(state);
    if (n % stride == 0) sample(state);
  }
  return rec;
}

SimulationRecord run(SolverConfig cfg, Scenario scenario) {
  cfg.timing.validate();
  cfg.input.validate();
  cfg.sequences = standard_sequence(scenario, cfg.input, cfg.timing);
  const ScheduleInstants instants = schedule_instants(scenario, cfg.input, cfg.timing);
  if (cfg.t_max < instants.last_edge + 0.5 * cfg.timing.ramp_time) {
    throw ConfigError(fmt::format(
        "solver.t_max = {:.6g} s is shorter than the {} sequence span {:.6g} s", cfg.t_max,
        to_string(scenario), instants.last_edge + 0.5 * cfg.timing.ramp_time));
  }
  SimulationRecord rec = simulate(cfg, std::string(to_string(scenario)));
  rec.instants = instants;
  rec.metadata.emplace_back("scenario", rec.scenario);
  rec.metadata.emplace_back("storage_instant", fmt_num(instants.storage));
  rec.metadata.emplace_back("release_instant", fmt_num(instants.release));
  rec.metadata.emplace_back("qslp_end_instant", fmt_num(instants.qslp_end));
  return rec;
}

namespace {

double trapezoid(const std::vector<double>& t, const std::vector<double>& y, double from,
                 double to) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i] >= from && t[i + 1] <= to) sum += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
  }
  return sum;
}

std::vector<double> intensity(const std::vector<cplx>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](cplx c) { return std::norm(c); });
  return out;
}

}  // namespace

double output_energy(const SimulationRecord& record, double t_from, double t_to) {
  return trapezoid(record.t, intensity(record.e_plus_out), t_from, t_to);
}

double input_energy(const SimulationRecord& record) {
  return trapezoid(record.t, intensity(record.e_plus_in), -1e300, 1e300);
}

double peak_time(const SimulationRecord& record, double t_from, double t_to) {
  const std::vector<double> y = intensity(record.e_plus_out);
  std::size_t best = y.size();
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (record.t[i] < t_from || record.t[i] > t_to) continue;
    if (best == y.size() || y[i] > y[best]) best = i;
  }
  if (best == y.size() || !(y[best] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  if (best == 0 || best + 1 >= y.size()) return record.t[best];
  const double a = y[best - 1], b = y[best], c = y[best + 1];
  const double denom = a - 2.0 * b + c;
  const double h = record.t[best + 1] - record.t[best];
  const double offset = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return record.t[best] + std::clamp(offset, -0.5, 0.5) * h;
}

ConvergenceReport convergence_check(const SolverConfig& cfg, Scenario scenario,
                                    double energy_tolerance, double peak_tolerance) {
  SolverConfig fine = cfg;
  fine.dt = 0.5 * cfg.dt;
  fine.nz = 2 * (cfg.nz - 1) + 1;
  ConvergenceReport r;
  r.energy_tolerance = energy_tolerance;
  r.peak_tolerance = peak_tolerance;
  SimulationRecord base, refined;
  try {
    base = run(cfg, scenario);
    refined = run(fine, scenario);
  } catch (const NumericalError& e) {
    // a grid that blows up is as unconverged as it gets
    r.relative_energy_change = std::numeric_limits<double>::infinity();
    r.peak_time_shift = std::numeric_limits<double>::infinity();
    r.converged = false;
    r.failure = e.what();
    return r;
  }
  const double from = base.instants.release;
  r.base_energy = output_energy(base, from);
  r.refined_energy = output_energy(refined, from);
  const double scale = std::max(std::abs(r.base_energy), std::abs(r.refined_energy));
  r.relative_energy_change = scale > 0.0 ? std::abs(r.refined_energy - r.base_energy) / scale
                                         : 0.0;
  r.base_peak_time = peak_time(base, from);
  r.refined_peak_time = peak_time(refined, from);
  r.peak_time_shift = (std::isnan(r.base_peak_time) && std::isnan(r.refined_peak_time))
                          ? 0.0
                          : std::abs(r.refined_peak_time - r.base_peak_time);
  r.converged = r.relative_energy_change < energy_tolerance &&
                r.peak_time_shift < peak_tolerance;  // NaN shift compares false
  return r;
}

void write_csv(std::ostream& os, const SimulationRecord& record,
               const std::vector<std::string>& extra_header) {
  for (const auto& line : extra_header) fmt::print(os, "# {}\n", line);
  for (const auto& [key, value] : record.metadata) fmt::print(os, "# {} = {}\n", key, value);
  os << "t_s,re_Eplus_out,im_Eplus_out,re_Eminus_out,im_Eminus_out,photonic_energy,"
        "spin_energy,higher_coherence_energy\n";
  for (std::size_t i = 0; i < record.size(); ++i) {
    fmt::print(os, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
               record.t[i], record.e_plus_out[i].real(), record.e_plus_out[i].imag(),
               record.e_minus_out[i].real(), record.e_minus_out[i].imag(),
               record.photonic_energy[i], record.spin_energy[i],
               record.higher_coherence_energy[i]);
  }
}

}  // namespace qslp
