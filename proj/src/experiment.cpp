#include "qslp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "qslp/errors.hpp"

namespace qslp {

namespace {

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

double max_intensity(const SimulationRecord& r, double from, double to) {
  double best = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r.t[i] >= from && r.t[i] <= to) best = std::max(best, std::norm(r.e_plus_out[i]));
  }
  return best;
}

WindowSpec whole_record(const SimulationRecord& r) { return {r.t.front(), r.t.back()}; }

std::vector<double> hold_energy(const SimulationRecord& r) {
  std::vector<double> y(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) y[i] = r.photonic_energy[i] + r.spin_energy[i];
  return y;
}

std::vector<Metric> eit_metrics(const SimulationRecord& eit, double release_window) {
  const WindowSpec release{eit.instants.release, eit.instants.release + release_window};
  const double efficiency = window_efficiency(output_trace(eit), release, input_trace(eit),
                                              whole_record(eit));
  return {
      {"efficiency", efficiency, "1", {release}, "released energy / input energy"},
      {"peak_time", peak_time(eit, release.t_start, release.t_end), "s", {release}, ""},
      {"release_peak_intensity", max_intensity(eit, release.t_start, release.t_end),
       "rad^2/s^2", {release}, "max |E+(L,t)|^2"},
      {"storage_instant", eit.instants.storage, "s", {}, ""},
      {"release_instant", eit.instants.release, "s", {}, ""},
  };
}

std::vector<Metric> qslp_metrics(const SimulationRecord& eit, const SimulationRecord& qslp,
                                 double release_window) {
  const WindowSpec eit_release{eit.instants.release, eit.instants.release + release_window};
  const WindowSpec release{qslp.instants.qslp_end, qslp.instants.qslp_end + release_window};
  const WindowSpec hold{qslp.instants.release, qslp.instants.qslp_end};
  const double hold_length = hold.width();
  const WindowSpec hold_core{hold.t_start + 0.1 * hold_length, hold.t_end - 0.1 * hold_length};

  const double efficiency = window_efficiency(output_trace(qslp), release, input_trace(qslp),
                                              whole_record(qslp));
  const double relative =
      window_efficiency(output_trace(qslp), release, output_trace(eit), eit_release);
  const TraceComparison cmp = compare_traces(eit, qslp);
  const double reference_peak = max_intensity(eit, eit_release.t_start, eit_release.t_end);
  const double suppression =
      reference_peak > 0.0 ? max_intensity(qslp, hold.t_start, hold.t_end) / reference_peak
                           : nan();
  double leakage = 0.0;
  std::size_t samples = 0;
  for (std::size_t i = 0; i < qslp.size(); ++i) {
    if (qslp.t[i] >= hold.t_start && qslp.t[i] <= hold.t_end) {
      leakage += std::norm(qslp.e_plus_out[i]);
      ++samples;
    }
  }
  leakage = reference_peak > 0.0 && samples > 0 ? leakage / samples / reference_peak : nan();
  const double tau_fit = fit_decay_time(qslp.t, hold_energy(qslp), hold_core);
  const double tau_release =
      relative > 0.0 && relative < 1.0 ? decay_time(relative, hold_length) : nan();
  return {
      {"efficiency", efficiency, "1", {release}, "released energy / input energy"},
      {"relative_release", relative, "1", {release, eit_release},
       "QSLP release / EIT-memory release"},
      {"peak_delay", cmp.delay, "s", {release, eit_release},
       "peak arrival relative to EIT memory"},
      {"suppression_ratio", suppression, "1", {hold, eit_release},
       "max |E+(L,t)|^2 during the hold / EIT-memory release peak"},
      {"hold_leakage", leakage, "1", {hold, eit_release},
       "mean |E+(L,t)|^2 during the hold / EIT-memory release peak"},
      {"hold_decay_time", tau_fit, "s", {hold_core},
       "exponential fit to photonic + spin energy"},
      {"decay_time_from_release", tau_release, "s", {release, eit_release},
       "-hold / ln(relative_release)"},
      {"storage_instant", qslp.instants.storage, "s", {}, ""},
      {"release_instant", qslp.instants.release, "s", {}, ""},
      {"qslp_end_instant", qslp.instants.qslp_end, "s", {}, ""},
  };
}

std::vector<Metric> slow_light_metrics(const SimulationRecord& rec) {
  const WindowSpec all = whole_record(rec);
  auto centroid = [&](const TimeTrace& tr) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < tr.values.size(); ++i) {
      const double t = tr.origin + tr.step * static_cast<double>(i);
      m0 += tr.values[i];
      m1 += tr.values[i] * t;
    }
    return m0 > 0.0 ? m1 / m0 : nan();
  };
  const TimeTrace out = output_trace(rec);
  const TimeTrace in = input_trace(rec);
  return {
      {"transmission", window_efficiency(out, all, in, all), "1", {all}, ""},
      {"group_delay", centroid(out) - centroid(in), "s", {all}, "intensity centroid shift"},
      {"peak_time", peak_time(rec), "s", {all}, ""},
  };
}

const std::map<std::string_view, std::string_view>& scenario_aliases() {
  static const std::map<std::string_view, std::string_view> aliases = {
      {"fig3a", "fig3a_eit_memory"}, {"fig3a_eit_memory", "fig3a_eit_memory"},
      {"fig3b", "fig3b_eit_qslp"},   {"fig3b_eit_qslp", "fig3b_eit_qslp"},
      {"fig4", "fig4_statistics"},   {"fig4_statistics", "fig4_statistics"},
  };
  return aliases;
}

nlohmann::json number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

void write_record(const std::filesystem::path& path, const SimulationRecord& rec,
                  const std::vector<std::string>& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  write_csv(os, rec, header);
}

}  // namespace

const Metric& ScenarioReport::metric(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.name == name) return m;
  }
  throw std::out_of_range("no metric named " + std::string(name));
}

std::string ScenarioReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["metrics"] = nlohmann::ordered_json::array();
  for (const auto& m : metrics) {
    nlohmann::ordered_json jm;
    jm["name"] = m.name;
    jm["value"] = number(m.value);
    jm["unit"] = m.unit;
    jm["windows_s"] = nlohmann::ordered_json::array();
    for (const auto& w : m.windows) jm["windows_s"].push_back({w.t_start, w.t_end});
    if (!m.note.empty()) jm["note"] = m.note;
    j["metrics"].push_back(jm);
  }
  j["notes"] = notes;
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const ScenarioReport& report,
                  const std::vector<std::string>& header) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  for (const auto& line : header) os << "# " << line << '\n';
  os << report.to_json();
}

TraceComparison compare_traces(const SimulationRecord& a, const SimulationRecord& b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("compare_traces: empty record");
  if (std::abs(a.dt_record - b.dt_record) > 1e-9 * a.dt_record) {
    throw DomainError("compare_traces: records use different sampling steps");
  }
  const double pa = peak_time(a, a.instants.release);
  const double pb = peak_time(b, b.instants.release);
  if (std::isnan(pa) || std::isnan(pb)) {
    throw DegenerateStatisticsError("compare_traces: flat trace has no peak");
  }
  const double ea = output_energy(a, a.instants.release);
  const double eb = output_energy(b, b.instants.release);
  return {pb - pa, eb / ea};
}

double fit_decay_time(const std::vector<double>& t, const std::vector<double>& y,
                      const WindowSpec& window) {
  window.validate();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (t[i] < window.t_start || t[i] > window.t_end || !(y[i] > 0.0)) continue;
    const double x = t[i] - window.t_start;
    const double ly = std::log(y[i]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    ++n;
  }
  if (n < 2) throw DegenerateStatisticsError("fit_decay_time: fewer than two positive samples");
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  if (!(denom > 0.0)) throw DegenerateStatisticsError("fit_decay_time: degenerate time axis");
  const double slope = (dn * sxy - sx * sy) / denom;
  return slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
}

std::vector<Metric> scenario_metrics(Scenario scenario, const SolverConfig& cfg,
                                     double release_window) {
  switch (scenario) {
    case Scenario::kSlowLight:
      return slow_light_metrics(run(cfg, scenario));
    case Scenario::kEitMemory:
      return eit_metrics(run(cfg, scenario), release_window);
    case Scenario::kEitPlusQslp:
      return qslp_metrics(run(cfg, Scenario::kEitMemory), run(cfg, scenario), release_window);
  }
  throw ConfigError("unknown scenario");
}

namespace {

ScenarioReport fig4_report(const ExperimentSetup& setup, const std::filesystem::path& out_dir) {
  ScenarioReport report;
  const PairSourceModel& model = setup.source;
  model.validate();
  const double eta = model.eta;
  const double period = model.repetition_period;

  // Flat transmissions from the solver traces.
  const SimulationRecord ref = run(setup.solver, Scenario::kEitMemory);
  const double t_eit = eit_metrics(ref, setup.release_window).front().value;
  const SimulationRecord held = run(setup.solver, Scenario::kEitPlusQslp);
  const double t_qslp = qslp_metrics(ref, held, setup.release_window).front().value;

  const double g2c = g2_cross(eta);
  const double g2cond = g2_conditional(eta);
  report.metrics.push_back({"eta", eta, "1", {}, "pair-number parameter of the source"});
  report.metrics.push_back({"g2_cross_predicted", g2c, "1", {}, "1 + 1/eta"});
  report.metrics.push_back(
      {"g2_conditional_predicted", g2cond, "1", {}, "2 eta (eta + 2) / (eta + 1)^2"});
  report.metrics.push_back({"transmission_eit_memory", t_eit, "1", {}, "from the solver"});
  report.metrics.push_back({"transmission_eit_qslp", t_qslp, "1", {}, "from the solver"});

  // A flat loss scales true and accidental coincidences alike; only the
  // constant background changes the raw ratio.
  const WindowSpec first = windows::kFirstPeak;
  const double per_herald_true = model.signal_efficiency * (1.0 + eta) / (1.0 - eta);
  const double per_herald_accidental = model.signal_efficiency * eta / (1.0 - eta);
  const double noise = model.noise_floor * first.width() / model.noise_bin_width;
  auto raw = [&](double transmission) {
    return (transmission * per_herald_true + noise) /
           (transmission * per_herald_accidental + noise);
  };
  report.metrics.push_back({"g2_cross_raw_predicted_source", raw(1.0), "1", {first}, ""});
  report.metrics.push_back({"g2_cross_raw_predicted_eit_memory", raw(t_eit), "1", {first}, ""});
  report.metrics.push_back({"g2_cross_raw_predicted_eit_qslp", raw(t_qslp), "1", {first}, ""});
  report.metrics.push_back({"g2_conditional_predicted_after_loss", g2cond, "1", {},
                            "flat loss leaves the conditional g2 unchanged"});

  // Closed loop through the event pipeline.
  const EventStream events = monte_carlo_events(model, setup.repetitions, setup.seed);
  const int reference_index = 8;
  const WindowSpec reference{reference_index * period + first.t_start,
                             reference_index * period + first.t_end};
  const double span = reference.t_end;
  std::vector<WindowSpec> plateaus;
  for (int k = 0; k < reference_index; ++k) {
    plateaus.push_back({k * period + first.t_end + 0.5e-6, (k + 1) * period - 0.5e-6});
  }
  const Histogram hist =
      build_histogram(events.herald_times, events.signal_times, setup.bin_width, span);
  const double offset = dc_offset(hist, plateaus);
  const RatioEstimate raw_est =
      g2_cross_estimate(events, setup.bin_width, span, first, reference, 0.0);
  const RatioEstimate sub_est =
      g2_cross_estimate(events, setup.bin_width, span, first, reference, offset);
  const RatioEstimate cond_est =
      g2_conditional_estimate(events, setup.seed ^ 0x9e3779b97f4a7c15ULL, first.t_end);
  report.metrics.push_back({"mc_heralds", static_cast<double>(events.herald_times.size()), "1",
                            {}, ""});
  report.metrics.push_back({"mc_dc_offset", offset, "counts/bin/herald", plateaus, ""});
  report.metrics.push_back({"mc_g2_cross_raw", raw_est.value, "1", {first, reference}, ""});
  report.metrics.push_back({"mc_g2_cross_raw_stderr", raw_est.standard_error, "1", {}, ""});
  report.metrics.push_back(
      {"mc_g2_cross_subtracted", sub_est.value, "1", {first, reference}, ""});
  report.metrics.push_back(
      {"mc_g2_cross_subtracted_stderr", sub_est.standard_error, "1", {}, ""});
  report.metrics.push_back({"mc_g2_conditional", cond_est.value, "1", {first}, ""});
  report.metrics.push_back({"mc_g2_conditional_stderr", cond_est.standard_error, "1", {}, ""});
  report.notes.push_back(
      "memory loss is modelled as a flat transmission; frequency-dependent loss is not "
      "resolved, so predicted g2 changes come only from the constant background");

  if (!out_dir.empty()) {
    const auto path = out_dir / "histogram_fig4_statistics.csv";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    write_histogram_csv(os, hist, setup.header);
    report.artifacts.push_back(path.filename().string());
  }
  return report;
}

}  // namespace

ScenarioReport reproduce(std::string_view scenario, const ExperimentSetup& setup,
                         const std::filesystem::path& out_dir) {
  const auto it = scenario_aliases().find(scenario);
  if (it == scenario_aliases().end()) {
    throw ConfigError("unknown reproduction '" + std::string(scenario) +
                      "' (expected fig3a, fig3b or fig4)");
  }
  const std::string name(it->second);
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  ScenarioReport report;
  if (name == "fig4_statistics") {
    report = fig4_report(setup, out_dir);
  } else {
    const SimulationRecord eit = run(setup.solver, Scenario::kEitMemory);
    if (name == "fig3a_eit_memory") {
      report.metrics = eit_metrics(eit, setup.release_window);
    } else {
      const SimulationRecord held = run(setup.solver, Scenario::kEitPlusQslp);
      report.metrics = qslp_metrics(eit, held, setup.release_window);
      if (!out_dir.empty()) {
        const auto path = out_dir / "trace_fig3b_eit_qslp.csv";
        write_record(path, held, setup.header);
        report.artifacts.push_back(path.filename().string());
      }
    }
    if (!out_dir.empty()) {
      const auto path = out_dir / "trace_fig3a_eit_memory.csv";
      write_record(path, eit, setup.header);
      report.artifacts.insert(report.artifacts.begin(), path.filename().string());
    }
    report.notes.push_back("fields integrated quasi-statically (c0^-1 d/dt neglected)");
  }
  report.scenario = name;
  report.config = describe(setup.solver);
  report.config.emplace_back("source.eta", fmt::format("{:.17g}", setup.source.eta));
  report.config.emplace_back("seed", fmt::format("{}", setup.seed));

  if (!out_dir.empty()) {
    const auto path = out_dir / fmt::format("report_{}.txt", name);
    report.artifacts.push_back(path.filename().string());
    write_report(path, report, setup.header);
  }
  return report;
}

void apply_sweep_parameter(SolverConfig& cfg, std::string_view parameter, double value) {
  if (parameter == "omega_fwc") {
    cfg.drives.omega_fwc = value;
  } else if (parameter == "omega_bwc") {
    cfg.drives.omega_bwc = value;
  } else if (parameter == "od") {
    cfg.medium.optical_depth = value;
  } else if (parameter == "delta") {
    cfg.medium.two_photon_detuning = value;
  } else if (parameter == "delta_k") {
    cfg.medium.delta_k = value;
  } else if (parameter == "gamma_gs") {
    // The fit point ties both ground-state dephasing rates together.
    cfg.medium.gamma_gs = value;
    cfg.medium.gamma_gs_prime = value;
  } else {
    throw ConfigError("unknown sweep parameter '" + std::string(parameter) +
                      "' (expected omega_fwc, omega_bwc, od, delta, delta_k or gamma_gs)");
  }
}

std::vector<SweepRow> sweep(const std::vector<SweepAxis>& axes, Scenario scenario,
                            const SolverConfig& base, unsigned threads,
                            double release_window) {
  std::size_t total = 1;
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("sweep axis '" + axis.parameter + "' is empty");
    SolverConfig probe = base;
    apply_sweep_parameter(probe, axis.parameter, axis.values.front());
    total *= axis.values.size();
  }

  std::vector<SweepRow> rows(total);
  for (std::size_t index = 0; index < total; ++index) {
    std::size_t rest = index;
    auto& point = rows[index].point;
    point.resize(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& values = axes[a].values;
      point[a] = {axes[a].parameter, values[rest % values.size()]};
      rest /= values.size();
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      SweepRow& row = rows[i];
      try {
        SolverConfig cfg = base;
        for (const auto& [name, value] : row.point) apply_sweep_parameter(cfg, name, value);
        row.metrics = scenario_metrics(scenario, cfg, release_window);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header) {
  for (const auto& line : header) fmt::print(os, "# {}\n", line);
  if (rows.empty()) return;
  // Metric columns come from the first successful row.
  std::vector<std::string> metric_names;
  for (const auto& row : rows) {
    if (!row.ok) continue;
    for (const auto& m : row.metrics) metric_names.push_back(m.name);
    break;
  }
  std::string head;
  for (const auto& [name, value] : rows.front().point) head += name + ",";
  for (const auto& name : metric_names) head += name + ",";
  os << head << "status,error\n";
  for (const auto& row : rows) {
    std::string line;
    for (const auto& [name, value] : row.point) line += fmt::format("{:.17g},", value);
    for (const auto& name : metric_names) {
      const auto it = std::find_if(row.metrics.begin(), row.metrics.end(),
                                   [&](const Metric& m) { return m.name == name; });
      line += it == row.metrics.end() ? std::string(",") : fmt::format("{:.17g},", it->value);
    }
    std::string error = row.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    os << line << (row.ok ? "ok" : "failed") << "," << error << "\n";
  }
}

}  // namespace qslp
