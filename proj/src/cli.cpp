#include "qslp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qslp/config.hpp"
#include "qslp/errors.hpp"
#include "qslp/experiment.hpp"

namespace qslp {

namespace fs = std::filesystem;

std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out) {
  RunConfig run;
  CLI::App app{"Maxwell-Bloch simulator for EIT memory and stationary light pulses", "qslp"};
  app.require_subcommand(1);
  app.add_option("--config", run.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--out", run.out_dir, "output directory");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  app.add_option("--set", run.overrides, "override, key=value (repeatable)")
      ->take_all()
      ->allow_extra_args(false);

  auto* sim = app.add_subcommand("simulate", "run the configured run.scenario");
  auto* rep = app.add_subcommand("reproduce", "reproduce fig3a, fig3b or fig4");
  rep->add_option("target", run.target, "fig3a | fig3b | fig4")->required();
  auto* swp = app.add_subcommand("sweep", "grid over sweep.* lists");
  auto* evt = app.add_subcommand("events", "Monte Carlo heralded event stream");
  auto* ana = app.add_subcommand("analyze", "g2 analysis of analysis.events_file");
  for (auto* sub : {sim, rep, swp, evt, ana}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  run.command = app.get_subcommands().front()->get_name();
  if (seed_opt->count() > 0) run.seed = seed;
  return run;
}

namespace {

ResolvedConfig resolve(const RunConfig& run) {
  std::string text;
  if (!run.config_path.empty()) {
    std::ifstream is(run.config_path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file '" + run.config_path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
  }
  ResolvedConfig cfg = parse_config(text);
  for (const auto& o : run.overrides) apply_override(cfg, o);
  if (run.seed) cfg.seed = *run.seed;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

void write_header(std::ostream& os, const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
}

void write_state_csv(std::ostream& os, const SystemState& s, double dz,
                     const std::vector<std::string>& header) {
  write_header(os, header);
  fmt::print(os, "# t_s = {:.17g}\n", s.t);
  os << "z_m";
  for (const char* name : {"Eplus", "Eminus", "rho_eg_plus", "rho_eg_minus", "rho_sg_pm",
                           "rho_sg_mp", "rho_sg_0"}) {
    os << ",re_" << name << ",im_" << name;
  }
  os << '\n';
  for (std::size_t j = 0; j < s.size(); ++j) {
    fmt::print(os, "{:.17g}", static_cast<double>(j) * dz);
    for (const auto* v : {&s.e_plus, &s.e_minus, &s.rho_eg_plus, &s.rho_eg_minus,
                          &s.rho_sg_pm, &s.rho_sg_mp, &s.rho_sg_0}) {
      fmt::print(os, ",{:.17g},{:.17g}", (*v)[j].real(), (*v)[j].imag());
    }
    os << '\n';
  }
}

void emit_report(const fs::path& dir, const std::string& stem, ScenarioReport& report,
                 const std::vector<std::string>& header, std::ostream& out) {
  const fs::path path = dir / (stem + ".txt");
  report.artifacts.push_back(path.filename().string());
  write_report(path, report, header);
  for (const auto& m : report.metrics) {
    fmt::print(out, "{} = {:.6g} {}\n", m.name, m.value, m.unit);
  }
  for (const auto& a : report.artifacts) fmt::print(out, "wrote {}\n", (dir / a).string());
}

int cmd_simulate(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  const Scenario scenario = parse_scenario(cfg.scenario);
  const auto header = cfg.echo();
  const SimulationRecord rec = run(cfg.solver, scenario);
  ScenarioReport report;
  report.scenario = cfg.scenario;
  report.config = describe(cfg.solver);
  const WindowSpec all{rec.t.front(), rec.t.back()};
  const double e_in = input_energy(rec);
  const double e_out = output_energy(rec);
  report.metrics = {
      {"input_energy", e_in, "s^-1", {all}, "integral of |E+(0,t)|^2 dt, Rabi units"},
      {"output_energy", e_out, "s^-1", {all}, "integral of |E+(L,t)|^2 dt, Rabi units"},
      {"transmission", e_in > 0.0 ? e_out / e_in : 0.0, "1", {all}, ""},
  };
  if (scenario != Scenario::kSlowLight) {
    const WindowSpec after{rec.instants.release, all.t_end};
    report.metrics.push_back({"efficiency", e_in > 0.0 ? output_energy(rec, after.t_start) / e_in : 0.0,
                              "1", {after, all}, ""});
    report.metrics.push_back({"peak_time", peak_time(rec, after.t_start), "s", {after}, ""});
  } else {
    report.metrics.push_back({"peak_time", peak_time(rec), "s", {all}, ""});
  }
  const fs::path trace = dir / fmt::format("trace_{}.csv", cfg.scenario);
  {
    auto os = open_output(trace);
    write_csv(os, rec, header);
  }
  report.artifacts.push_back(trace.filename().string());
  emit_report(dir, "report_" + cfg.scenario, report, header, out);
  return 0;
}

int cmd_reproduce(const RunConfig& run, const ResolvedConfig& cfg, const fs::path& dir,
                  std::ostream& out) {
  const ScenarioReport report = reproduce(run.target, make_setup(cfg), dir);
  for (const auto& m : report.metrics) {
    fmt::print(out, "{} = {:.6g} {}\n", m.name, m.value, m.unit);
  }
  for (const auto& a : report.artifacts) fmt::print(out, "wrote {}\n", (dir / a).string());
  return 0;
}

int cmd_sweep(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  if (cfg.sweep_axes.empty()) {
    throw ConfigError("sweep needs at least one sweep.<parameter> = v1, v2, ... list");
  }
  const auto rows = sweep(cfg.sweep_axes, parse_scenario(cfg.sweep_scenario), cfg.solver,
                          cfg.threads, cfg.release_window);
  const fs::path path = dir / fmt::format("sweep_{}.csv", cfg.sweep_scenario);
  {
    auto os = open_output(path);
    write_sweep_csv(os, rows, cfg.echo());
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  fmt::print(out, "{} grid points, {} failed\nwrote {}\n", rows.size(), failed, path.string());
  return 0;
}

int cmd_events(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  const ExperimentSetup setup = make_setup(cfg);
  const EventStream events = monte_carlo_events(setup.source, setup.repetitions, setup.seed);
  const fs::path path = dir / "events.csv";
  {
    auto os = open_output(path);
    write_events_csv(os, events, setup.header);
  }
  fmt::print(out, "{} heralds, {} signal detections\nwrote {}\n", events.herald_times.size(),
             events.signal_times.size(), path.string());
  return 0;
}

int cmd_analyze(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  const auto& a = cfg.analysis;
  if (a.events_file.empty()) throw ConfigError("analyze needs analysis.events_file");
  std::ifstream is(a.events_file, std::ios::binary);
  if (!is) throw ConfigError("cannot read events file '" + a.events_file + "'");
  const EventStream events = read_events_csv(is);
  if (events.herald_times.empty()) throw DomainError("events file contains no heralds");

  const double period = cfg.source.repetition_period;
  const WindowSpec first{0.0, a.coincidence_window};
  const WindowSpec reference{a.reference_index * period, a.reference_index * period + first.t_end};
  std::vector<WindowSpec> plateaus;
  for (int k = 0; k < a.reference_index; ++k) {
    plateaus.push_back({k * period + first.t_end + 0.5e-6, (k + 1) * period - 0.5e-6});
  }
  const Histogram hist =
      build_histogram(events.herald_times, events.signal_times, a.bin_width, reference.t_end);
  const double offset = dc_offset(hist, plateaus);
  const RatioEstimate raw = g2_cross_estimate(events, a.bin_width, reference.t_end, first,
                                              reference, 0.0);
  const RatioEstimate sub = g2_cross_estimate(events, a.bin_width, reference.t_end, first,
                                              reference, offset);
  const RatioEstimate cond = g2_conditional_estimate(events, a.splitter_seed, a.coincidence_window);
  const double eta = eta_from_g2(sub.value);

  ScenarioReport report;
  report.scenario = "analysis";
  report.config.emplace_back("analysis.events_file", a.events_file);
  report.metrics = {
      {"dc_offset", offset, "counts/bin/herald", plateaus, ""},
      {"g2_cross_raw", raw.value, "1", {first, reference}, ""},
      {"g2_cross_raw_stderr", raw.standard_error, "1", {first, reference}, "jackknife"},
      {"g2_cross_subtracted", sub.value, "1", {first, reference}, ""},
      {"g2_cross_subtracted_stderr", sub.standard_error, "1", {first, reference}, "jackknife"},
      {"eta", eta, "1", {first, reference}, "from the subtracted g2"},
      {"g2_conditional", cond.value, "1", {first}, "number-resolved beam-splitter estimator"},
      {"g2_conditional_stderr", cond.standard_error, "1", {first}, "jackknife"},
      {"g2_conditional_predicted", g2_conditional(eta), "1", {first, reference}, ""},
  };
  const fs::path hpath = dir / "histogram_analysis.csv";
  {
    auto os = open_output(hpath);
    write_histogram_csv(os, hist, cfg.echo());
  }
  report.artifacts.push_back(hpath.filename().string());
  emit_report(dir, "report_analysis", report, cfg.echo(), out);
  return 0;
}

}  // namespace

int dispatch(const RunConfig& run, std::ostream& out, std::ostream& err) {
  const fs::path dir = run.out_dir.empty() ? fs::path(".") : fs::path(run.out_dir);
  std::vector<std::string> header;
  double dz = 0.0;
  try {
    const ResolvedConfig cfg = resolve(run);
    header = cfg.echo();
    dz = cfg.solver.dz();
    fs::create_directories(dir);
    if (run.command == "simulate") return cmd_simulate(cfg, dir, out);
    if (run.command == "reproduce") return cmd_reproduce(run, cfg, dir, out);
    if (run.command == "sweep") return cmd_sweep(cfg, dir, out);
    if (run.command == "events") return cmd_events(cfg, dir, out);
    if (run.command == "analyze") return cmd_analyze(cfg, dir, out);
    throw ConfigError("unknown command '" + run.command + "'");
  } catch (const NumericalError& e) {
    fmt::print(err, "numerical failure: non-finite {} at t = {:.6g} s, z index {} (z = {:.6g} m)\n",
               e.variable(), e.time(), e.z_index(), static_cast<double>(e.z_index()) * dz);
    try {
      const fs::path path = dir / "state_last_valid.csv";
      auto os = open_output(path);
      write_state_csv(os, e.last_valid_state(), dz, header);
      fmt::print(err, "last finite state written to {}\n", path.string());
    } catch (const std::exception& io) {
      fmt::print(err, "could not write last finite state: {}\n", io.what());
    }
    return 2;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> run;
  try {
    run = parse_args(argc, argv, out);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
  if (!run) return 0;
  return dispatch(*run, out, err);
}

}  // namespace qslp
