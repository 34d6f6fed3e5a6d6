#include "qslp/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>

#include <fmt/format.h>

#include "qslp/errors.hpp"

namespace qslp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool consume_prefix(std::string_view& s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) != prefix) return false;
  s.remove_prefix(prefix.size());
  s = trim(s);
  return true;
}

struct UnitScale {
  std::string_view unit;
  double scale;
  bool needs_two_pi;
};

const std::vector<UnitScale>& units_for(Quantity kind) {
  static const std::map<Quantity, std::vector<UnitScale>> table = {
      {Quantity::kDimensionless, {{"", 1.0, false}}},
      {Quantity::kCount, {{"", 1.0, false}}},
      {Quantity::kRate,
       {{"", 1.0, false},
        {"rad/s", 1.0, false},
        {"1/s", 1.0, false},
        {"/s", 1.0, false},
        {"Hz", 1.0, true},
        {"kHz", 1e3, true},
        {"MHz", 1e6, true},
        {"GHz", 1e9, true}}},
      {Quantity::kTime,
       {{"", 1.0, false},
        {"s", 1.0, false},
        {"ms", 1e-3, false},
        {"us", 1e-6, false},
        {"µs", 1e-6, false},
        {"μs", 1e-6, false},
        {"ns", 1e-9, false},
        {"ps", 1e-12, false}}},
      {Quantity::kLength,
       {{"", 1.0, false},
        {"m", 1.0, false},
        {"cm", 1e-2, false},
        {"mm", 1e-3, false},
        {"um", 1e-6, false},
        {"μm", 1e-6, false},
        {"nm", 1e-9, false}}},
      {Quantity::kWavenumber,
       {{"", 1.0, false}, {"1/m", 1.0, false}, {"/m", 1.0, false}, {"m^-1", 1.0, false}}},
      {Quantity::kAngle,
       {{"", 1.0, false},
        {"rad", 1.0, false},
        {"deg", std::numbers::pi / 180.0, false},
        {"°", std::numbers::pi / 180.0, false}}},
  };
  return table.at(kind);
}

std::string fmt_num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

double parse_quantity(std::string_view text, Quantity kind) {
  std::string_view s = trim(text);
  if (s.empty()) throw ConfigError("empty value");
  bool two_pi = false;
  for (std::string_view prefix : {"2pi*", "2pi×", "2pi x", "2π*", "2π×",
                                  "2π x", "2π"}) {
    if (consume_prefix(s, prefix)) {
      two_pi = true;
      break;
    }
  }
  if (two_pi && kind != Quantity::kRate) {
    throw ConfigError("a 2pi factor is only meaningful for angular frequencies: '" +
                      std::string(text) + "'");
  }
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || !std::isfinite(value)) {
    throw ConfigError("malformed number '" + std::string(text) + "'");
  }
  const std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)));
  if (kind == Quantity::kCount) {
    if (!unit.empty() || value != std::floor(value) || value < 0.0) {
      throw ConfigError("expected a nonnegative integer, got '" + std::string(text) + "'");
    }
    return value;
  }
  for (const auto& u : units_for(kind)) {
    if (u.unit != unit) continue;
    if (u.needs_two_pi && !two_pi) {
      throw ConfigError("'" + std::string(text) +
                        "': a Hz-family unit needs an explicit 2pi factor (write 2pi*<value> "
                        "<unit> for angular frequency, or give rad/s)");
    }
    return (two_pi ? kTwoPi : 1.0) * value * u.scale;
  }
  throw ConfigError("unsupported unit '" + std::string(unit) + "' in '" + std::string(text) +
                    "'");
}

namespace {

using Setter = std::function<void(ResolvedConfig&, std::string_view)>;
using Getter = std::function<std::string(const ResolvedConfig&)>;

struct KeySpec {
  std::string_view name;
  Setter set;
  Getter get;
};

template <typename Field>
KeySpec number_key(std::string_view name, Quantity kind, Field field) {
  return {name,
          [kind, field](ResolvedConfig& c, std::string_view v) {
            field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(
                parse_quantity(v, kind));
          },
          [field](const ResolvedConfig& c) {
            auto& f = field(const_cast<ResolvedConfig&>(c));
            if constexpr (std::is_floating_point_v<std::remove_reference_t<decltype(f)>>) {
              return fmt_num(f);
            } else {
              return fmt::format("{}", f);
            }
          }};
}

#define QSLP_FIELD(expr) [](ResolvedConfig& c) -> auto& { return c.expr; }

const std::vector<KeySpec>& key_table() {
  using Q = Quantity;
  static const std::vector<KeySpec> keys = {
      {"run.scenario",
       [](ResolvedConfig& c, std::string_view v) {
         parse_scenario(v);
         c.scenario = std::string(v);
       },
       [](const ResolvedConfig& c) { return c.scenario; }},
      number_key("run.seed", Q::kCount, QSLP_FIELD(seed)),
      number_key("run.repetitions", Q::kCount, QSLP_FIELD(repetitions)),
      number_key("run.release_window", Q::kTime, QSLP_FIELD(release_window)),
      number_key("run.threads", Q::kCount, QSLP_FIELD(threads)),
      number_key("solver.nz", Q::kCount, QSLP_FIELD(solver.nz)),
      number_key("solver.dt", Q::kTime, QSLP_FIELD(solver.dt)),
      number_key("solver.t_max", Q::kTime, QSLP_FIELD(solver.t_max)),
      number_key("solver.dt_record", Q::kTime, QSLP_FIELD(solver.dt_record)),
      number_key("solver.storage_threshold", Q::kDimensionless,
                 QSLP_FIELD(solver.timing.storage_threshold)),
      number_key("solver.storage_duration", Q::kTime,
                 QSLP_FIELD(solver.timing.storage_duration)),
      number_key("solver.qslp_duration", Q::kTime, QSLP_FIELD(solver.timing.qslp_duration)),
      number_key("solver.ramp_time", Q::kTime, QSLP_FIELD(solver.timing.ramp_time)),
      number_key("solver.period", Q::kTime, QSLP_FIELD(solver.timing.period)),
      number_key("medium.od", Q::kDimensionless, QSLP_FIELD(solver.medium.optical_depth)),
      number_key("medium.gamma", Q::kRate, QSLP_FIELD(solver.medium.gamma)),
      number_key("medium.gamma_gs", Q::kRate, QSLP_FIELD(solver.medium.gamma_gs)),
      number_key("medium.gamma_gs_prime", Q::kRate, QSLP_FIELD(solver.medium.gamma_gs_prime)),
      number_key("medium.length", Q::kLength, QSLP_FIELD(solver.medium.length)),
      number_key("medium.delta", Q::kRate, QSLP_FIELD(solver.medium.two_photon_detuning)),
      number_key("medium.delta_k", Q::kWavenumber, QSLP_FIELD(solver.medium.delta_k)),
      number_key("medium.c0", Q::kDimensionless, QSLP_FIELD(solver.medium.light_speed)),
      number_key("drives.omega_fwc", Q::kRate, QSLP_FIELD(solver.drives.omega_fwc)),
      number_key("drives.omega_bwc", Q::kRate, QSLP_FIELD(solver.drives.omega_bwc)),
      {"drives.coupling_strength",
       [](ResolvedConfig& c, std::string_view v) {
         if (trim(v) == "none") {
           c.solver.drives.coupling_strength.reset();
         } else {
           c.solver.drives.coupling_strength = parse_quantity(v, Quantity::kDimensionless);
         }
       },
       [](const ResolvedConfig& c) {
         const auto& g = c.solver.drives.coupling_strength;
         return g ? fmt_num(*g) : std::string("none");
       }},
      {"drives.phi_convention",
       [](ResolvedConfig& c, std::string_view v) {
         if (v == "amplitude") {
           c.phi_convention = PhiConvention::kAmplitudeRatio;
         } else if (v == "intensity") {
           c.phi_convention = PhiConvention::kIntensityRatio;
         } else {
           throw ConfigError("expected 'amplitude' or 'intensity', got '" + std::string(v) +
                             "'");
         }
       },
       [](const ResolvedConfig& c) {
         return std::string(c.phi_convention == PhiConvention::kAmplitudeRatio ? "amplitude"
                                                                               : "intensity");
       }},
      number_key("geometry.angle", Q::kAngle, QSLP_FIELD(geometry.angle)),
      number_key("geometry.wavelength", Q::kLength, QSLP_FIELD(geometry.wavelength)),
      number_key("input.t0", Q::kTime, QSLP_FIELD(solver.input.center)),
      number_key("input.fwhm", Q::kTime, QSLP_FIELD(solver.input.fwhm)),
      number_key("input.scale", Q::kDimensionless, QSLP_FIELD(solver.input_scale)),
      number_key("source.eta", Q::kDimensionless, QSLP_FIELD(source.eta)),
      number_key("source.herald_efficiency", Q::kDimensionless,
                 QSLP_FIELD(source.herald_efficiency)),
      number_key("source.signal_efficiency", Q::kDimensionless,
                 QSLP_FIELD(source.signal_efficiency)),
      number_key("source.noise_floor", Q::kDimensionless, QSLP_FIELD(source.noise_floor)),
      number_key("source.noise_bin_width", Q::kTime, QSLP_FIELD(source.noise_bin_width)),
      number_key("source.period", Q::kTime, QSLP_FIELD(source.repetition_period)),
      number_key("source.jitter", Q::kTime, QSLP_FIELD(source.jitter)),
      {"analysis.events_file",
       [](ResolvedConfig& c, std::string_view v) { c.analysis.events_file = std::string(v); },
       [](const ResolvedConfig& c) { return c.analysis.events_file; }},
      number_key("analysis.bin_width", Q::kTime, QSLP_FIELD(analysis.bin_width)),
      number_key("analysis.coincidence_window", Q::kTime,
                 QSLP_FIELD(analysis.coincidence_window)),
      number_key("analysis.reference_index", Q::kCount, QSLP_FIELD(analysis.reference_index)),
      number_key("analysis.splitter_seed", Q::kCount, QSLP_FIELD(analysis.splitter_seed)),
      {"sweep.scenario",
       [](ResolvedConfig& c, std::string_view v) {
         parse_scenario(v);
         c.sweep_scenario = std::string(v);
       },
       [](const ResolvedConfig& c) { return c.sweep_scenario; }},
  };
  return keys;
}

#undef QSLP_FIELD

Quantity sweep_quantity(std::string_view parameter) {
  if (parameter == "od" ) return Quantity::kDimensionless;
  if (parameter == "delta_k") return Quantity::kWavenumber;
  if (parameter == "omega_fwc" || parameter == "omega_bwc" || parameter == "delta" ||
      parameter == "gamma_gs") {
    return Quantity::kRate;
  }
  throw ConfigError("unknown sweep parameter '" + std::string(parameter) + "'");
}

}  // namespace

void apply_setting(ResolvedConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  constexpr std::string_view sweep_prefix = "sweep.";
  if (key.substr(0, sweep_prefix.size()) == sweep_prefix && key != "sweep.scenario") {
    const std::string parameter(key.substr(sweep_prefix.size()));
    const Quantity kind = sweep_quantity(parameter);
    SweepAxis axis{parameter, {}};
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = trim(rest.substr(0, comma));
      if (item.empty()) throw ConfigError("empty entry in sweep list for '" + parameter + "'");
      axis.values.push_back(parse_quantity(item, kind));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (axis.values.empty()) throw ConfigError("sweep list for '" + parameter + "' is empty");
    auto it = std::find_if(cfg.sweep_axes.begin(), cfg.sweep_axes.end(),
                           [&](const SweepAxis& a) { return a.parameter == parameter; });
    if (it == cfg.sweep_axes.end()) {
      cfg.sweep_axes.push_back(std::move(axis));
    } else {
      *it = std::move(axis);
    }
    return;
  }
  for (const auto& spec : key_table()) {
    if (spec.name != key) continue;
    try {
      spec.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
    return;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void apply_override(ResolvedConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
  cfg.validate();
}

ResolvedConfig parse_config(std::string_view text) {
  ResolvedConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) throw ConfigError("malformed section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
      const std::string_view raw_key = trim(line.substr(0, eq));
      if (raw_key.empty()) throw ConfigError("missing key before '='");
      std::string key(raw_key);
      if (raw_key.find('.') == std::string_view::npos) {
        if (section.empty()) throw ConfigError("key '" + key + "' outside of any [section]");
        key = section + "." + key;
      }
      apply_setting(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  cfg.validate();
  return cfg;
}

void ResolvedConfig::validate() const {
  parse_scenario(scenario);
  parse_scenario(sweep_scenario);
  solver.validate();
  source.validate();
  geometry.validate();
  if (!(release_window > 0.0)) throw ConfigError("invariant violated: run.release_window > 0");
  if (repetitions == 0) throw ConfigError("invariant violated: run.repetitions >= 1");
  if (!(analysis.bin_width > 0.0)) {
    throw ConfigError("invariant violated: analysis.bin_width > 0");
  }
  if (!(analysis.coincidence_window > 0.0)) {
    throw ConfigError("invariant violated: analysis.coincidence_window > 0");
  }
  if (analysis.reference_index < 1) {
    throw ConfigError("invariant violated: analysis.reference_index >= 1");
  }
}

std::vector<std::string> ResolvedConfig::echo() const {
  std::vector<std::string> lines;
  for (const auto& spec : key_table()) {
    lines.push_back(fmt::format("{} = {}", spec.name, spec.get(*this)));
  }
  for (const auto& axis : sweep_axes) {
    std::string values;
    for (double v : axis.values) values += (values.empty() ? "" : ", ") + fmt_num(v);
    lines.push_back(fmt::format("sweep.{} = {}", axis.parameter, values));
  }
  return lines;
}

ExperimentSetup make_setup(const ResolvedConfig& cfg) {
  ExperimentSetup setup;
  setup.solver = cfg.solver;
  setup.source = cfg.source;
  setup.source.waveform = cfg.solver.input;
  setup.seed = cfg.seed;
  setup.repetitions = cfg.repetitions;
  setup.bin_width = cfg.analysis.bin_width;
  setup.release_window = cfg.release_window;
  setup.header = cfg.echo();
  return setup;
}

}  // namespace qslp
