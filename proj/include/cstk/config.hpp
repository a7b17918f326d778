#pragma once

// Flat keyed run configuration:
//
//   # comment
//   grid.dims = 64, 64
//   params.m = 1.2
//   ic.preset = gaussian-blob
//   run.t_end = 10
//
// Keys carry one of the prefixes grid., params., ic., run.; unknown keys and
// repeated keys are errors. to_text() writes the canonical form, which
// parses back to an identical RunConfig.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cstk/errors.hpp"
#include "cstk/initial.hpp"
#include "cstk/timestepper.hpp"

namespace cstk {

inline constexpr const char* kCodeVersion = "cstk 1.0.0";

struct RunConfig {
  std::vector<int> dims{64, 64};
  std::vector<double> lengths{4.0, 4.0};

  FluxSpec flux{1.2, 1.0, 0.01};
  /// Gravity grad(phi) = magnitude * direction / |direction|.
  std::vector<double> gravity_direction{0.0, -1.0};
  double gravity_magnitude = 1.0;
  double dt_init = 1e-2;
  double dt_min = 1e-9;
  double dt_max = 1e-2;
  double cfl_target = 0.5;
  double diffusion_tolerance = 1e-13;

  IcPreset ic{};

  double t_end = 1.0;
  double audit_cadence = 0.1;
  double snapshot_cadence = 0.0;  ///< 0: same as audit_cadence
  std::string out = "out";

  bool operator==(const RunConfig&) const = default;

  Grid grid() const {
    return Grid(std::span<const int>(dims), std::span<const double>(lengths));
  }

  std::array<double, 3> gravity() const {
    double norm = 0.0;
    for (double v : gravity_direction) norm += v * v;
    norm = std::sqrt(norm);
    std::array<double, 3> g{};
    if (norm == 0.0) return g;
    for (std::size_t a = 0; a < gravity_direction.size() && a < 3; ++a)
      g[a] = gravity_magnitude * gravity_direction[a] / norm;
    return g;
  }

  SimParams sim_params() const {
    const Grid g = grid();
    SimParams p;
    p.flux = flux;
    p.phi = linear_potential(g, gravity());
    p.dt_init = dt_init;
    p.dt_min = dt_min;
    p.dt_max = dt_max;
    p.cfl_target = cfl_target;
    p.diffusion_tolerance = diffusion_tolerance;
    p.t_end = t_end;
    return p;
  }

  /// Re-checks every constraint of the grid, the fluxes, the step controls
  /// and the initial-condition preset. Throws ConfigError.
  void validate() const {
    try {
      const Grid g = grid();
      if (gravity_direction.size() != dims.size())
        throw InvalidArgument("params.gravity_direction needs one entry per grid axis");
      for (double v : gravity_direction)
        if (!std::isfinite(v)) throw InvalidArgument("params.gravity_direction must be finite");
      if (!std::isfinite(gravity_magnitude) || gravity_magnitude < 0.0)
        throw InvalidArgument("params.gravity_magnitude must be finite and >= 0");
      if (gravity_magnitude > 0.0 && gravity() == std::array<double, 3>{})
        throw InvalidArgument("params.gravity_direction must be nonzero");
      sim_params().validate();
      if (!std::isfinite(audit_cadence) || !(audit_cadence > 0.0))
        throw InvalidArgument("run.cadence must be > 0");
      if (!std::isfinite(snapshot_cadence) || snapshot_cadence < 0.0)
        throw InvalidArgument("run.snapshot_cadence must be >= 0");
      check_admissible(make_initial(g, ic));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
std::string format_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_integral_v<T>) s += std::to_string(v[i]);
    else s += format_number(v[i]);
  }
  return s;
}

inline double parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("expected a number, got '" + text + "'");
  return v;
}

inline long long parse_integer(const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected an integer, got '" + text + "'");
  }
  if (used != text.size()) throw ConfigError("expected an integer, got '" + text + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.empty() || (out.size() == 1 && out[0].empty())) throw ConfigError("empty list");
  return out;
}

struct ConfigKey {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline ConfigKey number_key(double RunConfig::*field) {
  return {[field](RunConfig& c, const std::string& v) { c.*field = parse_number(v); },
          [field](const RunConfig& c) { return format_number(c.*field); }};
}

inline ConfigKey flux_key(double FluxSpec::*field) {
  return {[field](RunConfig& c, const std::string& v) {
            c.flux.*field = parse_number(v);
            try {
              c.flux.validate();
            } catch (const InvalidArgument& e) {
              throw ConfigError(e.what());
            }
          },
          [field](const RunConfig& c) { return format_number(c.flux.*field); }};
}

inline ConfigKey ic_key(double IcPreset::*field) {
  return {[field](RunConfig& c, const std::string& v) { c.ic.*field = parse_number(v); },
          [field](const RunConfig& c) { return format_number(c.ic.*field); }};
}

/// Every accepted key, in canonical output order.
inline const std::vector<std::pair<std::string, ConfigKey>>& config_keys() {
  static const std::vector<std::pair<std::string, ConfigKey>> keys = {
      {"grid.dims",
       {[](RunConfig& c, const std::string& v) {
          c.dims.clear();
          for (const auto& s : split_list(v)) {
            const long long n = parse_integer(s);
            if (n < 1 || n > (1 << 20)) throw ConfigError("grid extent out of range: " + s);
            c.dims.push_back(static_cast<int>(n));
          }
        },
        [](const RunConfig& c) { return format_list(c.dims); }}},
      {"grid.lengths",
       {[](RunConfig& c, const std::string& v) {
          c.lengths.clear();
          for (const auto& s : split_list(v)) c.lengths.push_back(parse_number(s));
        },
        [](const RunConfig& c) { return format_list(c.lengths); }}},
      {"params.m", flux_key(&FluxSpec::m)},
      {"params.chi", flux_key(&FluxSpec::chi)},
      {"params.epsilon", flux_key(&FluxSpec::epsilon)},
      {"params.mobility_mean",
       {[](RunConfig& c, const std::string& v) {
          if (v == "arithmetic") c.flux.mean = MobilityMean::arithmetic;
          else if (v == "harmonic") c.flux.mean = MobilityMean::harmonic;
          else throw ConfigError("mobility_mean must be arithmetic or harmonic, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.flux.mean == MobilityMean::harmonic ? "harmonic" : "arithmetic");
        }}},
      {"params.gravity_direction",
       {[](RunConfig& c, const std::string& v) {
          c.gravity_direction.clear();
          for (const auto& s : split_list(v)) c.gravity_direction.push_back(parse_number(s));
        },
        [](const RunConfig& c) { return format_list(c.gravity_direction); }}},
      {"params.gravity_magnitude", number_key(&RunConfig::gravity_magnitude)},
      {"params.dt_init", number_key(&RunConfig::dt_init)},
      {"params.dt_min", number_key(&RunConfig::dt_min)},
      {"params.dt_max", number_key(&RunConfig::dt_max)},
      {"params.cfl_target", number_key(&RunConfig::cfl_target)},
      {"params.diffusion_tolerance", number_key(&RunConfig::diffusion_tolerance)},
      {"ic.preset",
       {[](RunConfig& c, const std::string& v) { c.ic.name = v; },
        [](const RunConfig& c) { return c.ic.name; }}},
      {"ic.n_value", ic_key(&IcPreset::n_value)},
      {"ic.c_value", ic_key(&IcPreset::c_value)},
      {"ic.center",
       {[](RunConfig& c, const std::string& v) {
          c.ic.center = {IcPreset::kUnset, IcPreset::kUnset, IcPreset::kUnset};
          if (v == "auto") return;
          const auto items = split_list(v);
          if (items.size() > 3) throw ConfigError("ic.center takes at most 3 coordinates");
          for (std::size_t a = 0; a < items.size(); ++a) c.ic.center[a] = parse_number(items[a]);
        },
        [](const RunConfig& c) {
          std::vector<double> v;
          for (double x : c.ic.center)
            if (!std::isnan(x)) v.push_back(x);
          return v.empty() ? std::string("auto") : format_list(v);
        }}},
      {"ic.sigma", ic_key(&IcPreset::sigma)},
      {"ic.mass", ic_key(&IcPreset::mass)},
      {"ic.amplitude", ic_key(&IcPreset::amplitude)},
      {"ic.u_amplitude", ic_key(&IcPreset::u_amplitude)},
      {"ic.c_min", ic_key(&IcPreset::c_min)},
      {"ic.c_max", ic_key(&IcPreset::c_max)},
      {"run.t_end", number_key(&RunConfig::t_end)},
      {"run.cadence", number_key(&RunConfig::audit_cadence)},
      {"run.snapshot_cadence", number_key(&RunConfig::snapshot_cadence)},
      {"run.out",
       {[](RunConfig& c, const std::string& v) { c.out = v; },
        [](const RunConfig& c) { return c.out; }}},
      {"run.seed",
       {[](RunConfig& c, const std::string& v) {
          const long long s = parse_integer(v);
          if (s < 0) throw ConfigError("seed must be >= 0");
          c.ic.seed = static_cast<std::uint64_t>(s);
        },
        [](const RunConfig& c) { return std::to_string(c.ic.seed); }}},
  };
  return keys;
}

}  // namespace detail

/// Parses key=value text on top of the defaults, then validates. Errors
/// name the source and line: "<source>:<line>: <message>".
inline RunConfig parse_config(std::istream& is, const std::string& source = "<config>") {
  static const std::set<std::string> prefixes = {"grid", "params", "ic", "run"};
  RunConfig cfg;
  std::map<std::string, int> seen;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos || !prefixes.count(key.substr(0, dot)))
      fail("key '" + key + "' needs one of the prefixes grid., params., ic., run.");
    const auto& keys = detail::config_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& kv) { return kv.first == key; });
    if (it == keys.end()) fail("unknown key '" + key + "'");
    if (seen.count(key)) fail("key '" + key + "' repeats line " + std::to_string(seen[key]));
    seen[key] = lineno;
    if (value.empty()) fail("key '" + key + "' has no value");
    try {
      it->second.set(cfg, value);
    } catch (const ConfigError& e) {
      fail(key + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>") {
  std::istringstream is(text);
  return parse_config(is, source);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open");
  return parse_config(f, path);
}

/// Canonical text: every key, in a fixed order, numbers in round-trip form.
inline std::string to_text(const RunConfig& cfg) {
  std::string s;
  for (const auto& [key, k] : detail::config_keys()) s += key + " = " + k.get(cfg) + "\n";
  return s;
}

}  // namespace cstk
