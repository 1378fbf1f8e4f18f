#pragma once

#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "eprsim/apparatus.hpp"
#include "eprsim/common.hpp"
#include "eprsim/grid.hpp"
#include "eprsim/model.hpp"

namespace eprsim {

/// Resolved run configuration.  Defaults reproduce the nominal experiment:
/// 390 nm pump of 0.17 mm width, 2 mm crystal, 0.012 rad angular width,
/// 40 um slits, 100 mm lenses, 1% background wings.
struct RunConfig {
  // model
  double pump_wavelength_nm = 390.0;
  double pump_width_mm = 0.17;
  double crystal_length_mm = 2.0;
  std::string phase_match = "gaussian";  // gaussian | sinc
  double delta_phi_rad = 0.012;
  double walkoff_rho = 0.0;
  double chi = 1.0;
  // engine
  double oversample = 4.0;
  std::uint64_t min_n = 64;
  std::uint64_t refine = 1;
  // scans
  double slit_width_mm = 0.040;
  double focal_length_mm = 100.0;
  double pos_scan_start_mm = -0.15;
  double pos_scan_step_mm = 0.005;
  std::uint64_t pos_scan_points = 61;
  double mom_scan_start_mm = -0.16;
  double mom_scan_step_mm = 0.005;
  std::uint64_t mom_scan_points = 65;
  std::string fixed_slit = "peak";  // peak | explicit
  double fixed_slit_position_mm = 0.0;
  double background_fraction = 0.01;
  double wing_width_factor = 10.0;
  std::uint64_t peak_counts = 10000;
  // analysis
  bool background_subtract = false;
  bool slit_correction_on = true;
  std::string conditioning = "peak";  // peak | explicit
  double conditioning_position_mm = 0.0;
  double conditioning_momentum_invmm = 0.0;
  // misc
  std::uint64_t seed = 12345;

  void validate() const {
    if (!(pump_wavelength_nm > 0.0)) throw ConfigError("pump_wavelength_nm must be positive");
    if (!(pump_width_mm > 0.0)) throw ConfigError("pump_width_mm must be positive");
    if (!(crystal_length_mm > 0.0)) throw ConfigError("crystal_length_mm must be positive");
    if (phase_match != "gaussian" && phase_match != "sinc")
      throw ConfigError("phase_match must be 'gaussian' or 'sinc'");
    if (phase_match == "gaussian" && !(delta_phi_rad > 0.0))
      throw ConfigError("delta_phi_rad must be positive");
    if (!(chi > 0.0)) throw ConfigError("chi must be positive");
    if (!(oversample >= 4.0)) throw ConfigError("oversample must be >= 4");
    if (refine < 1) throw ConfigError("refine must be >= 1");
    if (!(slit_width_mm > 0.0)) throw ConfigError("slit_width_mm must be positive");
    if (!(focal_length_mm > 0.0)) throw ConfigError("focal_length_mm must be positive");
    if (pos_scan_points < 8 || mom_scan_points < 8)
      throw ConfigError("scans need at least 8 points");
    if (!(pos_scan_step_mm > 0.0) || !(mom_scan_step_mm > 0.0))
      throw ConfigError("scan steps must be positive");
    if (!(background_fraction >= 0.0 && background_fraction < 1.0))
      throw ConfigError("background_fraction must be in [0, 1)");
    if (!(wing_width_factor > 1.0)) throw ConfigError("wing_width_factor must exceed 1");
    if (peak_counts == 0) throw ConfigError("peak_counts must be positive");
    if (fixed_slit != "peak" && fixed_slit != "explicit")
      throw ConfigError("fixed_slit must be 'peak' or 'explicit'");
    if (conditioning != "peak" && conditioning != "explicit")
      throw ConfigError("conditioning must be 'peak' or 'explicit'");
  }

  BiphotonModel make_model() const {
    validate();
    PumpBeam pump(pump_wavelength_nm, pump_width_mm);
    PhaseMatchModel pm = phase_match == "gaussian"
                             ? PhaseMatchModel(GaussianAngular(delta_phi_rad))
                             : PhaseMatchModel(ParaxialSinc{});
    return BiphotonModel::degenerate(pump, crystal_length_mm, pm, walkoff_rho, chi);
  }

  GridOptions grid_options() const {
    GridOptions opt;
    opt.oversample = oversample;
    opt.min_n = static_cast<std::size_t>(min_n);
    opt.refine = static_cast<unsigned>(refine);
    return opt;
  }

  ScanConfig scan_config(ScanMode mode) const {
    ScanConfig sc;
    sc.mode = mode;
    sc.slit_width_mm = slit_width_mm;
    sc.focal_length_mm = focal_length_mm;
    if (mode == ScanMode::momentum)
      sc.wavenumber_invmm = wavenumber_invmm(2.0 * pump_wavelength_nm);
    sc.scan_start_mm = mode == ScanMode::position ? pos_scan_start_mm : mom_scan_start_mm;
    sc.scan_step_mm = mode == ScanMode::position ? pos_scan_step_mm : mom_scan_step_mm;
    sc.scan_points = static_cast<std::size_t>(mode == ScanMode::position ? pos_scan_points
                                                                         : mom_scan_points);
    sc.fixed_slit_policy = fixed_slit == "peak" ? FixedSlitPolicy::at_peak
                                                : FixedSlitPolicy::explicit_position;
    sc.fixed_slit_position_mm = fixed_slit_position_mm;
    sc.background_fraction = background_fraction;
    sc.wing_width_factor = wing_width_factor;
    sc.peak_counts = peak_counts;
    sc.seed = seed;
    return sc;
  }

  /// Stable key order used by config files and report echoes.
  std::map<std::string, std::string> as_key_values() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a number");
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "': trailing characters in '" + v + "'");
  return d;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long u = 0;
  try {
    u = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as an integer");
  }
  if (pos != v.size())
    throw ConfigError("config key '" + key + "': trailing characters in '" + v + "'");
  return static_cast<std::uint64_t>(u);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key '" + key + "': cannot parse '" + v + "' as a boolean");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::map<std::string, std::string> RunConfig::as_key_values() const {
  using detail::format_double;
  std::map<std::string, std::string> kv;
  kv["pump_wavelength_nm"] = format_double(pump_wavelength_nm);
  kv["pump_width_mm"] = format_double(pump_width_mm);
  kv["crystal_length_mm"] = format_double(crystal_length_mm);
  kv["phase_match"] = phase_match;
  kv["delta_phi_rad"] = format_double(delta_phi_rad);
  kv["walkoff_rho"] = format_double(walkoff_rho);
  kv["chi"] = format_double(chi);
  kv["oversample"] = format_double(oversample);
  kv["min_n"] = std::to_string(min_n);
  kv["refine"] = std::to_string(refine);
  kv["slit_width_mm"] = format_double(slit_width_mm);
  kv["focal_length_mm"] = format_double(focal_length_mm);
  kv["pos_scan_start_mm"] = format_double(pos_scan_start_mm);
  kv["pos_scan_step_mm"] = format_double(pos_scan_step_mm);
  kv["pos_scan_points"] = std::to_string(pos_scan_points);
  kv["mom_scan_start_mm"] = format_double(mom_scan_start_mm);
  kv["mom_scan_step_mm"] = format_double(mom_scan_step_mm);
  kv["mom_scan_points"] = std::to_string(mom_scan_points);
  kv["fixed_slit"] = fixed_slit;
  kv["fixed_slit_position_mm"] = format_double(fixed_slit_position_mm);
  kv["background_fraction"] = format_double(background_fraction);
  kv["wing_width_factor"] = format_double(wing_width_factor);
  kv["peak_counts"] = std::to_string(peak_counts);
  kv["background_subtract"] = background_subtract ? "true" : "false";
  kv["slit_correction"] = slit_correction_on ? "true" : "false";
  kv["conditioning"] = conditioning;
  kv["conditioning_position_mm"] = format_double(conditioning_position_mm);
  kv["conditioning_momentum_invmm"] = format_double(conditioning_momentum_invmm);
  kv["seed"] = std::to_string(seed);
  return kv;
}

/// Apply one key=value assignment.  Unknown keys are rejected.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "pump_wavelength_nm") cfg.pump_wavelength_nm = parse_double(key, value);
  else if (key == "pump_width_mm") cfg.pump_width_mm = parse_double(key, value);
  else if (key == "crystal_length_mm") cfg.crystal_length_mm = parse_double(key, value);
  else if (key == "phase_match") cfg.phase_match = value;
  else if (key == "delta_phi_rad") cfg.delta_phi_rad = parse_double(key, value);
  else if (key == "walkoff_rho") cfg.walkoff_rho = parse_double(key, value);
  else if (key == "chi") cfg.chi = parse_double(key, value);
  else if (key == "oversample") cfg.oversample = parse_double(key, value);
  else if (key == "min_n") cfg.min_n = parse_u64(key, value);
  else if (key == "refine") cfg.refine = parse_u64(key, value);
  else if (key == "slit_width_mm") cfg.slit_width_mm = parse_double(key, value);
  else if (key == "focal_length_mm") cfg.focal_length_mm = parse_double(key, value);
  else if (key == "pos_scan_start_mm") cfg.pos_scan_start_mm = parse_double(key, value);
  else if (key == "pos_scan_step_mm") cfg.pos_scan_step_mm = parse_double(key, value);
  else if (key == "pos_scan_points") cfg.pos_scan_points = parse_u64(key, value);
  else if (key == "mom_scan_start_mm") cfg.mom_scan_start_mm = parse_double(key, value);
  else if (key == "mom_scan_step_mm") cfg.mom_scan_step_mm = parse_double(key, value);
  else if (key == "mom_scan_points") cfg.mom_scan_points = parse_u64(key, value);
  else if (key == "fixed_slit") cfg.fixed_slit = value;
  else if (key == "fixed_slit_position_mm") cfg.fixed_slit_position_mm = parse_double(key, value);
  else if (key == "background_fraction") cfg.background_fraction = parse_double(key, value);
  else if (key == "wing_width_factor") cfg.wing_width_factor = parse_double(key, value);
  else if (key == "peak_counts") cfg.peak_counts = parse_u64(key, value);
  else if (key == "background_subtract") cfg.background_subtract = parse_bool(key, value);
  else if (key == "slit_correction") cfg.slit_correction_on = parse_bool(key, value);
  else if (key == "conditioning") cfg.conditioning = value;
  else if (key == "conditioning_position_mm") cfg.conditioning_position_mm = parse_double(key, value);
  else if (key == "conditioning_momentum_invmm")
    cfg.conditioning_momentum_invmm = parse_double(key, value);
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Parse a flat UTF-8 key=value document.  '#' starts a comment; blank
/// lines are ignored.  Unknown keys and malformed lines are errors.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    apply_config_entry(cfg, key, value);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace eprsim
