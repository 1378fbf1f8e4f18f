#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "eprsim/apparatus.hpp"
#include "eprsim/config.hpp"
#include "eprsim/criteria.hpp"
#include "eprsim/density.hpp"

namespace eprsim {

namespace detail {

/// Deletes the files registered with it unless release() is called, so a
/// failing run leaves no partial outputs behind.
class OutputTracker {
public:
  ~OutputTracker() {
    if (armed_) {
      for (const auto& p : paths_) {
        std::error_code ec;
        std::filesystem::remove(p, ec);
      }
    }
  }
  void track(const std::filesystem::path& p) { paths_.push_back(p); }
  void release() { armed_ = false; }

private:
  std::vector<std::filesystem::path> paths_;
  bool armed_ = true;
};

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + p.string() + "'");
  return out;
}

}  // namespace detail

/// Everything the grid pipelines share: the model, its factorized densities
/// in both representations, the angular width and the analysis windows.
struct EngineState {
  BiphotonModel model;
  FactorizedDensity momentum;   // over (q1+q2, q1-q2)
  FactorizedDensity position;   // over ((x1+x2)/2, (x1-x2)/2)
  double dphi_rad = 0.0;
  double position_window_mm = 0.0;   // half-width for (x1 - x2) analyses
  double momentum_window_invmm = 0.0;  // half-width for (p1 + p2) analyses

  static EngineState build(const RunConfig& cfg) {
    const BiphotonModel model = cfg.make_model();
    const auto famp_q = sample_factorized(model, cfg.grid_options());
    EngineState st{model,
                   density_of(famp_q),
                   density_of(to_position(famp_q)),
                   emission_angular_width(model),
                   0.0,
                   0.0};
    // fixed physical analysis windows keep reported variances stable under
    // grid refinement (the sinc model has slowly decaying tails)
    st.position_window_mm =
        8.0 * kInferredWidthCoefficient / (model.crystal.k_degenerate_invmm() * st.dphi_rad);
    st.momentum_window_invmm = 8.0 * model.pump.momentum_sigma_invmm();
    return st;
  }
};

/// Theory-side variances: conditional (inferred) and joint, all restricted
/// to the fixed analysis windows.
struct TheoryVariances {
  double dx_inf_sq = 0.0;
  double dp_inf_sq = 0.0;
  double dx12_sq = 0.0;
  double dp12_sq = 0.0;
  double x_conditioning = 0.0;
  double p_conditioning = 0.0;
  ConditionalDensity cond_x;  // cropped to the analysis window
  ConditionalDensity cond_p;
};

inline TheoryVariances theory_variances(const EngineState& st, const RunConfig& cfg) {
  TheoryVariances tv;
  // conditioning points default to the marginal peaks, like the fixed slit
  if (cfg.conditioning == "peak") {
    tv.x_conditioning = peak_position(marginal_core(st.position, 2));
    tv.p_conditioning = peak_position(marginal_core(st.momentum, 2));
  } else {
    tv.x_conditioning = cfg.conditioning_position_mm;
    tv.p_conditioning = cfg.conditioning_momentum_invmm;
  }
  auto cx = conditional_slice(st.position, 2, tv.x_conditioning);
  // the position conditional peaks near x1 = x2, the momentum one near
  // p1 = -p2; windows track those centers
  cx.density = crop(cx.density, tv.x_conditioning - st.position_window_mm,
                    tv.x_conditioning + st.position_window_mm);
  auto cp = conditional_slice(st.momentum, 2, tv.p_conditioning);
  cp.density = crop(cp.density, -tv.p_conditioning - st.momentum_window_invmm,
                    -tv.p_conditioning + st.momentum_window_invmm);
  tv.dx_inf_sq = inferred_position_variance(cx);
  tv.dp_inf_sq = inferred_momentum_variance(cp);
  // joint spreads through the factor identities: Var(x1-x2) = 4 Var(x_-),
  // Var(q1+q2) = Var(q_+), windowed consistently
  const Density1D xm = crop(st.position.minus, -st.position_window_mm / 2.0,
                            st.position_window_mm / 2.0);
  tv.dx12_sq = 4.0 * xm.variance();
  const Density1D qp = crop(st.momentum.plus, -st.momentum_window_invmm,
                            st.momentum_window_invmm);
  tv.dp12_sq = qp.variance();
  tv.cond_x = std::move(cx);
  tv.cond_p = std::move(cp);
  return tv;
}

/// Scan-plane joint density patch covering the scan lattice plus the slits,
/// sampled from the factorized density.
inline Density2D make_scan_patch(const EngineState& st, const ScanConfig& sc,
                                 double fixed_center_mm) {
  const bool position = (sc.mode == ScanMode::position);
  const FactorizedDensity& fd = position ? st.position : st.momentum;
  const double a = sc.slit_width_mm;
  const double h = a / 24.0;
  const double lo1 = sc.scan_start_mm - a, hi1 = sc.scan_end_mm() + a;
  const double lo2 = fixed_center_mm - 1.5 * a, hi2 = fixed_center_mm + 1.5 * a;
  const double scale = position ? 1.0 : sc.mapping_scale();

  const auto make_axis = [h](double lo, double hi) {
    std::size_t n = 64;
    while (static_cast<double>(n) * h < hi - lo) n *= 2;
    return AxisGrid(n, h, 0.5 * (lo + hi));
  };
  Density2D d;
  d.grid1 = make_axis(lo1, hi1);
  d.grid2 = make_axis(lo2, hi2);
  d.values.resize(d.grid1.n * d.grid2.n);
  double total = 0.0;
  for (std::size_t i = 0; i < d.grid1.n; ++i) {
    const double u1 = d.grid1.point(i) * scale;
    for (std::size_t j = 0; j < d.grid2.n; ++j) {
      const double u2 = d.grid2.point(j) * scale;
      const double plus_arg = position ? (u1 + u2) / 2.0 : (u1 + u2);
      const double minus_arg = position ? (u1 - u2) / 2.0 : (u1 - u2);
      const double p = fd.plus.value_at(plus_arg) * fd.minus.value_at(minus_arg);
      d.values[i * d.grid2.n + j] = p;
      total += p;
    }
  }
  total *= d.grid1.spacing * d.grid2.spacing;
  if (!(total > 0.0)) throw NumericalError("scan patch carries no probability mass");
  for (double& v : d.values) v /= total;
  return d;
}

/// Predicted fixed-slit center in scan-plane coordinates.
inline double predict_fixed_center(const EngineState& st, const ScanConfig& sc) {
  if (sc.fixed_slit_policy == FixedSlitPolicy::explicit_position)
    return sc.fixed_slit_position_mm;
  if (sc.mode == ScanMode::position) return peak_position(marginal_core(st.position, 2));
  const double q_peak = peak_position(marginal_core(st.momentum, 2));
  return far_field_map_inverse(q_peak, sc.focal_length_mm, sc.wavenumber_invmm);
}

/// Run one simulated slit scan: expected rates, wings, Poisson counts.
inline ScanResult simulate_scan(const EngineState& st, const ScanConfig& sc) {
  const double fixed = predict_fixed_center(st, sc);
  const Density2D patch = make_scan_patch(st, sc, fixed);
  ScanResult sr = expected_scan(patch, sc);
  sr = add_wings(sr, sc);
  sr = sample_counts(sr, sc);
  return sr;
}

/// Inferred variance from one scan: normalized curve variance with optional
/// background subtraction, and the scanning-slit correction.
inline double analyzed_variance(const ScanResult& sr, bool use_counts, bool subtract,
                                bool correct_slit) {
  double v = scan_variance(sr, use_counts, subtract);
  if (correct_slit) {
    const double a_eff = sr.config.slit_width_mm * sr.mapping_scale;
    v = slit_correction(v, a_eff);
  }
  return v;
}

struct ExperimentResult {
  CriteriaReport report;
  ScanResult position_scan;
  ScanResult momentum_scan;
};

/// Criteria evaluation from a pair of measured scans.  The conditional
/// widths stand in for the joint spreads (they are position-independent for
/// these states, which is also how the margins are quoted).
inline CriteriaReport report_from_scans(const ScanResult& pos, const ScanResult& mom,
                                        const RunConfig& cfg, Provenance prov) {
  const BiphotonModel model = cfg.make_model();
  const double dphi = emission_angular_width(model);
  const TheoryPrediction theory = theory_predictions(model);
  const double vx = analyzed_variance(pos, true, cfg.background_subtract, cfg.slit_correction_on);
  const double vp = analyzed_variance(mom, true, cfg.background_subtract, cfg.slit_correction_on);
  return CriteriaReport::assemble(vx, vp, vx, vp, theory, dphi, prov, cfg.seed);
}

// ---------------------------------------------------------------------------
// file formats

/// Bit-exact scan CSV: optional mapping comment (momentum mode), header,
/// then one row per point.
inline void write_scan_csv(const std::filesystem::path& path, const ScanResult& sr) {
  auto out = detail::open_out(path);
  if (sr.mode == ScanMode::momentum)
    out << "# mapping_scale_radpermm_per_mm=" << detail::format_double(sr.mapping_scale) << "\n";
  out << "position_mm,expected_rate,counts\n";
  for (std::size_t i = 0; i < sr.positions_mm.size(); ++i) {
    const std::uint64_t c = i < sr.counts.size() ? sr.counts[i] : 0;
    out << detail::format_double(sr.positions_mm[i]) << ','
        << detail::format_double(sr.expected_rate[i]) << ',' << c << "\n";
  }
}

inline ScanResult read_scan_csv(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scan file '" + path.string() + "'");
  ScanResult sr;
  sr.mode = ScanMode::position;
  sr.mapping_scale = 1.0;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  static const std::string kMappingPrefix = "# mapping_scale_radpermm_per_mm=";
  static const std::string kHeader = "position_mm,expected_rate,counts";
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind(kMappingPrefix, 0) == 0) {
      sr.mode = ScanMode::momentum;
      try {
        sr.mapping_scale = std::stod(line.substr(kMappingPrefix.size()));
      } catch (const std::exception&) {
        throw DataError(path.string() + " line " + std::to_string(lineno) +
                        ": bad mapping scale");
      }
      continue;
    }
    if (line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader)
        throw DataError(path.string() + " line " + std::to_string(lineno) +
                        ": expected header '" + kHeader + "'");
      header_seen = true;
      continue;
    }
    // data row: three comma-separated fields
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos)
      throw DataError(path.string() + " line " + std::to_string(lineno) +
                      ": expected 3 comma-separated columns");
    try {
      std::size_t p = 0;
      const std::string f1 = line.substr(0, c1);
      const std::string f2 = line.substr(c1 + 1, c2 - c1 - 1);
      const std::string f3 = line.substr(c2 + 1);
      sr.positions_mm.push_back(std::stod(f1, &p));
      if (p != f1.size()) throw std::invalid_argument("trailing");
      sr.expected_rate.push_back(std::stod(f2, &p));
      if (p != f2.size()) throw std::invalid_argument("trailing");
      const long long c = std::stoll(f3, &p);
      if (p != f3.size() || c < 0) throw std::invalid_argument("counts");
      sr.counts.push_back(static_cast<std::uint64_t>(c));
    } catch (const std::exception&) {
      throw DataError(path.string() + " line " + std::to_string(lineno) +
                      ": cannot parse data row");
    }
  }
  if (!header_seen) throw DataError(path.string() + ": missing CSV header");
  if (sr.positions_mm.size() < 3)
    throw DataError(path.string() + ": fewer than 3 data rows");
  for (std::size_t i = 1; i < sr.positions_mm.size(); ++i)
    if (!(sr.positions_mm[i] > sr.positions_mm[i - 1]))
      throw DataError(path.string() + ": scan positions must increase monotonically");
  bool any = false;
  for (auto c : sr.counts) any = any || c > 0;
  if (!any) throw DataError(path.string() + ": all counts are zero");
  sr.config = cfg.scan_config(sr.mode);
  if (sr.mode == ScanMode::momentum && sr.mapping_scale > 0.0) {
    // the file's mapping scale is authoritative for external data
    sr.config.wavenumber_invmm = sr.mapping_scale * sr.config.focal_length_mm;
  }
  sr.mapping_scale = sr.mode == ScanMode::momentum ? sr.mapping_scale : 1.0;
  sr.seed = cfg.seed;
  return sr;
}

inline void write_density_csv(const std::filesystem::path& path, const Density1D& d,
                              const std::string& coord_header) {
  auto out = detail::open_out(path);
  out << coord_header << ",density\n";
  for (std::size_t i = 0; i < d.values.size(); ++i)
    out << detail::format_double(d.grid.point(i)) << ',' << detail::format_double(d.values[i])
        << "\n";
}

/// Plot-ready CSV with the fitted background column (zeros when no
/// subtraction was performed).
inline void write_plot_csv(const std::filesystem::path& path, const ScanResult& sr,
                           bool subtracted) {
  auto out = detail::open_out(path);
  out << "position_mm,expected_rate,counts,fit_background\n";
  std::vector<double> y(sr.counts.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(sr.counts[i]);
  std::vector<double> bg(sr.positions_mm.size(), 0.0);
  if (subtracted) {
    const auto fit = detail::fit_background(sr.positions_mm, y, sr.config.wing_width_factor);
    if (fit) bg = *fit;
  }
  for (std::size_t i = 0; i < sr.positions_mm.size(); ++i) {
    const std::uint64_t c = i < sr.counts.size() ? sr.counts[i] : 0;
    out << detail::format_double(sr.positions_mm[i]) << ','
        << detail::format_double(sr.expected_rate[i]) << ',' << c << ','
        << detail::format_double(bg[i]) << "\n";
  }
}

/// Ordered key=value lines of a criteria report plus the config echo.
inline std::vector<std::pair<std::string, std::string>> report_key_values(
    const CriteriaReport& r, const RunConfig& cfg) {
  using detail::format_double;
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("dx_inf_mm", format_double(r.dx_inf_mm));
  kv.emplace_back("dp_inf_invmm", format_double(r.dp_inf_invmm));
  kv.emplace_back("product_hbar2", format_double(r.product_hbar2));
  kv.emplace_back("dx12_mm", format_double(r.dx12_mm));
  kv.emplace_back("dp12_invmm", format_double(r.dp12_invmm));
  kv.emplace_back("joint_product_hbar2", format_double(r.joint_product_hbar2));
  kv.emplace_back("epr_bound_hbar2", format_double(r.epr_bound));
  kv.emplace_back("mancini_bound_hbar2", format_double(r.mancini_bound));
  kv.emplace_back("epr_violated", r.epr_violated ? "true" : "false");
  kv.emplace_back("inseparable", r.inseparable ? "true" : "false");
  kv.emplace_back("epr_margin", format_double(r.epr_margin));
  kv.emplace_back("epr_margin_log10", format_double(r.epr_margin_log10));
  kv.emplace_back("mancini_margin", format_double(r.mancini_margin));
  kv.emplace_back("mancini_margin_log10", format_double(r.mancini_margin_log10));
  kv.emplace_back("theory_dx_mm", format_double(r.theory_dx_mm));
  kv.emplace_back("theory_dp_invmm", format_double(r.theory_dp_invmm));
  kv.emplace_back("theory_product_hbar2", format_double(r.theory_product_hbar2));
  kv.emplace_back("emission_angular_width_rad", format_double(r.emission_angular_width_rad));
  kv.emplace_back("provenance", to_string(r.provenance));
  kv.emplace_back("seed", std::to_string(r.seed));
  for (const auto& [k, v] : cfg.as_key_values()) kv.emplace_back("config." + k, v);
  return kv;
}

inline void write_report(const std::filesystem::path& dir, const CriteriaReport& r,
                         const RunConfig& cfg, detail::OutputTracker& tracker,
                         const std::string& stem = "report") {
  const auto kv = report_key_values(r, cfg);
  const auto txt_path = dir / (stem + ".txt");
  tracker.track(txt_path);
  {
    auto out = detail::open_out(txt_path);
    for (const auto& [k, v] : kv) out << k << '=' << v << "\n";
  }
  const auto json_path = dir / (stem + ".json");
  tracker.track(json_path);
  {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : kv) j[k] = v;
    auto out = detail::open_out(json_path);
    out << j.dump(2) << "\n";
  }
}

// ---------------------------------------------------------------------------
// pipelines

struct TheoryResult {
  CriteriaReport report;
  TheoryVariances variances;
};

/// Grid-side analysis: conditional densities at the conditioning points,
/// inferred and joint variances, verdicts, CSV curves and the report.
inline TheoryResult run_theory(const RunConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const EngineState st = EngineState::build(cfg);
  TheoryVariances tv = theory_variances(st, cfg);
  const TheoryPrediction theory = theory_predictions(st.model);
  CriteriaReport report =
      CriteriaReport::assemble(tv.dx_inf_sq, tv.dp_inf_sq, tv.dx12_sq, tv.dp12_sq, theory,
                               st.dphi_rad, Provenance::theory_grid, cfg.seed);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    detail::OutputTracker tracker;
    const auto cx_path = *out_dir / "conditional_position.csv";
    tracker.track(cx_path);
    write_density_csv(cx_path, tv.cond_x.density, "position_mm");
    const auto cp_path = *out_dir / "conditional_momentum.csv";
    tracker.track(cp_path);
    write_density_csv(cp_path, tv.cond_p.density, "q_invmm");
    write_report(*out_dir, report, cfg, tracker);
    tracker.release();
  }
  return {report, std::move(tv)};
}

/// Simulated experiment: both slit scans with wings and Poisson counting,
/// scan CSVs, then the same analysis a measured dataset would get.
inline ExperimentResult run_experiment(const RunConfig& cfg,
                                       const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const EngineState st = EngineState::build(cfg);
  const ScanResult pos = simulate_scan(st, cfg.scan_config(ScanMode::position));
  const ScanResult mom = simulate_scan(st, cfg.scan_config(ScanMode::momentum));
  CriteriaReport report = report_from_scans(pos, mom, cfg, Provenance::simulated_scan);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    detail::OutputTracker tracker;
    const auto pos_path = *out_dir / "scan_position.csv";
    tracker.track(pos_path);
    write_scan_csv(pos_path, pos);
    const auto mom_path = *out_dir / "scan_momentum.csv";
    tracker.track(mom_path);
    write_scan_csv(mom_path, mom);
    const auto plot_pos = *out_dir / "plot_position.csv";
    tracker.track(plot_pos);
    write_plot_csv(plot_pos, pos, cfg.background_subtract);
    const auto plot_mom = *out_dir / "plot_momentum.csv";
    tracker.track(plot_mom);
    write_plot_csv(plot_mom, mom, cfg.background_subtract);
    write_report(*out_dir, report, cfg, tracker);
    tracker.release();
  }
  return {report, pos, mom};
}

/// The measured-data path: parse two scan CSVs and evaluate the criteria
/// with the same analysis the simulated experiment uses.
inline CriteriaReport analyze_external(const std::filesystem::path& pos_csv,
                                       const std::filesystem::path& mom_csv,
                                       const RunConfig& cfg,
                                       const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  ScanResult pos = read_scan_csv(pos_csv, cfg);
  ScanResult mom = read_scan_csv(mom_csv, cfg);
  if (pos.mode != ScanMode::position)
    throw DataError(pos_csv.string() + ": expected a position-mode scan (no mapping comment)");
  if (mom.mode != ScanMode::momentum)
    throw DataError(mom_csv.string() + ": expected a momentum-mode scan (mapping comment)");
  CriteriaReport report = report_from_scans(pos, mom, cfg, Provenance::external_data);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    detail::OutputTracker tracker;
    write_report(*out_dir, report, cfg, tracker);
    tracker.release();
  }
  return report;
}

struct FullResult {
  TheoryResult theory;
  ExperimentResult experiment;
};

/// theory + experiment + a small comparison summary.
inline FullResult run_full(const RunConfig& cfg,
                           const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  std::optional<std::filesystem::path> theory_dir, exp_dir;
  if (out_dir) {
    theory_dir = *out_dir / "theory";
    exp_dir = *out_dir / "experiment";
  }
  FullResult fr{run_theory(cfg, theory_dir), run_experiment(cfg, exp_dir)};
  if (out_dir) {
    detail::OutputTracker tracker;
    const auto cmp_path = *out_dir / "comparison.txt";
    tracker.track(cmp_path);
    auto out = detail::open_out(cmp_path);
    using detail::format_double;
    const auto& t = fr.theory.report;
    const auto& e = fr.experiment.report;
    out << "theory_product_hbar2=" << format_double(t.product_hbar2) << "\n";
    out << "experiment_product_hbar2=" << format_double(e.product_hbar2) << "\n";
    out << "experiment_over_theory_product="
        << format_double(e.product_hbar2 / t.product_hbar2) << "\n";
    out << "theory_dx_inf_mm=" << format_double(t.dx_inf_mm) << "\n";
    out << "experiment_dx_inf_mm=" << format_double(e.dx_inf_mm) << "\n";
    out << "theory_dp_inf_invmm=" << format_double(t.dp_inf_invmm) << "\n";
    out << "experiment_dp_inf_invmm=" << format_double(e.dp_inf_invmm) << "\n";
    tracker.release();
  }
  return fr;
}

}  // namespace eprsim
