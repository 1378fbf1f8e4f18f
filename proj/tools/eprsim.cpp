// Command-line front end for the EPR slit-scan simulator.
//
// Subcommands: theory, experiment, analyze, full.  Each accepts --config,
// --out and --seed; analyze additionally takes the two scan CSVs.
// Exit codes: 0 success, 2 config error, 3 data/schema error,
// 4 numerical degeneracy, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "eprsim/eprsim.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value configuration file");
  cmd->add_option("--out", args.out_dir, "output directory")->capture_default_str();
  cmd->add_option("--seed", args.seed, "override the configured seed");
}

eprsim::RunConfig resolve_config(const CommonArgs& args) {
  eprsim::RunConfig cfg;
  if (!args.config_path.empty()) cfg = eprsim::load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  cfg.validate();
  return cfg;
}

void print_summary(const eprsim::CriteriaReport& r) {
  std::printf("dx_inf = %.6g mm, dp_inf = %.6g hbar/mm\n", r.dx_inf_mm, r.dp_inf_invmm);
  std::printf("inferred variance product = %.6g hbar^2 (EPR bound 0.25: %s, margin %.3g)\n",
              r.product_hbar2, r.epr_violated ? "violated" : "satisfied", r.epr_margin);
  std::printf("joint variance product    = %.6g hbar^2 (bound 1.0: %s, margin %.3g)\n",
              r.joint_product_hbar2, r.inseparable ? "inseparable" : "not shown inseparable",
              r.mancini_margin);
  std::printf("theory: dx = %.6g mm, dp = %.6g hbar/mm, product = %.6g hbar^2\n",
              r.theory_dx_mm, r.theory_dp_invmm, r.theory_product_hbar2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biphoton momentum-position correlation simulator"};
  app.require_subcommand(1);

  CommonArgs theory_args, exp_args, full_args, analyze_args;
  std::string pos_csv, mom_csv;

  CLI::App* theory = app.add_subcommand("theory", "grid-side conditional analysis");
  add_common(theory, theory_args);
  CLI::App* experiment =
      app.add_subcommand("experiment", "simulated slit scans with counting statistics");
  add_common(experiment, exp_args);
  CLI::App* full = app.add_subcommand("full", "theory + experiment + comparison");
  add_common(full, full_args);
  CLI::App* analyze = app.add_subcommand("analyze", "evaluate criteria on measured scan CSVs");
  add_common(analyze, analyze_args);
  analyze->add_option("--pos", pos_csv, "position-mode scan CSV")->required();
  analyze->add_option("--mom", mom_csv, "momentum-mode scan CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (theory->parsed()) {
      const auto cfg = resolve_config(theory_args);
      const auto res = eprsim::run_theory(cfg, std::filesystem::path(theory_args.out_dir));
      print_summary(res.report);
      std::printf("outputs written to %s\n", theory_args.out_dir.c_str());
    } else if (experiment->parsed()) {
      const auto cfg = resolve_config(exp_args);
      const auto res = eprsim::run_experiment(cfg, std::filesystem::path(exp_args.out_dir));
      print_summary(res.report);
      std::printf("outputs written to %s\n", exp_args.out_dir.c_str());
    } else if (full->parsed()) {
      const auto cfg = resolve_config(full_args);
      const auto res = eprsim::run_full(cfg, std::filesystem::path(full_args.out_dir));
      std::printf("== theory ==\n");
      print_summary(res.theory.report);
      std::printf("== experiment ==\n");
      print_summary(res.experiment.report);
      std::printf("outputs written to %s\n", full_args.out_dir.c_str());
    } else if (analyze->parsed()) {
      const auto cfg = resolve_config(analyze_args);
      const auto report = eprsim::analyze_external(pos_csv, mom_csv, cfg,
                                                   std::filesystem::path(analyze_args.out_dir));
      print_summary(report);
      std::printf("report written to %s\n", analyze_args.out_dir.c_str());
    }
  } catch (const eprsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const eprsim::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const eprsim::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
