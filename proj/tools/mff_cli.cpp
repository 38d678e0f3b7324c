// mff: command-line driver for monitored free-fermion simulations.
//
// Exit codes: 0 success, 1 usage, 2 validation failure, 3 numerical failure.

#include "mff/commands.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kNumerical = 3;

int default_workers() {
  if (const char* env = std::getenv("MFF_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid MFF_WORKERS='" << env << "'\n";
  }
  return 1;
}

mff::analysis::SearchRange parse_range(const std::string& s, int default_grid) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  if (v.size() != 2 && v.size() != 3) throw mff::ParameterError("range '" + s + "' must be lo,hi or lo,hi,grid");
  return {v[0], v[1], v.size() == 3 ? static_cast<int>(v[2]) : default_grid};
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mff;
  CLI::App app{"Monitored free fermions: trajectories, fits and scaling collapses"};
  app.require_subcommand(1);

  int workers = default_workers();

  auto* sim = app.add_subcommand("simulate", "Run or resume an ensemble and write tables");
  std::string sim_config, sim_out;
  bool sim_resume = false;
  std::int64_t stop_after = -1;
  sim->add_option("--config", sim_config, "Run configuration file")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory (overrides the config)");
  sim->add_option("--workers", workers, "Worker threads (default: $MFF_WORKERS or 1)")->check(CLI::PositiveNumber);
  sim->add_flag("--resume", sim_resume, "Require an existing partial run in the output directory");
  sim->add_option("--stop-after-steps", stop_after, "Interrupt after this many trajectory steps")
      ->group("");

  auto* fit = app.add_subcommand("fit", "Fit effective central charges from entropy.csv");
  std::string fit_in, fit_out = "fit.csv", fit_mode = "half-chain";
  double win_lo = 0.25, win_hi = 0.75;
  fit->add_option("input", fit_in, "entropy.csv")->required()->check(CLI::ExistingFile);
  fit->add_option("--mode", fit_mode, "half-chain or profile")->check(CLI::IsMember({"half-chain", "profile"}));
  fit->add_option("--out", fit_out, "Report path");
  fit->add_option("--window-lo", win_lo, "Lower cut bound as a fraction of L (profile mode)");
  fit->add_option("--window-hi", win_hi, "Upper cut bound as a fraction of L (profile mode)");

  auto* col = app.add_subcommand("collapse", "BKT scaling collapse of entropies or fitted charges");
  std::string col_in, col_out = "collapse.csv", col_ansatz = "eq4", col_driving = "gamma", col_range;
  std::string col_alpha = "0.5,8,31", col_beta = "0,10,31", col_triples;
  col->add_option("input", col_in, "entropy.csv (eq4) or a profile fit report (eq5)")
      ->required()
      ->check(CLI::ExistingFile);
  col->add_option("--ansatz", col_ansatz, "eq4 (entropy) or eq5 (central charge)")
      ->check(CLI::IsMember({"eq4", "eq5"}));
  col->add_option("--driving", col_driving, "Driving parameter: gamma or W")->check(CLI::IsMember({"gamma", "W"}));
  col->add_option("--range", col_range, "Critical-point search range lo,hi[,grid]")->required();
  col->add_option("--alpha-range", col_alpha, "alpha search range lo,hi[,grid] (eq5)");
  col->add_option("--beta-range", col_beta, "beta search range lo,hi[,grid] (eq5)");
  col->add_option("--out", col_out, "Report path");
  col->add_option("--triples", col_triples, "Also write rescaled (x, y, d) points here");

  auto* orc = app.add_subcommand("oracle-check", "Compare the Gaussian engine with exact evolution");
  std::string orc_config, orc_convention;
  orc->add_option("--config", orc_config, "key = value file (L, gamma, W, dt, steps, seed, ...)")
      ->check(CLI::ExistingFile);
  orc->add_option("--convention", orc_convention, "Override: pre_step or post_unitary")
      ->check(CLI::IsMember({"pre_step", "post_unitary"}));

  auto* dtc = app.add_subcommand("dt-check", "Compare S(t) across time steps for one grid cell");
  std::string dt_config, dt_out = "dt_check.csv";
  std::vector<double> dts{0.01, 0.05};
  double dt_threshold = 3.0;
  dtc->add_option("--config", dt_config, "Run configuration with a single grid cell")
      ->required()
      ->check(CLI::ExistingFile);
  dtc->add_option("--dt", dts, "Time steps; the first is the reference")->delimiter(',');
  dtc->add_option("--out", dt_out, "Report path");
  dtc->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  dtc->add_option("--threshold", dt_threshold, "Maximum allowed deviation in combined standard errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*sim) {
      auto cfg = config::load_run_config(sim_config);
      if (!sim_out.empty()) cfg.out_dir = sim_out;
      cfg.workers = workers;
      commands::SimulateOptions opt;
      opt.resume = sim_resume;
      if (stop_after >= 0) opt.step_budget = stop_after;
      const auto rep = commands::cmd_simulate(cfg, opt);
      const char* status = rep.status == commands::RunStatus::complete      ? "complete"
                           : rep.status == commands::RunStatus::unchanged ? "unchanged"
                                                                            : "interrupted";
      std::cout << status << ": " << rep.units_done << "/" << rep.units_total << " units in "
                << rep.out_dir.string() << "\n";
      return 0;
    }
    if (*fit) {
      const auto rows = commands::cmd_fit(fit_in, fit_out, commands::parse_fit_mode(fit_mode), {win_lo, win_hi});
      for (const auto& r : rows)
        if (r.status != "ok") std::cerr << "warning: gamma=" << r.gamma << " W=" << r.W << ": " << r.status << "\n";
      std::cout << rows.size() << " fit rows written to " << fit_out << "\n";
      return 0;
    }
    if (*col) {
      commands::CollapseOptions opt;
      opt.ansatz = commands::parse_ansatz(col_ansatz);
      opt.driving = commands::parse_driving(col_driving);
      opt.critical = parse_range(col_range, 101);
      opt.alpha = parse_range(col_alpha, 31);
      opt.beta = parse_range(col_beta, 31);
      std::optional<std::filesystem::path> triples;
      if (!col_triples.empty()) triples = col_triples;
      const auto rows = commands::cmd_collapse(col_in, col_out, opt, triples);
      for (const auto& r : rows)
        if (r.status != "ok") std::cerr << "warning: fixed=" << r.fixed << ": " << r.status << "\n";
      std::cout << rows.size() << " collapse rows written to " << col_out << "\n";
      return 0;
    }
    if (*orc) {
      commands::OracleCheckConfig c;
      if (!orc_config.empty()) c = commands::parse_oracle_config(config::load_key_values(orc_config));
      if (orc_convention == "pre_step") c.convention = MeasurementConvention::pre_step;
      if (orc_convention == "post_unitary") c.convention = MeasurementConvention::post_unitary;
      const auto rep = commands::cmd_oracle_check(c);
      std::printf("L=%d steps=%d max|dD|=%.3e max|dS|=%.3e max|dC|=%.3e tolerance=%.1e %s\n", c.L, rep.steps,
                  rep.max_d, rep.max_entropy, rep.max_density, rep.tolerance, rep.pass() ? "PASS" : "FAIL");
      return rep.pass() ? 0 : kValidation;
    }
    if (*dtc) {
      auto cfg = config::load_run_config(dt_config);
      cfg.workers = workers;
      const auto rep = commands::cmd_dt_check(cfg, dts, dt_out);
      const double dev = rep.max_deviation();
      const bool ok = dev <= dt_threshold;
      std::printf("max deviation %.3f combined standard errors (threshold %.2f) %s\n", dev, dt_threshold,
                  ok ? "PASS" : "FAIL");
      return ok ? 0 : kValidation;
    }
  } catch (const NumericalDegeneracyError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}
