#pragma once
//! \file
//! Batch commands behind the `mff` executable. Each command takes parsed
//! options, writes its outputs and returns a small report; argument parsing
//! and exit codes live in the executable.

#include "mff/analysis.hpp"
#include "mff/checkpoint.hpp"
#include "mff/config.hpp"
#include "mff/engine.hpp"
#include "mff/gaussian.hpp"
#include "mff/model.hpp"
#include "mff/oracle.hpp"
#include "mff/tables.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace mff::commands {

namespace fs = std::filesystem;
using nlohmann::json;
using tables::fmt;

// ------------------------------------------------------------- simulate ---

inline const std::vector<std::string> kRunOutputs{"entropy.csv", "correlations.csv", "autocorr.csv", "orbitals.csv",
                                                  "entropy_time.csv"};
inline constexpr const char* kManifestName = "manifest.json";

struct SimulateOptions {
  //! Fail unless the output directory already holds a manifest.
  bool resume = false;
  //! Stop after this many trajectory steps in total, leaving checkpoints
  //! behind. Used to exercise interruption.
  std::optional<std::int64_t> step_budget;
};

enum class RunStatus { complete, interrupted, unchanged };

struct SimulateReport {
  RunStatus status = RunStatus::complete;
  fs::path out_dir;
  std::size_t units_total = 0;
  std::size_t units_done = 0;
};

namespace detail {

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw ParameterError("cannot write " + tmp.string());
    f << text;
  }
  fs::rename(tmp, path);
}

inline json config_json(const config::RunConfig& cfg) {
  const auto& e = cfg.ensemble;
  return {{"gamma", e.gammas},
          {"W", e.Ws},
          {"L", e.Ls},
          {"dt", e.dt},
          {"boundary", std::string(to_string(e.boundary))},
          {"nnn", e.nnn},
          {"filling", "half"},
          {"n_disorder", e.n_disorder},
          {"n_traj", e.n_traj},
          {"master_seed", e.master_seed},
          {"t_total", e.t_total},
          {"t_total_per_site", e.t_total_per_site},
          {"t_sat", e.t_sat},
          {"t_sat_per_site", e.t_sat_per_site},
          {"record_interval", e.record_interval},
          {"cuts", e.observables.cuts},
          {"profile_stride", e.observables.profile_stride},
          {"correlations", e.observables.correlations},
          {"autocorrelation", e.observables.autocorrelation},
          {"orbitals", e.observables.orbitals},
          {"out", cfg.out_dir},
          {"workers", cfg.workers},
          {"checkpoint_interval", cfg.checkpoint_interval}};
}

inline json manifest_json(const config::RunConfig& cfg, const std::string& status,
                          const std::vector<CellSummary>* summaries) {
  const auto& e = cfg.ensemble;
  json cells = json::array();
  const auto grid = e.cells();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const auto& cell = grid[c];
    json seeds = json::array();
    for (int k = 0; k < e.n_disorder; ++k) seeds.push_back(config::hex(disorder_seed(e.master_seed, cell, k)));
    json j{{"gamma", cell.gamma},
           {"W", cell.W},
           {"L", cell.L},
           {"noise_key", config::hex(noise_cell_key(cell, e.dt))},
           {"disorder_seeds", seeds}};
    if (summaries) {
      const auto& s = summaries->at(c);
      j["n_completed"] = s.n_completed;
      j["n_aborted"] = s.n_aborted;
      j["max_trace_error"] = s.max_trace_error;
    }
    cells.push_back(std::move(j));
  }
  return {{"config_hash", config::hex(config::config_hash(e))},
          {"code_version", config::kCodeVersion},
          {"status", status},
          {"config", config_json(cfg)},
          {"cells", cells},
          {"outputs", status == "complete" ? json(kRunOutputs) : json::array()}};
}

inline void write_manifest(const fs::path& dir, const json& m) {
  write_text_atomic(dir / kManifestName, m.dump(2) + "\n");
}

inline std::vector<std::string> cell_fields(const GridCell& c) { return {fmt(c.gamma), fmt(c.W), std::to_string(c.L)}; }

inline std::string index_field(Observable o, double index) {
  if (o == Observable::autocorrelation || o == Observable::entropy_time) return fmt(index);
  return std::to_string(static_cast<long long>(std::llround(index)));
}

inline void write_tables(const fs::path& dir, const EnsembleResult& res) {
  tables::CsvWriter entropy({"gamma", "W", "L", "l", "S_mean", "S_stderr", "n"});
  tables::CsvWriter corr({"gamma", "W", "L", "r", "C_mean", "C_stderr"});
  tables::CsvWriter autoc({"gamma", "W", "L", "tau", "C_mean", "C_stderr"});
  tables::CsvWriter orb({"gamma", "W", "L", "offset", "density_mean"});
  tables::CsvWriter series({"gamma", "W", "L", "t", "S_mean", "S_stderr", "n"});
  for (const auto& s : res.stats) {
    auto row = cell_fields(s.cell);
    row.push_back(index_field(s.observable, s.index));
    row.push_back(fmt(s.mean));
    switch (s.observable) {
      case Observable::entropy:
        row.push_back(fmt(s.std_error));
        row.push_back(std::to_string(s.n_samples));
        entropy.row(row);
        break;
      case Observable::correlation:
        row.push_back(fmt(s.std_error));
        corr.row(row);
        break;
      case Observable::autocorrelation:
        row.push_back(fmt(s.std_error));
        autoc.row(row);
        break;
      case Observable::orbital:
        orb.row(row);
        break;
      case Observable::entropy_time:
        row.push_back(fmt(s.std_error));
        row.push_back(std::to_string(s.n_samples));
        series.row(row);
        break;
    }
  }
  entropy.save(dir / "entropy.csv");
  corr.save(dir / "correlations.csv");
  autoc.save(dir / "autocorr.csv");
  orb.save(dir / "orbitals.csv");
  series.save(dir / "entropy_time.csv");
}

inline std::string unit_stem(const WorkUnit& u) {
  return "c" + std::to_string(u.cell) + "_d" + std::to_string(u.disorder) + "_t" + std::to_string(u.trajectory);
}

//! Shared countdown of steps for interruption tests.
class StepBudget {
 public:
  explicit StepBudget(std::optional<std::int64_t> total) : limited_(total.has_value()), left_(total.value_or(0)) {}
  std::int64_t take(std::int64_t want) {
    if (!limited_) return want;
    auto cur = left_.load();
    while (cur > 0) {
      const auto got = std::min(cur, want);
      if (left_.compare_exchange_weak(cur, cur - got)) return got;
    }
    return 0;
  }

 private:
  bool limited_;
  std::atomic<std::int64_t> left_;
};

}  // namespace detail

//! Runs (or resumes) the ensemble described by `cfg` into cfg.out_dir.
//! Finished units are stored under units/, in-flight trajectories under
//! checkpoints/; a rerun skips whatever is already on disk.
inline SimulateReport cmd_simulate(const config::RunConfig& cfg, const SimulateOptions& opt = {}) {
  const auto& spec = cfg.ensemble;
  spec.validate();
  const fs::path dir = cfg.out_dir;
  const auto hash = config::config_hash(spec);
  const auto manifest_path = dir / kManifestName;
  const auto units = enumerate_units(spec);
  const auto cells = spec.cells();

  SimulateReport report{RunStatus::complete, dir, units.size(), 0};
  bool previously_complete = false;
  if (fs::exists(manifest_path)) {
    json old;
    try {
      std::ifstream f(manifest_path);
      old = json::parse(f);
    } catch (const json::exception& e) {
      throw config::ConfigError(0, "unreadable manifest " + manifest_path.string() + ": " + e.what());
    }
    const std::string old_hash = old.value("config_hash", "");
    if (old_hash != config::hex(hash))
      throw config::ConfigError(0, "output directory " + dir.string() + " holds a run with config hash " + old_hash +
                                       ", this config hashes to " + config::hex(hash));
    previously_complete = old.value("status", "") == "complete";
  } else if (opt.resume) {
    throw config::ConfigError(0, "nothing to resume: no manifest in " + dir.string());
  }
  fs::create_directories(dir / "units");
  fs::create_directories(dir / "checkpoints");
  if (!previously_complete) detail::write_manifest(dir, detail::manifest_json(cfg, "running", nullptr));

  std::vector<UnitOutcome> outcomes(units.size());
  std::vector<char> finished(units.size(), 0);
  detail::StepBudget budget(opt.step_budget);

  parallel_for(units.size(), cfg.workers, [&](std::size_t i) {
    const auto& u = units[i];
    const io::UnitTag tag{hash, u.cell, u.disorder, u.trajectory};
    const auto result_path = dir / "units" / (detail::unit_stem(u) + ".bin");
    const auto ckpt_path = dir / "checkpoints" / (detail::unit_stem(u) + ".bin");
    if (fs::exists(result_path)) {
      auto [t, o] = io::decode_outcome(io::ChunkReader::load(result_path, io::PayloadKind::unit_result));
      if (!(t == tag)) throw io::FormatError("unit file " + result_path.string() + " belongs to another run");
      outcomes[i] = std::move(o);
      finished[i] = 1;
      return;
    }
    const GridCell& cell = cells[u.cell];
    const auto sched = spec.schedule(cell.L);
    const auto model = spec.model(cell);
    const auto dis = unit_disorder(spec, cell, u);
    const auto noise = unit_noise(spec, cell, u);
    UnitOutcome outcome;
    try {
      std::optional<TrajectoryRunner> runner;
      if (fs::exists(ckpt_path)) {
        auto [t, c] = io::decode_checkpoint(io::ChunkReader::load(ckpt_path, io::PayloadKind::checkpoint));
        if (!(t == tag)) throw io::FormatError("checkpoint " + ckpt_path.string() + " belongs to another run");
        runner.emplace(model, dis, sched, noise, spec.observables, std::move(c));
      } else {
        runner.emplace(model, dis, sched, noise, spec.observables);
      }
      while (!runner->done()) {
        const auto chunk = budget.take(cfg.checkpoint_interval);
        if (chunk > 0) runner->advance(chunk);
        if (runner->done()) break;
        io::encode_checkpoint(tag, runner->checkpoint()).save(ckpt_path);
        if (chunk == 0) return;
      }
      outcome = summarize(runner->record(), sched);
    } catch (const NumericalDegeneracyError&) {
      outcome = std::nullopt;
    }
    io::encode_outcome(tag, outcome).save(result_path);
    fs::remove(ckpt_path);
    outcomes[i] = std::move(outcome);
    finished[i] = 1;
  });

  report.units_done = static_cast<std::size_t>(std::count(finished.begin(), finished.end(), 1));
  if (report.units_done < units.size()) {
    detail::write_manifest(dir, detail::manifest_json(cfg, "interrupted", nullptr));
    report.status = RunStatus::interrupted;
    return report;
  }
  EnsembleResult res;
  try {
    res = reduce_ensemble(spec, outcomes);
  } catch (const NumericalDegeneracyError&) {
    detail::write_manifest(dir, detail::manifest_json(cfg, "failed", nullptr));
    throw;
  }
  const bool outputs_present =
      std::all_of(kRunOutputs.begin(), kRunOutputs.end(), [&](const auto& n) { return fs::exists(dir / n); });
  if (previously_complete && outputs_present) {
    report.status = RunStatus::unchanged;
    return report;
  }
  detail::write_tables(dir, res);
  detail::write_manifest(dir, detail::manifest_json(cfg, "complete", &res.cells));
  return report;
}

// ------------------------------------------------------------------ fit ---

enum class FitMode { half_chain, profile };

inline FitMode parse_fit_mode(const std::string& s) {
  if (s == "half-chain") return FitMode::half_chain;
  if (s == "profile") return FitMode::profile;
  throw ParameterError("unknown fit mode '" + s + "' (expected half-chain or profile)");
}

struct FitRow {
  double gamma = 0.0;
  double W = 0.0;
  std::optional<int> L;
  std::optional<analysis::CftFit> fit;
  //! "ok", or "skipped: <reason>".
  std::string status;
};

//! Fits every (gamma, W) cell (half-chain) or (gamma, W, L) cell (profile)
//! of an entropy table. Cells that cannot be fitted yield a skipped row.
inline std::vector<FitRow> fit_entropy_table(const tables::Table& t, FitMode mode, analysis::FitWindow window = {}) {
  std::vector<FitRow> out;
  if (t.size() == 0) return out;
  t.require_columns({"gamma", "W", "L", "l", "S_mean", "S_stderr"});
  using Key = std::tuple<double, double, int>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const int L = static_cast<int>(t.value(r, "L"));
    groups[{t.value(r, "gamma"), t.value(r, "W"), mode == FitMode::profile ? L : 0}].push_back(r);
  }
  for (const auto& [key, rows] : groups) {
    const auto& [gamma, W, L] = key;
    FitRow row{gamma, W, mode == FitMode::profile ? std::optional<int>(L) : std::nullopt, std::nullopt, "ok"};
    try {
      if (mode == FitMode::half_chain) {
        std::vector<analysis::SizePoint> pts;
        for (auto r : rows) {
          const int size = static_cast<int>(t.value(r, "L"));
          if (static_cast<int>(t.value(r, "l")) != size / 2) continue;
          pts.push_back({size, t.value(r, "S_mean"), t.number(r, "S_stderr").value_or(0.0)});
        }
        row.fit = analysis::fit_half_chain_charge(pts);
      } else {
        std::vector<analysis::CutPoint> pts;
        for (auto r : rows)
          pts.push_back({static_cast<int>(t.value(r, "l")), t.value(r, "S_mean"), t.number(r, "S_stderr").value_or(0.0)});
        row.fit = analysis::fit_profile_charge(pts, L, window);
      }
    } catch (const ParameterError& e) {
      row.status = std::string("skipped: ") + e.what();
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline tables::CsvWriter fit_report(const std::vector<FitRow>& rows, FitMode mode) {
  std::vector<std::string> header{"gamma", "W"};
  if (mode == FitMode::profile) header.push_back("L");
  for (const char* h : {"c", "s0", "stderr_c", "window", "status"}) header.push_back(h);
  tables::CsvWriter w(header);
  for (const auto& r : rows) {
    std::vector<std::string> f{fmt(r.gamma), fmt(r.W)};
    if (mode == FitMode::profile) f.push_back(std::to_string(r.L.value_or(0)));
    if (r.fit) {
      std::string win;
      for (int v : r.fit->window) win += (win.empty() ? "" : ";") + std::to_string(v);
      for (auto s : {fmt(r.fit->c), fmt(r.fit->s0), fmt(r.fit->stderr_c), win}) f.push_back(s);
    } else {
      f.insert(f.end(), 4, std::string());
    }
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    f.push_back(status);
    w.row(f);
  }
  return w;
}

inline std::vector<FitRow> cmd_fit(const fs::path& entropy_csv, const fs::path& out_csv, FitMode mode,
                                   analysis::FitWindow window = {}) {
  auto rows = fit_entropy_table(tables::Table::load(entropy_csv), mode, window);
  fit_report(rows, mode).save(out_csv);
  return rows;
}

// ------------------------------------------------------------- collapse ---

enum class Ansatz { entropy, charge };

inline Ansatz parse_ansatz(const std::string& s) {
  if (s == "eq4" || s == "entropy") return Ansatz::entropy;
  if (s == "eq5" || s == "charge") return Ansatz::charge;
  throw ParameterError("unknown ansatz '" + s + "' (expected eq4 or eq5)");
}

inline analysis::Driving parse_driving(const std::string& s) {
  if (s == "gamma") return analysis::Driving::gamma;
  if (s == "W") return analysis::Driving::W;
  throw ParameterError("unknown driving parameter '" + s + "' (expected gamma or W)");
}

struct CollapseOptions {
  Ansatz ansatz = Ansatz::entropy;
  analysis::Driving driving = analysis::Driving::gamma;
  analysis::SearchRange critical;
  analysis::SearchRange alpha{0.5, 8.0, 31};
  analysis::SearchRange beta{0.0, 10.0, 31};
};

struct CollapseRow {
  double fixed = 0.0;
  std::optional<analysis::CollapseResult> result;
  std::vector<analysis::LabelledTriple> triples;
  std::string status;
};

//! Builds scaling data from an entropy table (eq4, half-chain rows) or a
//! profile fit report (eq5) and collapses each fixed-parameter slice.
inline std::vector<CollapseRow> collapse_table(const tables::Table& t, const CollapseOptions& opt) {
  opt.critical.validate("the critical point");
  if (opt.ansatz == Ansatz::charge) {
    opt.alpha.validate("alpha");
    opt.beta.validate("beta");
  }
  std::vector<CollapseRow> out;
  if (t.size() == 0) return out;
  const bool by_gamma = opt.driving == analysis::Driving::gamma;
  std::map<double, std::vector<analysis::ScalingPoint>> slices;
  if (opt.ansatz == Ansatz::entropy) {
    t.require_columns({"gamma", "W", "L", "l", "S_mean", "S_stderr"});
    for (std::size_t r = 0; r < t.size(); ++r) {
      const int L = static_cast<int>(t.value(r, "L"));
      if (static_cast<int>(t.value(r, "l")) != L / 2) continue;
      const double g = t.value(r, "gamma"), w = t.value(r, "W");
      slices[by_gamma ? w : g].push_back(
          {L, by_gamma ? g : w, t.value(r, "S_mean"), t.number(r, "S_stderr").value_or(0.0)});
    }
  } else {
    t.require_columns({"gamma", "W", "L", "c", "stderr_c", "status"});
    for (std::size_t r = 0; r < t.size(); ++r) {
      if (t.field(r, "status") != "ok") continue;
      const double g = t.value(r, "gamma"), w = t.value(r, "W");
      slices[by_gamma ? w : g].push_back(
          {static_cast<int>(t.value(r, "L")), by_gamma ? g : w, t.value(r, "c"), t.value(r, "stderr_c")});
    }
  }
  for (const auto& [fixed, data] : slices) {
    CollapseRow row{fixed, std::nullopt, {}, ""};
    try {
      if (opt.ansatz == Ansatz::entropy) {
        auto res = analysis::collapse_entropy(data, opt.critical);
        row.triples = analysis::entropy_collapse_points(data, res.critical);
        row.result = res;
      } else {
        auto res = analysis::collapse_charge(data, {opt.critical, opt.alpha, opt.beta});
        row.triples = analysis::charge_collapse_points(data, res.critical, *res.alpha, *res.beta);
        row.result = res;
      }
      row.status = row.result->status();
    } catch (const ParameterError& e) {
      row.status = std::string("skipped: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline tables::CsvWriter collapse_report(const std::vector<CollapseRow>& rows, const CollapseOptions& opt) {
  tables::CsvWriter w({"ansatz", "driving", "fixed", "critical", "critical_lo", "critical_hi", "alpha", "alpha_lo",
                       "alpha_hi", "beta", "beta_lo", "beta_hi", "eps_min", "status"});
  const std::string ansatz = opt.ansatz == Ansatz::entropy ? "eq4" : "eq5";
  const std::string driving = opt.driving == analysis::Driving::gamma ? "gamma" : "W";
  for (const auto& r : rows) {
    std::vector<std::string> f{ansatz, driving, fmt(r.fixed)};
    if (r.result) {
      const auto& c = *r.result;
      auto lo = [](const std::optional<analysis::Interval>& i) { return i ? fmt(i->lo) : std::string(); };
      auto hi = [](const std::optional<analysis::Interval>& i) { return i ? fmt(i->hi) : std::string(); };
      for (auto s : {fmt(c.critical), fmt(c.critical_interval.lo), fmt(c.critical_interval.hi), fmt(c.alpha),
                     lo(c.alpha_interval), hi(c.alpha_interval), fmt(c.beta), lo(c.beta_interval), hi(c.beta_interval),
                     fmt(c.eps_min)})
        f.push_back(s);
    } else {
      f.insert(f.end(), 10, std::string());
    }
    f.push_back(r.status);
    w.row(f);
  }
  return w;
}

inline tables::CsvWriter collapse_triples(const std::vector<CollapseRow>& rows) {
  tables::CsvWriter w({"fixed", "L", "p", "x", "y", "d"});
  for (const auto& r : rows)
    for (const auto& q : r.triples)
      w.row({fmt(r.fixed), std::to_string(q.L), fmt(q.p), fmt(q.t.x), fmt(q.t.y), fmt(q.t.d)});
  return w;
}

inline std::vector<CollapseRow> cmd_collapse(const fs::path& input, const fs::path& out_csv, const CollapseOptions& opt,
                                             const std::optional<fs::path>& triples_csv = std::nullopt) {
  opt.critical.validate("the critical point");
  auto rows = collapse_table(tables::Table::load(input), opt);
  collapse_report(rows, opt).save(out_csv);
  if (triples_csv) collapse_triples(rows).save(*triples_csv);
  return rows;
}

// --------------------------------------------------------- oracle check ---

struct OracleCheckConfig {
  int L = 6;
  double gamma = 0.1;
  double W = 1.0;
  double dt = 0.05;
  int steps = 50;
  std::uint64_t seed = 1;
  Boundary boundary = Boundary::periodic;
  bool nnn = false;
  MeasurementConvention convention = MeasurementConvention::pre_step;
  double tolerance = 1e-8;
};

inline OracleCheckConfig parse_oracle_config(config::KeyValues kv) {
  config::Reader r(std::move(kv));
  OracleCheckConfig c;
  c.L = r.get<int>("L", c.L);
  c.gamma = r.get<double>("gamma", c.gamma);
  c.W = r.get<double>("W", c.W);
  c.dt = r.get<double>("dt", c.dt);
  c.steps = r.get<int>("steps", c.steps);
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.nnn = r.get<bool>("nnn", c.nnn);
  c.tolerance = r.get<double>("tolerance", c.tolerance);
  if (r.has("boundary")) {
    try {
      c.boundary = parse_boundary(r.get<std::string>("boundary"));
    } catch (const ParameterError& e) {
      throw config::ConfigError(r.line("boundary"), e.what());
    }
  }
  if (r.has("convention")) {
    const auto s = r.get<std::string>("convention");
    if (s == "pre_step") c.convention = MeasurementConvention::pre_step;
    else if (s == "post_unitary") c.convention = MeasurementConvention::post_unitary;
    else throw config::ConfigError(r.line("convention"), "'convention' must be pre_step or post_unitary");
  }
  if (c.L < 2 || c.L % 2) throw config::ConfigError(r.line("L"), "'L' must be even and at least 2");
  if (c.steps < 0) throw config::ConfigError(r.line("steps"), "'steps' must be non-negative");
  if (!(c.tolerance > 0.0)) throw config::ConfigError(r.line("tolerance"), "'tolerance' must be positive");
  r.reject_unknown();
  return c;
}

struct OracleReport {
  double max_d = 0.0;
  double max_entropy = 0.0;
  double max_density = 0.0;
  int steps = 0;
  double tolerance = 0.0;
  bool pass() const { return max_d <= tolerance && max_entropy <= tolerance && max_density <= tolerance; }
};

//! Evolves the Gaussian state and the exact sector wavefunction with the
//! same noise and compares D, S(l) for every prefix, and the connected
//! density-density function, after every step.
inline OracleReport cmd_oracle_check(const OracleCheckConfig& c) {
  const ModelSpec spec{c.L, c.W, c.gamma, c.dt, c.boundary, c.nnn, std::nullopt};
  spec.validate();
  const oracle::FockBasis basis(c.L, c.L / 2);
  const GridCell cell{c.gamma, c.W, c.L};
  const auto dis = sample_disorder(c.W, c.L, disorder_seed(c.seed, cell, 0));
  const auto H = build_hamiltonian(spec, dis);
  const auto prop = make_propagator(H, c.dt);
  const oracle::ExactPropagator exact_prop(basis, H, c.dt);
  const NoiseSource src{c.seed, noise_cell_key(cell, c.dt), 0, 0};

  GaussianState g = neel_state(c.L);
  oracle::FockState psi = oracle::neel(basis);
  OracleReport rep{0.0, 0.0, 0.0, c.steps, c.tolerance};
  auto compare = [&] {
    const auto D = correlation_matrix(g);
    const auto ex = oracle::exact_observables(basis, psi);
    rep.max_d = std::max(rep.max_d, (D.d - ex.D).cwiseAbs().maxCoeff());
    for (int l = 1; l < c.L; ++l)
      rep.max_entropy = std::max(rep.max_entropy, std::abs(cut_entropy(D, l) - ex.entropy[l - 1]));
    for (int i = 0; i < c.L; ++i)
      for (int j = 0; j < c.L; ++j) {
        if (i == j) continue;
        const double wick = std::norm(D.d(i, j));
        const double exact = ex.D(i, i).real() * ex.D(j, j).real() - ex.density_density(i, j);
        rep.max_density = std::max(rep.max_density, std::abs(wick - exact));
      }
  };
  compare();
  for (int s = 0; s < c.steps; ++s) {
    const VectorXr noise = generate_noise(src, s, c.L, c.gamma, c.dt);
    g = apply_step(g, prop, noise, c.gamma, c.dt, c.convention);
    psi = oracle::exact_step(basis, psi, exact_prop, noise, c.gamma, c.dt);
    compare();
  }
  return rep;
}

// ------------------------------------------------------------- dt check ---

//! Runs the single cell of `cfg` at each dt and writes the per-time
//! deviations (in combined standard errors) against the first dt.
inline DtReport cmd_dt_check(const config::RunConfig& cfg, const std::vector<double>& dts, const fs::path& out_csv) {
  auto report = dt_convergence_check(cfg.ensemble, dts, cfg.workers);
  tables::CsvWriter w({"dt_reference", "dt", "t", "deviation_sigma"});
  for (const auto& cmp : report.comparisons)
    for (const auto& [t, dev] : cmp.deviations)
      w.row({fmt(cmp.dt_reference), fmt(cmp.dt), fmt(t), std::isfinite(dev) ? fmt(dev) : std::string()});
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  w.save(out_csv);
  return report;
}

}  // namespace mff::commands
