#pragma once
//! \file
//! Trajectory driver and ensemble orchestration.
//!
//! A work unit is one (grid cell, disorder realization, trajectory) triple.
//! Units share no mutable state; their noise and disorder come from
//! counter-based streams keyed by the unit identity, and the reduction runs
//! in fixed unit order, so results do not depend on the worker count.

#include "mff/core.hpp"
#include "mff/gaussian.hpp"
#include "mff/model.hpp"
#include "mff/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace mff {

// ---------------------------------------------------------------- noise ---

struct NoiseSource {
  std::uint64_t master_seed = 0;
  //! Qualifies the stream by grid cell (see noise_cell_key).
  std::uint64_t cell_key = 0;
  std::uint64_t disorder_index = 0;
  std::uint64_t trajectory_index = 0;

  rng::CounterRng generator() const {
    return rng::CounterRng(rng::derive_key({static_cast<std::uint64_t>(rng::Tag::noise), master_seed, cell_key,
                                            disorder_index, trajectory_index}));
  }
};

//! Ito increments for one step: L draws from N(0, gamma dt).
inline VectorXr generate_noise(const NoiseSource& src, std::int64_t step, int L, double gamma, double dt) {
  require(gamma >= 0.0, "gamma must be non-negative");
  require(step >= 0, "step index must be non-negative");
  VectorXr out = VectorXr::Zero(L);
  if (gamma == 0.0) return out;
  const double sigma = std::sqrt(gamma * dt);
  const auto gen = src.generator();
  const auto base = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(L);
  for (int i = 0; i < L; ++i) out(i) = sigma * gen.normal(base + static_cast<std::uint64_t>(i));
  return out;
}

// ------------------------------------------------------------- schedule ---

struct EvolutionSchedule {
  double t_total = 0.0;
  double record_interval = 1.0;
  double t_sat = 0.0;
  double dt = 0.05;

  void validate() const {
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(t_total >= 0.0 && std::isfinite(t_total), "t_total must be non-negative");
    require(t_sat >= 0.0 && t_sat <= t_total, "t_sat must lie in [0, t_total]");
    require(record_interval >= dt * (1.0 - 1e-9), "record_interval must be at least dt");
  }

  std::int64_t steps() const { return static_cast<std::int64_t>(std::ceil(t_total / dt - 1e-9)); }
  std::int64_t record_stride() const {
    return std::max<std::int64_t>(1, std::llround(record_interval / dt));
  }
  bool saturated(double t) const { return t >= t_sat - 1e-9 * std::max(1.0, t_sat); }

  int post_saturation_samples() const {
    int n = 0;
    for (std::int64_t s = 0; s <= steps(); s += record_stride())
      if (saturated(static_cast<double>(s) * dt)) ++n;
    return n;
  }
};

struct ObservableConfig {
  //! Cuts tracked at every sample; empty means {L/2}.
  std::vector<int> cuts;
  //! Full S(l) profile every k-th post-saturation sample; 0 disables.
  int profile_stride = 1;
  bool correlations = true;
  bool autocorrelation = true;
  bool orbitals = true;
};

struct TrajectoryRecord {
  std::vector<int> cuts;
  std::vector<double> times;
  //! [sample][cut]
  std::vector<std::vector<double>> entropy;
  //! [sample][r-1] for r = 1..L/2
  std::vector<std::vector<double>> correlations;
  std::vector<double> profile_times;
  //! [profile sample][l-1] for l = 1..L-1
  std::vector<std::vector<double>> profiles;
  std::vector<double> autocorr_lags;
  std::vector<double> autocorr;
  //! Recentred orbital density of the final state, averaged over orbitals.
  std::vector<double> orbital_snapshot;
  //! Largest |tr D - N| over recorded instants.
  double trace_error = 0.0;
};

//! Everything needed to continue a trajectory bit-exactly.
struct TrajectoryCheckpoint {
  std::int64_t step = 0;
  MatrixXc orbitals;
  std::optional<MatrixXc> reference;
  TrajectoryRecord record;
};

class TrajectoryRunner {
 public:
  TrajectoryRunner(const ModelSpec& spec, const DisorderRealization& dis, const EvolutionSchedule& sched,
                   const NoiseSource& src, ObservableConfig obs = {})
      : spec_(spec), sched_(sched), src_(src), obs_(std::move(obs)) {
    spec_.validate();
    sched_.validate();
    require(std::abs(sched_.dt - spec_.dt) <= 1e-12 * spec_.dt, "schedule dt differs from model dt");
    require(!spec_.filling || *spec_.filling == spec_.L / 2, "trajectories start from the half-filled Neel state");
    prop_ = make_propagator(build_hamiltonian(spec_, dis), spec_.dt);
    state_ = neel_state(spec_.L);
    if (obs_.cuts.empty()) obs_.cuts = {spec_.L / 2};
    for (int c : obs_.cuts) require(c >= 1 && c < spec_.L, "entropy cut must satisfy 1 <= l < L");
    record_.cuts = obs_.cuts;
    sample();
  }

  TrajectoryRunner(const ModelSpec& spec, const DisorderRealization& dis, const EvolutionSchedule& sched,
                   const NoiseSource& src, ObservableConfig obs, TrajectoryCheckpoint resume)
      : TrajectoryRunner(spec, dis, sched, src, std::move(obs)) {
    require(resume.orbitals.rows() == spec_.L && resume.orbitals.cols() == spec_.particles(),
            "checkpoint orbital matrix has the wrong shape");
    require(resume.step >= 0 && resume.step <= sched_.steps(), "checkpoint step out of range");
    step_ = resume.step;
    state_.orbitals = std::move(resume.orbitals);
    if (resume.reference) reference_ = GaussianState{std::move(*resume.reference)};
    record_ = std::move(resume.record);
    post_sat_samples_ = 0;
    for (double t : record_.times) {
      if (!sched_.saturated(t)) continue;
      if (post_sat_samples_++ == 0) reference_time_ = t;
    }
    finish_if_done();
  }

  bool done() const { return step_ >= sched_.steps(); }
  std::int64_t step() const { return step_; }
  const GaussianState& state() const { return state_; }
  const TrajectoryRecord& record() const { return record_; }

  //! Advances by at most max_steps; returns the number taken.
  std::int64_t advance(std::int64_t max_steps) {
    std::int64_t taken = 0;
    const std::int64_t stride = sched_.record_stride();
    while (!done() && taken < max_steps) {
      const VectorXr noise = generate_noise(src_, step_, spec_.L, spec_.gamma, spec_.dt);
      state_ = apply_step(state_, prop_, noise, spec_.gamma, spec_.dt);
      ++step_;
      ++taken;
      if (step_ % stride == 0) sample();
    }
    finish_if_done();
    return taken;
  }

  TrajectoryCheckpoint checkpoint() const {
    TrajectoryCheckpoint c;
    c.step = step_;
    c.orbitals = state_.orbitals;
    if (reference_) c.reference = reference_->orbitals;
    c.record = record_;
    return c;
  }

 private:
  void sample() {
    const double t = static_cast<double>(step_) * spec_.dt;
    const CorrelationMatrix D = correlation_matrix(state_);
    record_.trace_error = std::max(record_.trace_error, std::abs(D.d.trace().real() - spec_.particles()));
    record_.times.push_back(t);
    std::vector<double> row;
    row.reserve(obs_.cuts.size());
    for (int c : obs_.cuts) row.push_back(cut_entropy(D, c));
    record_.entropy.push_back(std::move(row));
    if (obs_.correlations) record_.correlations.push_back(correlation_profile(D, spec_.L / 2, spec_.boundary));
    if (!sched_.saturated(t)) return;
    if (obs_.profile_stride > 0 && post_sat_samples_ % obs_.profile_stride == 0) {
      std::vector<double> prof;
      for (const auto& [l, S] : entropy_profile(D)) prof.push_back(S);
      record_.profile_times.push_back(t);
      record_.profiles.push_back(std::move(prof));
    }
    ++post_sat_samples_;
    if (obs_.autocorrelation) {
      if (!reference_) {
        reference_ = state_;
        reference_time_ = t;
      }
      record_.autocorr_lags.push_back(t - reference_time_);
      record_.autocorr.push_back(autocorrelation(*reference_, state_));
    }
  }

  void finish_if_done() {
    if (!done() || !obs_.orbitals || !record_.orbital_snapshot.empty()) return;
    VectorXr acc = VectorXr::Zero(spec_.L);
    const auto dens = orbital_densities(state_);
    for (const auto& d : dens) acc += d;
    acc /= static_cast<double>(dens.size());
    record_.orbital_snapshot.assign(acc.data(), acc.data() + acc.size());
  }

  ModelSpec spec_;
  EvolutionSchedule sched_;
  NoiseSource src_;
  ObservableConfig obs_;
  StepPropagator prop_;
  GaussianState state_;
  std::int64_t step_ = 0;
  std::optional<GaussianState> reference_;
  double reference_time_ = 0.0;
  int post_sat_samples_ = 0;
  TrajectoryRecord record_;
};

inline TrajectoryRecord run_trajectory(const ModelSpec& spec, const DisorderRealization& dis,
                                       const EvolutionSchedule& sched, const NoiseSource& src,
                                       ObservableConfig obs = {}) {
  TrajectoryRunner runner(spec, dis, sched, src, std::move(obs));
  runner.advance(sched.steps());
  return runner.record();
}

//! Mean of each tracked cut over samples at t >= t_sat.
inline std::vector<double> saturation_average(const TrajectoryRecord& rec, const EvolutionSchedule& sched) {
  std::vector<double> acc(rec.cuts.size(), 0.0);
  int n = 0;
  for (std::size_t s = 0; s < rec.times.size(); ++s) {
    if (!sched.saturated(rec.times[s])) continue;
    for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += rec.entropy[s][c];
    ++n;
  }
  require(n >= 2, "saturation average needs at least two samples after t_sat");
  for (double& a : acc) a /= n;
  return acc;
}

namespace detail {
inline std::vector<double> column_mean(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  std::vector<double> acc(rows.front().size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += r[k];
  for (double& a : acc) a /= static_cast<double>(rows.size());
  return acc;
}
}  // namespace detail

//! Per-trajectory reduction that enters the ensemble averages.
struct TrajectorySummary {
  std::vector<double> s_inf;
  std::vector<double> profile;
  std::vector<double> correlations;
  std::vector<double> autocorr_lags;
  std::vector<double> autocorr;
  std::vector<double> orbital;
  std::vector<double> times;
  //! S(first cut, t) at every sample.
  std::vector<double> series;
  double trace_error = 0.0;
};

inline TrajectorySummary summarize(const TrajectoryRecord& rec, const EvolutionSchedule& sched) {
  TrajectorySummary out;
  out.s_inf = saturation_average(rec, sched);
  out.profile = detail::column_mean(rec.profiles);
  std::vector<std::vector<double>> post;
  for (std::size_t s = 0; s < rec.times.size() && s < rec.correlations.size(); ++s)
    if (sched.saturated(rec.times[s])) post.push_back(rec.correlations[s]);
  out.correlations = detail::column_mean(post);
  out.autocorr_lags = rec.autocorr_lags;
  out.autocorr = rec.autocorr;
  out.orbital = rec.orbital_snapshot;
  out.times = rec.times;
  for (const auto& row : rec.entropy) out.series.push_back(row.front());
  out.trace_error = rec.trace_error;
  return out;
}

// ------------------------------------------------------------- ensemble ---

struct GridCell {
  double gamma = 0.0;
  double W = 0.0;
  int L = 0;
};

struct EnsembleSpec {
  std::vector<double> gammas;
  std::vector<double> Ws;
  std::vector<int> Ls;
  double dt = 0.05;
  Boundary boundary = Boundary::periodic;
  bool nnn = false;
  int n_disorder = 1;
  int n_traj = 1;
  std::uint64_t master_seed = 0;
  //! Times grow linearly with L: t = base + per_site * L.
  double t_total = 0.0;
  double t_total_per_site = 0.0;
  double t_sat = 0.0;
  double t_sat_per_site = 0.0;
  double record_interval = 1.0;
  ObservableConfig observables;

  void validate() const {
    require(!gammas.empty() && !Ws.empty() && !Ls.empty(), "parameter grids must be non-empty");
    require(n_disorder >= 1 && n_traj >= 1, "n_disorder and n_traj must be at least 1");
    for (int L : Ls) {
      const auto sched = schedule(L);
      sched.validate();
      require(sched.post_saturation_samples() >= 2,
              "schedule leaves fewer than two samples after t_sat for L=" + std::to_string(L));
    }
  }

  EvolutionSchedule schedule(int L) const {
    return {t_total + t_total_per_site * L, record_interval, t_sat + t_sat_per_site * L, dt};
  }

  std::vector<GridCell> cells() const {
    std::vector<GridCell> out;
    for (double g : gammas)
      for (double w : Ws)
        for (int L : Ls) out.push_back({g, w, L});
    return out;
  }

  ModelSpec model(const GridCell& c) const { return {c.L, c.W, c.gamma, dt, boundary, nnn, std::nullopt}; }
};

//! Disorder depends on (W, L, k) only, so every gamma sees the same samples.
inline std::uint64_t disorder_seed(std::uint64_t master, const GridCell& c, int k) {
  return rng::derive_key({master, rng::bits_of(c.W), static_cast<std::uint64_t>(c.L), static_cast<std::uint64_t>(k)});
}

inline std::uint64_t noise_cell_key(const GridCell& c, double dt) {
  return rng::derive_key({rng::bits_of(c.gamma), rng::bits_of(c.W), static_cast<std::uint64_t>(c.L), rng::bits_of(dt)});
}

struct WorkUnit {
  std::size_t cell = 0;
  int disorder = 0;
  int trajectory = 0;
};

inline std::vector<WorkUnit> enumerate_units(const EnsembleSpec& spec) {
  std::vector<WorkUnit> out;
  const auto n_cells = spec.cells().size();
  for (std::size_t c = 0; c < n_cells; ++c)
    for (int k = 0; k < spec.n_disorder; ++k)
      for (int j = 0; j < spec.n_traj; ++j) out.push_back({c, k, j});
  return out;
}

inline NoiseSource unit_noise(const EnsembleSpec& spec, const GridCell& cell, const WorkUnit& u) {
  return {spec.master_seed, noise_cell_key(cell, spec.dt), static_cast<std::uint64_t>(u.disorder),
          static_cast<std::uint64_t>(u.trajectory)};
}

inline DisorderRealization unit_disorder(const EnsembleSpec& spec, const GridCell& cell, const WorkUnit& u) {
  return sample_disorder(cell.W, cell.L, disorder_seed(spec.master_seed, cell, u.disorder));
}

//! nullopt when the trajectory aborted on a numerical degeneracy.
using UnitOutcome = std::optional<TrajectorySummary>;

inline UnitOutcome run_unit(const EnsembleSpec& spec, const WorkUnit& u) {
  const GridCell cell = spec.cells().at(u.cell);
  const auto sched = spec.schedule(cell.L);
  try {
    const auto rec = run_trajectory(spec.model(cell), unit_disorder(spec, cell, u), sched, unit_noise(spec, cell, u),
                                    spec.observables);
    return summarize(rec, sched);
  } catch (const NumericalDegeneracyError&) {
    return std::nullopt;
  }
}

enum class Observable { entropy, correlation, autocorrelation, orbital, entropy_time };

inline std::string_view to_string(Observable o) {
  switch (o) {
    case Observable::entropy: return "entropy";
    case Observable::correlation: return "correlation";
    case Observable::autocorrelation: return "autocorrelation";
    case Observable::orbital: return "orbital";
    case Observable::entropy_time: return "entropy_time";
  }
  return "?";
}

struct EnsembleStats {
  GridCell cell;
  Observable observable = Observable::entropy;
  //! l, r, tau, site offset or t depending on the observable.
  double index = 0.0;
  double mean = 0.0;
  //! Empty when fewer than two samples.
  std::optional<double> std_error;
  int n_samples = 0;
};

struct CellSummary {
  GridCell cell;
  int n_completed = 0;
  int n_aborted = 0;
  double max_trace_error = 0.0;
};

struct EnsembleResult {
  std::vector<CellSummary> cells;
  std::vector<EnsembleStats> stats;

  std::vector<EnsembleStats> select(Observable o, const GridCell& c) const {
    std::vector<EnsembleStats> out;
    for (const auto& s : stats)
      if (s.observable == o && s.cell.gamma == c.gamma && s.cell.W == c.W && s.cell.L == c.L) out.push_back(s);
    return out;
  }
};

namespace detail {

//! Two-pass mean/stderr over samples in a fixed order.
inline std::pair<double, std::optional<double>> mean_stderr(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, std::nullopt};
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size() - 1);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

inline void push_vector_stats(std::vector<EnsembleStats>& out, const GridCell& cell, Observable obs,
                              const std::vector<const TrajectorySummary*>& ok,
                              const std::function<const std::vector<double>&(const TrajectorySummary&)>& field,
                              const std::function<double(std::size_t)>& index_of) {
  if (ok.empty()) return;
  std::size_t width = field(*ok.front()).size();
  for (const auto* s : ok) width = std::min(width, field(*s).size());
  for (std::size_t k = 0; k < width; ++k) {
    std::vector<double> xs;
    xs.reserve(ok.size());
    for (const auto* s : ok) xs.push_back(field(*s)[k]);
    auto [m, se] = mean_stderr(xs);
    out.push_back({cell, obs, index_of(k), m, se, static_cast<int>(xs.size())});
  }
}

}  // namespace detail

inline constexpr double kMaxAbortFraction = 0.01;

//! Reduces unit outcomes (indexed like enumerate_units) into ensemble stats.
inline EnsembleResult reduce_ensemble(const EnsembleSpec& spec, const std::vector<UnitOutcome>& outcomes) {
  const auto cells = spec.cells();
  const auto units = enumerate_units(spec);
  require(outcomes.size() == units.size(), "outcome count does not match the unit list");
  EnsembleResult res;
  int total_aborted = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const GridCell& cell = cells[c];
    std::vector<const TrajectorySummary*> ok;
    CellSummary cs{cell, 0, 0, 0.0};
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (units[u].cell != c) continue;
      if (outcomes[u]) {
        ok.push_back(&*outcomes[u]);
        ++cs.n_completed;
        cs.max_trace_error = std::max(cs.max_trace_error, outcomes[u]->trace_error);
      } else {
        ++cs.n_aborted;
      }
    }
    total_aborted += cs.n_aborted;
    res.cells.push_back(cs);
    if (ok.empty()) continue;
    const int L = cell.L;
    const auto& cuts = spec.observables.cuts.empty() ? std::vector<int>{L / 2} : spec.observables.cuts;
    // Profile means cover every cut; fall back to the tracked cuts otherwise.
    if (!ok.front()->profile.empty()) {
      detail::push_vector_stats(res.stats, cell, Observable::entropy, ok,
                                [](const TrajectorySummary& s) -> const std::vector<double>& { return s.profile; },
                                [](std::size_t k) { return static_cast<double>(k + 1); });
    } else {
      detail::push_vector_stats(res.stats, cell, Observable::entropy, ok,
                                [](const TrajectorySummary& s) -> const std::vector<double>& { return s.s_inf; },
                                [&cuts](std::size_t k) { return static_cast<double>(cuts[k]); });
    }
    detail::push_vector_stats(res.stats, cell, Observable::correlation, ok,
                              [](const TrajectorySummary& s) -> const std::vector<double>& { return s.correlations; },
                              [](std::size_t k) { return static_cast<double>(k + 1); });
    const auto& lags = ok.front()->autocorr_lags;
    detail::push_vector_stats(res.stats, cell, Observable::autocorrelation, ok,
                              [](const TrajectorySummary& s) -> const std::vector<double>& { return s.autocorr; },
                              [&lags](std::size_t k) { return lags[k]; });
    detail::push_vector_stats(res.stats, cell, Observable::orbital, ok,
                              [](const TrajectorySummary& s) -> const std::vector<double>& { return s.orbital; },
                              [L](std::size_t k) { return static_cast<double>(static_cast<int>(k) - L / 2); });
    const auto& times = ok.front()->times;
    detail::push_vector_stats(res.stats, cell, Observable::entropy_time, ok,
                              [](const TrajectorySummary& s) -> const std::vector<double>& { return s.series; },
                              [&times](std::size_t k) { return times[k]; });
  }
  const double frac = static_cast<double>(total_aborted) / static_cast<double>(units.size());
  if (frac > kMaxAbortFraction)
    throw NumericalDegeneracyError("too many aborted trajectories: " + std::to_string(total_aborted) + " of " +
                                   std::to_string(units.size()));
  return res;
}

//! Runs fn(i) for i in [0, n) on `workers` threads. The first exception is
//! rethrown after all threads join.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline EnsembleResult run_ensemble(const EnsembleSpec& spec, int workers = 1) {
  spec.validate();
  const auto units = enumerate_units(spec);
  std::vector<UnitOutcome> outcomes(units.size());
  parallel_for(units.size(), workers, [&](std::size_t i) { outcomes[i] = run_unit(spec, units[i]); });
  return reduce_ensemble(spec, outcomes);
}

// ------------------------------------------------------------ dt check ---

struct DtComparison {
  double dt_reference = 0.0;
  double dt = 0.0;
  //! (t, |delta S| / combined stderr) at common sample times.
  std::vector<std::pair<double, double>> deviations;
  double max_deviation = 0.0;
};

struct DtReport {
  std::vector<DtComparison> comparisons;
  double max_deviation() const {
    double m = 0.0;
    for (const auto& c : comparisons) m = std::max(m, c.max_deviation);
    return m;
  }
};

//! Runs one cell at each dt (noise keyed by dt, so distinct dts draw
//! independent noise) and compares S(t) curves against the first dt.
inline DtReport dt_convergence_check(EnsembleSpec base, const std::vector<double>& dts, int workers = 1) {
  require(!dts.empty(), "need at least one time step");
  require(base.cells().size() == 1, "dt check expects a single grid cell");
  DtReport report;
  if (dts.size() < 2) return report;
  std::vector<std::vector<EnsembleStats>> curves;
  for (double dt : dts) {
    base.dt = dt;
    const auto res = run_ensemble(base, workers);
    curves.push_back(res.select(Observable::entropy_time, base.cells().front()));
  }
  for (std::size_t k = 1; k < dts.size(); ++k) {
    DtComparison cmp{dts.front(), dts[k], {}, 0.0};
    for (const auto& a : curves.front()) {
      for (const auto& b : curves[k]) {
        if (std::abs(a.index - b.index) > 1e-9 * std::max(1.0, std::abs(a.index))) continue;
        const double se = std::hypot(a.std_error.value_or(0.0), b.std_error.value_or(0.0));
        const double diff = std::abs(a.mean - b.mean);
        const double dev = diff == 0.0 ? 0.0 : (se > 0.0 ? diff / se : INFINITY);
        cmp.deviations.emplace_back(a.index, dev);
        cmp.max_deviation = std::max(cmp.max_deviation, dev);
      }
    }
    report.comparisons.push_back(std::move(cmp));
  }
  return report;
}

}  // namespace mff
