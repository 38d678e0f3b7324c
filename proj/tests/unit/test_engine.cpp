#include "mff/engine.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mff;

namespace {
ModelSpec spec(int L, double W, double gamma) { return {L, W, gamma, 0.05, Boundary::periodic, false, std::nullopt}; }

EnsembleSpec small_ensemble() {
  EnsembleSpec e;
  e.gammas = {0.2};
  e.Ws = {0.5};
  e.Ls = {8, 12};
  e.n_disorder = 2;
  e.n_traj = 3;
  e.master_seed = 2024;
  e.t_total = 4.0;
  e.t_sat = 2.0;
  e.record_interval = 0.5;
  return e;
}

double first_time_above(const std::vector<EnsembleStats>& curve, double level) {
  for (const auto& s : curve)
    if (s.mean >= level) return s.index;
  return INFINITY;
}
}  // namespace

TEST(Schedule, CountsStepsAndSamples) {
  const EvolutionSchedule s{10.0, 1.0, 4.0, 0.05};
  EXPECT_EQ(s.steps(), 200);
  EXPECT_EQ(s.record_stride(), 20);
  EXPECT_EQ(s.post_saturation_samples(), 7);
  EXPECT_FALSE(s.saturated(3.9));
  EXPECT_TRUE(s.saturated(4.0));
}

TEST(Schedule, Validation) {
  EXPECT_THROW((EvolutionSchedule{10.0, 1.0, 11.0, 0.05}.validate()), ParameterError);
  EXPECT_THROW((EvolutionSchedule{10.0, 0.01, 1.0, 0.05}.validate()), ParameterError);
  EXPECT_THROW((EvolutionSchedule{10.0, 1.0, 1.0, 0.0}.validate()), ParameterError);
  EXPECT_NO_THROW((EvolutionSchedule{10.0, 1.0, 1.0, 0.05}.validate()));
}

TEST(Trajectory, ZeroDurationRecordsInitialStateOnly) {
  const auto rec = run_trajectory(spec(8, 1.0, 0.3), sample_disorder(1.0, 8, 1), {0.0, 1.0, 0.0, 0.05}, {1, 2, 0, 0});
  ASSERT_EQ(rec.times.size(), 1u);
  EXPECT_EQ(rec.times[0], 0.0);
  EXPECT_EQ(rec.entropy[0][0], 0.0);
  ASSERT_EQ(rec.profiles.size(), 1u);
  for (double S : rec.profiles[0]) EXPECT_EQ(S, 0.0);
}

TEST(Trajectory, CleanQuenchSaturates) {
  const int L = 32;
  const auto rec = run_trajectory(spec(L, 0.0, 0.0), sample_disorder(0.0, L, 0), {40.0, 1.0, 20.0, 0.05}, {});
  const double S30 = rec.entropy.at(30).at(0), S40 = rec.entropy.at(40).at(0);
  EXPECT_EQ(rec.entropy.at(0).at(0), 0.0);
  EXPECT_GT(S30, 1.0);
  EXPECT_GT(S40, 0.9 * S30);
  EXPECT_LT(rec.trace_error, 1e-8);
}

TEST(Trajectory, DisorderedQuenchObeysAreaLaw) {
  auto mean_sat = [](int L) {
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
      const auto rec = run_trajectory(spec(L, 1.5, 0.0), sample_disorder(1.5, L, 100 + k), {30.0, 1.0, 15.0, 0.05}, {});
      acc += saturation_average(rec, {30.0, 1.0, 15.0, 0.05}).at(0);
    }
    return acc / 4;
  };
  const double small = mean_sat(48), large = mean_sat(96);
  EXPECT_LT(std::abs(large - small), 0.3 * small);
}

TEST(Trajectory, TraceConservedUnderMonitoring) {
  const int L = 24;
  const auto rec = run_trajectory(spec(L, 2.0, 1.0), sample_disorder(2.0, L, 5), {20.0, 0.5, 5.0, 0.05}, {3, 4, 0, 0});
  EXPECT_LT(rec.trace_error, 1e-8);
  for (const auto& row : rec.correlations)
    for (double c : row) EXPECT_TRUE(std::isfinite(c));
}

TEST(Trajectory, CheckpointResumeIsBitExact) {
  const int L = 12;
  const auto sp = spec(L, 1.0, 0.4);
  const auto dis = sample_disorder(1.0, L, 7);
  const EvolutionSchedule sched{6.0, 0.5, 2.0, 0.05};
  const NoiseSource src{9, 8, 7, 6};
  const ObservableConfig obs{{3, 6}, 2, true, true, true};
  const auto full = run_trajectory(sp, dis, sched, src, obs);
  for (std::int64_t cut : {1, 37, 40, 41, 119}) {
    TrajectoryRunner first(sp, dis, sched, src, obs);
    first.advance(cut);
    TrajectoryRunner second(sp, dis, sched, src, obs, first.checkpoint());
    second.advance(1000);
    const auto& r = second.record();
    EXPECT_EQ(r.times, full.times);
    EXPECT_EQ(r.entropy, full.entropy);
    EXPECT_EQ(r.correlations, full.correlations);
    EXPECT_EQ(r.profiles, full.profiles);
    EXPECT_EQ(r.autocorr_lags, full.autocorr_lags);
    EXPECT_EQ(r.autocorr, full.autocorr);
    EXPECT_EQ(r.orbital_snapshot, full.orbital_snapshot);
  }
}

TEST(SaturationAverage, ConstantAndStepSeries) {
  TrajectoryRecord rec;
  rec.cuts = {4};
  const EvolutionSchedule sched{5.0, 1.0, 2.0, 0.05};
  for (int t = 0; t <= 5; ++t) {
    rec.times.push_back(t);
    rec.entropy.push_back({t < 2 ? 0.0 : 1.0});
  }
  EXPECT_EQ(saturation_average(rec, sched).at(0), 1.0);
  for (auto& row : rec.entropy) row[0] = 0.37;
  EXPECT_DOUBLE_EQ(saturation_average(rec, sched).at(0), 0.37);
  const EvolutionSchedule late{5.0, 1.0, 5.0, 0.05};
  EXPECT_THROW(saturation_average(rec, late), ParameterError);
}

TEST(SaturationAverage, DoublingWindowIsConsistent) {
  const int L = 16;
  std::vector<double> a, b;
  const EvolutionSchedule s1{30.0, 0.5, 10.0, 0.05}, s2{50.0, 0.5, 10.0, 0.05};
  for (int j = 0; j < 16; ++j) {
    const NoiseSource src{1, 2, 0, static_cast<std::uint64_t>(j)};
    a.push_back(saturation_average(run_trajectory(spec(L, 0.0, 0.3), sample_disorder(0, L, 0), s1, src), s1)[0]);
    b.push_back(saturation_average(run_trajectory(spec(L, 0.0, 0.3), sample_disorder(0, L, 0), s2, src), s2)[0]);
  }
  auto [ma, ea] = detail::mean_stderr(a);
  auto [mb, eb] = detail::mean_stderr(b);
  EXPECT_LT(std::abs(ma - mb), 2.0 * std::hypot(*ea, *eb));
}

TEST(Ensemble, SingleTrajectoryMatchesItsSummary) {
  auto e = small_ensemble();
  e.Ls = {8};
  e.n_disorder = 1;
  e.n_traj = 1;
  e.observables.profile_stride = 0;
  const auto res = run_ensemble(e);
  const auto direct = run_unit(e, {0, 0, 0});
  const auto stats = res.select(Observable::entropy, e.cells()[0]);
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].index, 4.0);
  EXPECT_EQ(stats[0].mean, direct->s_inf[0]);
  EXPECT_FALSE(stats[0].std_error.has_value());
  EXPECT_EQ(stats[0].n_samples, 1);
}

TEST(Ensemble, CleanCellsShareZeroDisorder) {
  auto e = small_ensemble();
  e.Ws = {0.0};
  e.n_disorder = 5;
  for (int k = 0; k < 5; ++k)
    for (double h : unit_disorder(e, e.cells()[0], {0, k, 0}).h) EXPECT_EQ(h, 0.0);
}

TEST(Ensemble, DisorderSharedAcrossGammaNotAcrossSamples) {
  auto e = small_ensemble();
  e.gammas = {0.1, 0.3};
  const auto cells = e.cells();
  EXPECT_EQ(unit_disorder(e, cells[0], {0, 1, 0}).h, unit_disorder(e, cells[2], {2, 1, 0}).h);
  EXPECT_NE(unit_disorder(e, cells[0], {0, 0, 0}).h, unit_disorder(e, cells[0], {0, 1, 0}).h);
}

TEST(Ensemble, WorkerCountDoesNotChangeNumbers) {
  const auto e = small_ensemble();
  const auto a = run_ensemble(e, 1);
  const auto b = run_ensemble(e, 4);
  ASSERT_EQ(a.stats.size(), b.stats.size());
  for (std::size_t k = 0; k < a.stats.size(); ++k) {
    EXPECT_EQ(a.stats[k].mean, b.stats[k].mean);
    EXPECT_EQ(a.stats[k].std_error, b.stats[k].std_error);
    EXPECT_EQ(a.stats[k].index, b.stats[k].index);
  }
}

TEST(Ensemble, StatsCoverEveryObservable) {
  const auto e = small_ensemble();
  const auto res = run_ensemble(e);
  for (const auto& cell : e.cells()) {
    EXPECT_EQ(res.select(Observable::entropy, cell).size(), static_cast<std::size_t>(cell.L - 1));
    EXPECT_EQ(res.select(Observable::correlation, cell).size(), static_cast<std::size_t>(cell.L / 2));
    EXPECT_EQ(res.select(Observable::orbital, cell).size(), static_cast<std::size_t>(cell.L));
    EXPECT_EQ(res.select(Observable::autocorrelation, cell).size(), 5u);
    EXPECT_EQ(res.select(Observable::entropy_time, cell).size(), 9u);
    for (const auto& s : res.select(Observable::entropy, cell)) EXPECT_EQ(s.n_samples, 6);
  }
  for (const auto& c : res.cells) {
    EXPECT_EQ(c.n_completed + c.n_aborted, 6);
    EXPECT_LT(c.max_trace_error, 1e-8);
  }
}

TEST(Ensemble, AbortAccounting) {
  auto e = small_ensemble();
  e.Ls = {8};
  e.n_disorder = 10;
  e.n_traj = 10;
  e.t_total = 1.0;
  e.t_sat = 0.5;
  std::vector<UnitOutcome> outcomes;
  for (const auto& u : enumerate_units(e)) outcomes.push_back(run_unit(e, u));
  outcomes[17].reset();
  const auto res = reduce_ensemble(e, outcomes);
  EXPECT_EQ(res.cells[0].n_completed, 99);
  EXPECT_EQ(res.cells[0].n_aborted, 1);
  EXPECT_EQ(res.select(Observable::entropy, e.cells()[0])[0].n_samples, 99);
  outcomes[18].reset();
  EXPECT_THROW(reduce_ensemble(e, outcomes), NumericalDegeneracyError);
}

TEST(Ensemble, ValidationRejectsShortSchedules) {
  auto e = small_ensemble();
  e.t_sat = 4.0;
  EXPECT_THROW(e.validate(), ParameterError);
  e = small_ensemble();
  e.gammas.clear();
  EXPECT_THROW(e.validate(), ParameterError);
}

TEST(Ensemble, ParallelForPropagatesErrors) {
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) { if (i == 4) throw ParameterError("x"); }), ParameterError);
}

TEST(DtCheck, SingleStepIsEmptyAndRepeatIsZero) {
  auto e = small_ensemble();
  e.Ls = {8};
  EXPECT_TRUE(dt_convergence_check(e, {0.05}).comparisons.empty());
  const auto rep = dt_convergence_check(e, {0.05, 0.05});
  ASSERT_EQ(rep.comparisons.size(), 1u);
  EXPECT_EQ(rep.max_deviation(), 0.0);
  EXPECT_FALSE(rep.comparisons[0].deviations.empty());
  e.Ls = {8, 12};
  EXPECT_THROW(dt_convergence_check(e, {0.05, 0.01}), ParameterError);
}

TEST(Equilibration, SaturationTimeGrowsWithSize) {
  auto run = [](int L) {
    EnsembleSpec e;
    e.gammas = {0.02};
    e.Ws = {0.0};
    e.Ls = {L};
    e.n_traj = 2;
    e.master_seed = 5;
    e.t_total = 150.0;
    e.t_sat = 100.0;
    e.record_interval = 1.0;
    e.observables = {{}, 0, false, false, false};
    const auto res = run_ensemble(e);
    const auto curve = res.select(Observable::entropy_time, e.cells()[0]);
    const double s_inf = res.select(Observable::entropy, e.cells()[0])[0].mean;
    return first_time_above(curve, 0.95 * s_inf);
  };
  EXPECT_GT(run(128), run(64));
}
