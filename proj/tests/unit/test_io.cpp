#include "helpers.hpp"
#include "mff/checkpoint.hpp"
#include "mff/config.hpp"
#include "mff/tables.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>
#include <sstream>

using namespace mff;

namespace {

TrajectoryCheckpoint sample_checkpoint() {
  std::mt19937_64 gen(3);
  TrajectoryCheckpoint c;
  c.step = 1234;
  c.orbitals = mff::testing::random_state(10, 5, gen).orbitals;
  c.reference = mff::testing::random_state(10, 5, gen).orbitals;
  auto& r = c.record;
  r.cuts = {2, 5};
  r.times = {0.0, 0.5, 1.0 / 3.0};
  r.entropy = {{0.0, 0.0}, {0.1, 0.2}, {std::nextafter(1.0, 2.0), 5e-324}};
  r.correlations = {{0.1}, {}, {0.3, 0.4, 0.5}};
  r.profile_times = {0.5};
  r.profiles = {{0.1, 0.2, 0.3}};
  r.autocorr_lags = {0.0, 0.5};
  r.autocorr = {0.5, 0.123456789012345678};
  r.orbital_snapshot = {};
  r.trace_error = 3.3e-15;
  return c;
}

config::KeyValues parse(const std::string& text) {
  std::istringstream in(text);
  return config::parse_key_values(in);
}

const char* kMinimal =
    "gamma = 0.1, 0.2\n"
    "W = 0\n"
    "L = 8\n"
    "n_disorder = 1\n"
    "n_traj = 2\n"
    "master_seed = 7\n"
    "t_total = 4\n"
    "t_sat = 2\n";

int error_line(const std::string& text) {
  try {
    config::parse_run_config(parse(text));
  } catch (const config::ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto c = sample_checkpoint();
  const io::UnitTag tag{0xfeedULL, 3, 1, 9};
  const auto bytes = io::encode_checkpoint(tag, c).bytes();
  const auto [t, d] = io::decode_checkpoint(io::ChunkReader(bytes, io::PayloadKind::checkpoint));
  EXPECT_EQ(t, tag);
  EXPECT_EQ(d.step, c.step);
  EXPECT_EQ(std::memcmp(d.orbitals.data(), c.orbitals.data(), sizeof(cplx) * c.orbitals.size()), 0);
  ASSERT_TRUE(d.reference.has_value());
  EXPECT_EQ(*d.reference, *c.reference);
  EXPECT_EQ(d.record.cuts, c.record.cuts);
  EXPECT_EQ(d.record.times, c.record.times);
  EXPECT_EQ(d.record.entropy, c.record.entropy);
  EXPECT_EQ(d.record.correlations, c.record.correlations);
  EXPECT_EQ(d.record.profiles, c.record.profiles);
  EXPECT_EQ(d.record.autocorr, c.record.autocorr);
  EXPECT_EQ(d.record.trace_error, c.record.trace_error);
  EXPECT_EQ(io::encode_checkpoint(t, d).bytes(), bytes);
}

TEST(Checkpoint, SavesAndLoadsFromDisk) {
  const auto dir = mff::testing::scratch_dir("ckpt");
  const auto c = sample_checkpoint();
  io::encode_checkpoint({1, 2, 3, 4}, c).save(dir / "a.bin");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.bin.tmp"));
  const auto [t, d] = io::decode_checkpoint(io::ChunkReader::load(dir / "a.bin", io::PayloadKind::checkpoint));
  EXPECT_EQ(t, (io::UnitTag{1, 2, 3, 4}));
  EXPECT_EQ(d.orbitals, c.orbitals);
}

TEST(Checkpoint, RejectsForeignOrDamagedData) {
  const auto bytes = io::encode_checkpoint({}, sample_checkpoint()).bytes();
  EXPECT_THROW(io::ChunkReader(bytes, io::PayloadKind::unit_result), io::FormatError);
  EXPECT_THROW(io::ChunkReader("not a checkpoint at all", io::PayloadKind::checkpoint), io::FormatError);
  EXPECT_THROW(io::ChunkReader(bytes.substr(0, bytes.size() - 3), io::PayloadKind::checkpoint), io::FormatError);
  auto bumped = bytes;
  bumped[8] = 9;
  EXPECT_THROW(io::ChunkReader(bumped, io::PayloadKind::checkpoint), io::FormatError);
}

TEST(Checkpoint, UnknownChunksAreSkipped) {
  io::ChunkWriter w(io::PayloadKind::checkpoint);
  w.scalar("XTRA", 42.0);
  const auto base = io::encode_checkpoint({5, 6, 7, 8}, sample_checkpoint()).bytes();
  const std::string merged = w.bytes() + base.substr(16);
  const auto [t, d] = io::decode_checkpoint(io::ChunkReader(merged, io::PayloadKind::checkpoint));
  EXPECT_EQ(t.cell, 6u);
  EXPECT_EQ(d.step, 1234);
}

TEST(UnitOutcome, RoundTripIncludingAborts) {
  TrajectorySummary s;
  s.s_inf = {1.5};
  s.profile = {0.1, 0.2};
  s.series = {0.0, 1.0};
  s.times = {0.0, 1.0};
  s.trace_error = 1e-15;
  const auto [t, o] = io::decode_outcome(io::ChunkReader(io::encode_outcome({1, 0, 0, 2}, s).bytes(),
                                                         io::PayloadKind::unit_result));
  ASSERT_TRUE(o.has_value());
  EXPECT_EQ(o->s_inf, s.s_inf);
  EXPECT_EQ(o->profile, s.profile);
  EXPECT_EQ(t.trajectory, 2);
  const auto [t2, aborted] = io::decode_outcome(
      io::ChunkReader(io::encode_outcome({1, 0, 0, 3}, std::nullopt).bytes(), io::PayloadKind::unit_result));
  EXPECT_FALSE(aborted.has_value());
}

TEST(Config, MinimalFileUsesDocumentedDefaults) {
  const auto cfg = config::parse_run_config(parse(kMinimal));
  const auto& e = cfg.ensemble;
  EXPECT_EQ(e.gammas, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(e.Ls, (std::vector<int>{8}));
  EXPECT_EQ(e.dt, 0.05);
  EXPECT_EQ(e.boundary, Boundary::periodic);
  EXPECT_FALSE(e.nnn);
  EXPECT_EQ(e.master_seed, 7u);
  EXPECT_EQ(cfg.workers, 1);
}

TEST(Config, CommentsAndWhitespace) {
  const auto cfg = config::parse_run_config(parse(std::string("# header\n\n") + kMinimal + "boundary = open  # trailing\n"));
  EXPECT_EQ(cfg.ensemble.boundary, Boundary::open);
}

TEST(Config, ErrorsCarryLineNumbers) {
  EXPECT_EQ(error_line(std::string(kMinimal) + "W = 1\n"), 9);
  EXPECT_EQ(error_line(std::string(kMinimal) + "bogus\n"), 9);
  EXPECT_EQ(error_line(std::string(kMinimal) + "colour = blue\n"), 9);
  EXPECT_EQ(error_line(std::string(kMinimal) + "dt = fast\n"), 9);
  EXPECT_EQ(error_line(std::string(kMinimal) + "boundary = twisted\n"), 9);
  EXPECT_EQ(error_line(std::string(kMinimal) + "filling = quarter\n"), 9);
  EXPECT_EQ(error_line("gamma = -1\nW = 0\nL = 8\nn_disorder = 1\nn_traj = 1\nmaster_seed = 1\nt_total = 4\nt_sat = 2\n"), 1);
  EXPECT_EQ(error_line("gamma = 0.1\nW = 0\nL = 7\nn_disorder = 1\nn_traj = 1\nmaster_seed = 1\nt_total = 4\nt_sat = 2\n"), 3);
  EXPECT_EQ(error_line("gamma = 0.1\nW = 0\nL = 8\nn_disorder = 1\nn_traj = 1\nmaster_seed = 1\nt_total = 4\nt_sat = 4\n"), 8);
}

TEST(Config, MissingSeedIsAnError) {
  std::string text = kMinimal;
  text.erase(text.find("master_seed"), std::string("master_seed = 7\n").size());
  EXPECT_THROW(config::parse_run_config(parse(text)), config::ConfigError);
}

TEST(Config, HashTracksEveryPhysicsField) {
  const auto base = config::parse_run_config(parse(kMinimal));
  const auto h0 = config::config_hash(base.ensemble);
  EXPECT_EQ(h0, config::config_hash(config::parse_run_config(parse(kMinimal)).ensemble));
  const std::vector<std::string> tweaks{"dt = 0.04",           "boundary = open",     "nnn = true",
                                        "t_total_per_site = 1", "t_sat_per_site = 0.1", "record_interval = 0.5",
                                        "cuts = 2, 4",          "profile_stride = 2",  "correlations = false",
                                        "autocorrelation = false", "orbitals = false"};
  for (const auto& t : tweaks)
    EXPECT_NE(config::config_hash(config::parse_run_config(parse(std::string(kMinimal) + t + "\n")).ensemble), h0) << t;
  std::string seed = kMinimal;
  seed.replace(seed.find("master_seed = 7"), 15, "master_seed = 8");
  EXPECT_NE(config::config_hash(config::parse_run_config(parse(seed)).ensemble), h0);
  const auto exec = config::parse_run_config(parse(std::string(kMinimal) + "workers = 4\nout = elsewhere\n"));
  EXPECT_EQ(config::config_hash(exec.ensemble), h0);
}

TEST(Tables, FormatsRoundTripAndRejectNonFinite) {
  const double v = 0.1 + 0.2;
  tables::CsvWriter w({"a", "b"});
  w.row({tables::fmt(v), tables::fmt(std::optional<double>{})});
  const auto t = tables::Table::parse(w.text());
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.value(0, "a"), v);
  EXPECT_FALSE(t.number(0, "b").has_value());
  EXPECT_THROW(t.value(0, "b"), ParameterError);
  EXPECT_THROW(tables::fmt(std::nan("")), ParameterError);
  EXPECT_THROW(t.value(0, "c"), ParameterError);
  EXPECT_THROW(tables::Table::parse("a,b\n1\n"), ParameterError);
  EXPECT_THROW(w.row({"only one"}), ParameterError);
}
