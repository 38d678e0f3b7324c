#pragma once
//! \file
//! Binary container for trajectory checkpoints and finished work units.
//!
//! Layout (little endian):
//!   8 bytes  magic "MFFBIN\0\1"
//!   u32      format version
//!   u32      payload kind
//!   then chunks of { char tag[4]; u64 byte_length; byte payload[byte_length] }
//! Readers skip unknown tags. Doubles are stored as raw IEEE-754 bits, so a
//! write/read cycle is bit-exact.

#include "mff/core.hpp"
#include "mff/engine.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mff::io {

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

inline constexpr std::array<char, 8> kMagic{'M', 'F', 'F', 'B', 'I', 'N', '\0', '\1'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t { checkpoint = 1, unit_result = 2 };

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChunkWriter {
 public:
  explicit ChunkWriter(PayloadKind kind) {
    raw(kMagic.data(), kMagic.size());
    pod(kFormatVersion);
    pod(static_cast<std::uint32_t>(kind));
  }

  template <class T>
  void scalar(const char (&tag)[5], T v) {
    header(tag, sizeof(T));
    pod(v);
  }

  template <class T>
  void vector(const char (&tag)[5], const std::vector<T>& v) {
    header(tag, sizeof(std::uint64_t) + v.size() * sizeof(T));
    pod(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), v.size() * sizeof(T));
  }

  //! Ragged rows: u64 row count, then each row as (u64 length, data).
  void rows(const char (&tag)[5], const std::vector<std::vector<double>>& m) {
    std::uint64_t bytes = sizeof(std::uint64_t);
    for (const auto& r : m) bytes += sizeof(std::uint64_t) + r.size() * sizeof(double);
    header(tag, bytes);
    pod(static_cast<std::uint64_t>(m.size()));
    for (const auto& r : m) {
      pod(static_cast<std::uint64_t>(r.size()));
      raw(r.data(), r.size() * sizeof(double));
    }
  }

  void matrix(const char (&tag)[5], const MatrixXc& m) {
    const auto count = static_cast<std::uint64_t>(m.size());
    header(tag, 2 * sizeof(std::uint64_t) + count * sizeof(cplx));
    pod(static_cast<std::uint64_t>(m.rows()));
    pod(static_cast<std::uint64_t>(m.cols()));
    raw(m.data(), count * sizeof(cplx));
  }

  const std::string& bytes() const { return buf_; }

  //! Writes to a sibling temp file and renames it into place.
  void save(const std::filesystem::path& path) const {
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw FormatError("cannot open " + tmp.string() + " for writing");
      f.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (!f) throw FormatError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  }

 private:
  template <class T>
  void pod(const T& v) {
    raw(&v, sizeof(T));
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void header(const char (&tag)[5], std::uint64_t len) {
    raw(tag, 4);
    pod(len);
  }

  std::string buf_;
};

class ChunkReader {
 public:
  ChunkReader(std::string bytes, PayloadKind expected) : buf_(std::move(bytes)) {
    if (buf_.size() < 16 || std::memcmp(buf_.data(), kMagic.data(), kMagic.size()) != 0)
      throw FormatError("not an mff container");
    std::uint32_t version = 0, kind = 0;
    std::memcpy(&version, buf_.data() + 8, 4);
    std::memcpy(&kind, buf_.data() + 12, 4);
    if (version != kFormatVersion) throw FormatError("unsupported container version " + std::to_string(version));
    if (kind != static_cast<std::uint32_t>(expected)) throw FormatError("unexpected container payload kind");
    std::size_t pos = 16;
    while (pos < buf_.size()) {
      if (buf_.size() - pos < 12) throw FormatError("truncated chunk header");
      std::string tag(buf_.data() + pos, 4);
      std::uint64_t len = 0;
      std::memcpy(&len, buf_.data() + pos + 4, 8);
      pos += 12;
      if (len > buf_.size() - pos) throw FormatError("truncated chunk '" + tag + "'");
      chunks_[tag] = {pos, static_cast<std::size_t>(len)};
      pos += len;
    }
  }

  static ChunkReader load(const std::filesystem::path& path, PayloadKind expected) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return ChunkReader(std::move(bytes), expected);
  }

  bool has(const std::string& tag) const { return chunks_.count(tag) != 0; }

  template <class T>
  T scalar(const std::string& tag) const {
    const auto [pos, len] = find(tag);
    if (len != sizeof(T)) throw FormatError("chunk '" + tag + "' has the wrong size");
    T v;
    std::memcpy(&v, buf_.data() + pos, sizeof(T));
    return v;
  }

  template <class T>
  std::vector<T> vector(const std::string& tag) const {
    auto [pos, len] = find(tag);
    const auto n = take<std::uint64_t>(pos, len, tag);
    if (len != n * sizeof(T)) throw FormatError("chunk '" + tag + "' has the wrong size");
    std::vector<T> v(n);
    std::memcpy(v.data(), buf_.data() + pos, len);
    return v;
  }

  std::vector<std::vector<double>> rows(const std::string& tag) const {
    auto [pos, len] = find(tag);
    const auto n = take<std::uint64_t>(pos, len, tag);
    std::vector<std::vector<double>> m;
    m.reserve(n);
    for (std::uint64_t r = 0; r < n; ++r) {
      const auto k = take<std::uint64_t>(pos, len, tag);
      if (len < k * sizeof(double)) throw FormatError("chunk '" + tag + "' is truncated");
      std::vector<double> row(k);
      std::memcpy(row.data(), buf_.data() + pos, k * sizeof(double));
      pos += k * sizeof(double);
      len -= k * sizeof(double);
      m.push_back(std::move(row));
    }
    return m;
  }

  MatrixXc matrix(const std::string& tag) const {
    auto [pos, len] = find(tag);
    const auto r = take<std::uint64_t>(pos, len, tag);
    const auto c = take<std::uint64_t>(pos, len, tag);
    if (len != r * c * sizeof(cplx)) throw FormatError("chunk '" + tag + "' has the wrong size");
    MatrixXc m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    std::memcpy(m.data(), buf_.data() + pos, len);
    return m;
  }

 private:
  std::pair<std::size_t, std::size_t> find(const std::string& tag) const {
    auto it = chunks_.find(tag);
    if (it == chunks_.end()) throw FormatError("missing chunk '" + tag + "'");
    return it->second;
  }
  template <class T>
  T take(std::size_t& pos, std::size_t& len, const std::string& tag) const {
    if (len < sizeof(T)) throw FormatError("chunk '" + tag + "' is truncated");
    T v;
    std::memcpy(&v, buf_.data() + pos, sizeof(T));
    pos += sizeof(T);
    len -= sizeof(T);
    return v;
  }

  std::string buf_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> chunks_;
};

//! Identifies the work unit a file belongs to, plus the config hash.
struct UnitTag {
  std::uint64_t config_hash = 0;
  std::uint64_t cell = 0;
  std::int64_t disorder = 0;
  std::int64_t trajectory = 0;
  bool operator==(const UnitTag&) const = default;
};

namespace detail {
inline void write_tag(ChunkWriter& w, const UnitTag& t) {
  w.scalar("HASH", t.config_hash);
  w.scalar("CELL", t.cell);
  w.scalar("DISO", t.disorder);
  w.scalar("TRAJ", t.trajectory);
}
inline UnitTag read_tag(const ChunkReader& r) {
  return {r.scalar<std::uint64_t>("HASH"), r.scalar<std::uint64_t>("CELL"), r.scalar<std::int64_t>("DISO"),
          r.scalar<std::int64_t>("TRAJ")};
}
}  // namespace detail

inline ChunkWriter encode_checkpoint(const UnitTag& tag, const TrajectoryCheckpoint& c) {
  ChunkWriter w(PayloadKind::checkpoint);
  detail::write_tag(w, tag);
  w.scalar("STEP", c.step);
  w.matrix("ORBS", c.orbitals);
  if (c.reference) w.matrix("REFR", *c.reference);
  const auto& r = c.record;
  w.vector("CUTS", r.cuts);
  w.vector("TIME", r.times);
  w.rows("ENTR", r.entropy);
  w.rows("CORR", r.correlations);
  w.vector("PTIM", r.profile_times);
  w.rows("PROF", r.profiles);
  w.vector("ALAG", r.autocorr_lags);
  w.vector("ACOR", r.autocorr);
  w.vector("ORBD", r.orbital_snapshot);
  w.scalar("TRER", r.trace_error);
  return w;
}

inline std::pair<UnitTag, TrajectoryCheckpoint> decode_checkpoint(const ChunkReader& rd) {
  TrajectoryCheckpoint c;
  c.step = rd.scalar<std::int64_t>("STEP");
  c.orbitals = rd.matrix("ORBS");
  if (rd.has("REFR")) c.reference = rd.matrix("REFR");
  auto& r = c.record;
  r.cuts = rd.vector<int>("CUTS");
  r.times = rd.vector<double>("TIME");
  r.entropy = rd.rows("ENTR");
  r.correlations = rd.rows("CORR");
  r.profile_times = rd.vector<double>("PTIM");
  r.profiles = rd.rows("PROF");
  r.autocorr_lags = rd.vector<double>("ALAG");
  r.autocorr = rd.vector<double>("ACOR");
  r.orbital_snapshot = rd.vector<double>("ORBD");
  r.trace_error = rd.scalar<double>("TRER");
  return {detail::read_tag(rd), std::move(c)};
}

inline ChunkWriter encode_outcome(const UnitTag& tag, const UnitOutcome& o) {
  ChunkWriter w(PayloadKind::unit_result);
  detail::write_tag(w, tag);
  w.scalar("ABRT", static_cast<std::uint8_t>(o ? 0 : 1));
  if (!o) return w;
  w.vector("SINF", o->s_inf);
  w.vector("PROF", o->profile);
  w.vector("CORR", o->correlations);
  w.vector("ALAG", o->autocorr_lags);
  w.vector("ACOR", o->autocorr);
  w.vector("ORBT", o->orbital);
  w.vector("TIME", o->times);
  w.vector("SERI", o->series);
  w.scalar("TRER", o->trace_error);
  return w;
}

inline std::pair<UnitTag, UnitOutcome> decode_outcome(const ChunkReader& rd) {
  const UnitTag tag = detail::read_tag(rd);
  if (rd.scalar<std::uint8_t>("ABRT") != 0) return {tag, std::nullopt};
  TrajectorySummary s;
  s.s_inf = rd.vector<double>("SINF");
  s.profile = rd.vector<double>("PROF");
  s.correlations = rd.vector<double>("CORR");
  s.autocorr_lags = rd.vector<double>("ALAG");
  s.autocorr = rd.vector<double>("ACOR");
  s.orbital = rd.vector<double>("ORBT");
  s.times = rd.vector<double>("TIME");
  s.series = rd.vector<double>("SERI");
  s.trace_error = rd.scalar<double>("TRER");
  return {tag, std::move(s)};
}

}  // namespace mff::io
