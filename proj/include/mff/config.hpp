#pragma once
//! \file
//! Run configuration: a flat `key = value` text file.
//!
//!   # comment
//!   gamma = 0.1, 0.2        # lists are comma separated
//!   W = 0
//!   L = 32, 64
//!   n_disorder = 4
//!   n_traj = 50
//!   master_seed = 2024
//!   t_total = 20
//!   t_total_per_site = 1    # optional, t_total grows as base + per_site * L
//!   t_sat = 10
//!
//! Physics defaults: dt = 0.05, boundary = periodic, nnn = false, half filling.

#include "mff/core.hpp"
#include "mff/engine.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mff::config {

inline constexpr const char* kCodeVersion = "0.1.0";

//! Parse failure with the offending line number (0 when not line-specific).
class ConfigError : public ParameterError {
 public:
  ConfigError(int line, const std::string& what)
      : ParameterError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Entry {
  std::string value;
  int line = 0;
};

using KeyValues = std::map<std::string, Entry>;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value', got '" + text + "'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key before '='");
    if (kv.count(key)) throw ConfigError(line, "duplicate key '" + key + "' (first set on line " +
                                                   std::to_string(kv[key].line) + ")");
    kv[key] = {value, line};
  }
  return kv;
}

inline KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "cannot open config file " + path.string());
  return parse_key_values(f);
}

//! Typed access with line context; tracks which keys were consumed.
class Reader {
 public:
  explicit Reader(KeyValues kv) : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  template <class T>
  T get(const std::string& key) {
    const auto& e = entry(key);
    return parse<T>(e.value, e.line, key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  std::vector<T> list(const std::string& key) {
    const auto& e = entry(key);
    return parse_list<T>(e.value, e.line, key);
  }

  template <class T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) {
    return has(key) ? list<T>(key) : fallback;
  }

  int line(const std::string& key) const { return has(key) ? kv_.at(key).line : 0; }

  void reject_unknown() const {
    for (const auto& [k, e] : kv_)
      if (!used_.count(k)) throw ConfigError(e.line, "unknown key '" + k + "'");
  }

  template <class T>
  static T parse(const std::string& s, int line, const std::string& key) {
    if constexpr (std::is_same_v<T, std::string>) {
      return s;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (s == "true" || s == "yes" || s == "1") return true;
      if (s == "false" || s == "no" || s == "0") return false;
      throw ConfigError(line, "'" + key + "' expects true/false, got '" + s + "'");
    } else {
      T v{};
      const auto* first = s.data();
      const auto* last = s.data() + s.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last || s.empty())
        throw ConfigError(line, "'" + key + "' has invalid value '" + s + "'");
      return v;
    }
  }

  template <class T>
  static std::vector<T> parse_list(const std::string& s, int line, const std::string& key) {
    std::vector<T> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<T>(trim(item), line, key));
    return out;
  }

 private:
  const Entry& entry(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError(0, "missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  KeyValues kv_;
  std::set<std::string> used_;
};

struct RunConfig {
  EnsembleSpec ensemble;
  std::string out_dir = "run";
  int workers = 1;
  //! Steps between trajectory checkpoints.
  int checkpoint_interval = 500;
};

inline RunConfig parse_run_config(KeyValues kv) {
  Reader r(std::move(kv));
  RunConfig cfg;
  auto& e = cfg.ensemble;
  auto at = [&](const std::string& key, auto&& check, const std::string& msg) {
    if (!check()) throw ConfigError(r.line(key), msg);
  };
  e.gammas = r.list<double>("gamma");
  at("gamma", [&] { return !e.gammas.empty(); }, "'gamma' grid must be non-empty");
  for (double g : e.gammas) at("gamma", [&] { return g >= 0.0; }, "'gamma' values must be non-negative");
  e.Ws = r.list<double>("W");
  at("W", [&] { return !e.Ws.empty(); }, "'W' grid must be non-empty");
  for (double w : e.Ws) at("W", [&] { return w >= 0.0; }, "'W' values must be non-negative");
  e.Ls = r.list<int>("L");
  at("L", [&] { return !e.Ls.empty(); }, "'L' list must be non-empty");
  for (int L : e.Ls) at("L", [&] { return L >= 2 && L % 2 == 0; }, "'L' values must be even and at least 2");
  e.dt = r.get<double>("dt", 0.05);
  at("dt", [&] { return e.dt > 0.0; }, "'dt' must be positive");
  e.boundary = r.has("boundary") ? [&] {
    try {
      return parse_boundary(r.get<std::string>("boundary"));
    } catch (const ParameterError& ex) {
      throw ConfigError(r.line("boundary"), ex.what());
    }
  }()
                                 : Boundary::periodic;
  e.nnn = r.get<bool>("nnn", false);
  if (r.has("filling")) {
    const std::string f = r.get<std::string>("filling");
    at("filling", [&] { return f == "half"; }, "only 'filling = half' is supported for trajectories");
  }
  e.n_disorder = r.get<int>("n_disorder");
  at("n_disorder", [&] { return e.n_disorder >= 1; }, "'n_disorder' must be at least 1");
  e.n_traj = r.get<int>("n_traj");
  at("n_traj", [&] { return e.n_traj >= 1; }, "'n_traj' must be at least 1");
  e.master_seed = r.get<std::uint64_t>("master_seed");
  e.t_total = r.get<double>("t_total");
  e.t_total_per_site = r.get<double>("t_total_per_site", 0.0);
  e.t_sat = r.get<double>("t_sat");
  e.t_sat_per_site = r.get<double>("t_sat_per_site", 0.0);
  e.record_interval = r.get<double>("record_interval", 1.0);
  e.observables.cuts = r.list<int>("cuts", {});
  e.observables.profile_stride = r.get<int>("profile_stride", 1);
  e.observables.correlations = r.get<bool>("correlations", true);
  e.observables.autocorrelation = r.get<bool>("autocorrelation", true);
  e.observables.orbitals = r.get<bool>("orbitals", true);
  cfg.out_dir = r.get<std::string>("out", cfg.out_dir);
  cfg.workers = r.get<int>("workers", 1);
  at("workers", [&] { return cfg.workers >= 1; }, "'workers' must be at least 1");
  cfg.checkpoint_interval = r.get<int>("checkpoint_interval", cfg.checkpoint_interval);
  at("checkpoint_interval", [&] { return cfg.checkpoint_interval >= 1; }, "'checkpoint_interval' must be positive");
  r.reject_unknown();
  try {
    e.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& ex) {
    throw ConfigError(r.line("t_sat"), ex.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  try {
    return parse_run_config(load_key_values(path));
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), path.string() + ": " + e.what());
  }
}

//! Canonical text of every field that determines the numbers. Output
//! directory and worker count are execution settings and excluded.
inline std::string canonical(const EnsembleSpec& e) {
  std::string s;
  char buf[64];
  auto num = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += std::string(k) + "=" + buf + "\n";
  };
  auto nums = [&](const char* k, const auto& vs) {
    s += std::string(k) + "=";
    for (const auto& v : vs) {
      std::snprintf(buf, sizeof buf, "%.17g,", static_cast<double>(v));
      s += buf;
    }
    s += "\n";
  };
  nums("gamma", e.gammas);
  nums("W", e.Ws);
  nums("L", e.Ls);
  num("dt", e.dt);
  s += "boundary=" + std::string(to_string(e.boundary)) + "\n";
  s += std::string("nnn=") + (e.nnn ? "1" : "0") + "\n";
  num("n_disorder", e.n_disorder);
  num("n_traj", e.n_traj);
  s += "master_seed=" + std::to_string(e.master_seed) + "\n";
  num("t_total", e.t_total);
  num("t_total_per_site", e.t_total_per_site);
  num("t_sat", e.t_sat);
  num("t_sat_per_site", e.t_sat_per_site);
  num("record_interval", e.record_interval);
  nums("cuts", e.observables.cuts);
  num("profile_stride", e.observables.profile_stride);
  num("correlations", e.observables.correlations);
  num("autocorrelation", e.observables.autocorrelation);
  num("orbitals", e.observables.orbitals);
  return s;
}

//! 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t config_hash(const EnsembleSpec& e) { return fnv1a(canonical(e)); }

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace mff::config
