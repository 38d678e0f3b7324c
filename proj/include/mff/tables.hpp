#pragma once
//! \file
//! Plain CSV tables: one header line, comma separated, no quoting. Numbers
//! are written with 17 significant digits so they round-trip exactly; a
//! missing value is an empty field.

#include "mff/core.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mff::tables {

inline std::string fmt(double v) {
  if (!std::isfinite(v)) throw ParameterError("refusing to write a non-finite value to a table");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

  void row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw ParameterError("CSV row has the wrong number of fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += fields[i];
    }
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ParameterError("cannot write " + path.string());
    f << text_;
  }

 private:
  std::size_t columns_;
  std::string text_;
};

class Table {
 public:
  static Table load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ParameterError("cannot open table " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path.string());
  }

  static Table parse(const std::string& text, const std::string& name = "table") {
    Table t;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto fields = split(line);
      if (t.header_.empty()) {
        t.header_ = fields;
        for (std::size_t i = 0; i < fields.size(); ++i) t.index_[fields[i]] = i;
        continue;
      }
      if (fields.size() != t.header_.size())
        throw ParameterError(name + ": line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                             " fields, header has " + std::to_string(t.header_.size()));
      t.rows_.push_back(std::move(fields));
    }
    return t;
  }

  std::size_t size() const { return rows_.size(); }
  bool has_column(const std::string& c) const { return index_.count(c) != 0; }

  void require_columns(const std::vector<std::string>& cols) const {
    for (const auto& c : cols)
      if (!has_column(c)) throw ParameterError("table is missing column '" + c + "'");
  }

  const std::string& field(std::size_t row, const std::string& col) const { return rows_.at(row).at(column(col)); }

  std::optional<double> number(std::size_t row, const std::string& col) const {
    const auto& s = field(row, col);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw ParameterError("column '" + col + "' holds a non-numeric value '" + s + "'");
    return v;
  }

  double value(std::size_t row, const std::string& col) const {
    auto v = number(row, col);
    if (!v) throw ParameterError("column '" + col + "' is empty in row " + std::to_string(row + 1));
    return *v;
  }

 private:
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::size_t column(const std::string& c) const {
    auto it = index_.find(c);
    if (it == index_.end()) throw ParameterError("table is missing column '" + c + "'");
    return it->second;
  }

  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace mff::tables
