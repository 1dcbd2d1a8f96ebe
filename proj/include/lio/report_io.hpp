#pragma once

// Artifact writers. CSV: first row names the verified statement, second row
// the columns; numbers in %.12g form through to_chars (locale independent),
// LF line endings. JSON through nlohmann::json.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lio/core.hpp"

namespace lio {

using json = nlohmann::ordered_json;

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, r.ptr);
}

// JSON has no infinities; they go out as strings
inline json num_json(double v) {
  if (std::isfinite(v)) return v;
  return fmt_num(v);
}

using CsvField = std::variant<double, long long, std::string>;

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

class CsvTable {
 public:
  CsvTable(std::string statement, std::vector<std::string> columns)
      : statement_(std::move(statement)), columns_(std::move(columns)) {}

  void row(const std::vector<CsvField>& fields) {
    require(fields.size() == columns_.size(), "csv: row width differs from the header");
    rows_.push_back(fields);
  }
  std::size_t rows() const { return rows_.size(); }

  void write(std::ostream& os) const {
    os << "statement," << csv_escape(statement_) << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << csv_escape(columns_[i]);
    os << '\n';
    for (auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ',';
        std::visit(
            [&](auto&& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) os << fmt_num(v);
              else if constexpr (std::is_same_v<T, long long>) os << v;
              else os << csv_escape(v);
            },
            r[i]);
      }
      os << '\n';
    }
  }
  std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

 private:
  std::string statement_;
  std::vector<std::string> columns_;
  std::vector<std::vector<CsvField>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("io", "cannot write " + path.string());
  f << text;
  if (!f) throw Error("io", "write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("io", "cannot read " + path.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ParseError("json", path.string() + ": " + e.what());
  }
}

}  // namespace lio
