#pragma once

// Minimal RFC-4180 style CSV: quoted fields when needed, LF line endings,
// numbers printed with %.17g so files round-trip and compare byte-for-byte.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "evofam/error.hpp"

namespace evofam::csv {

using Cell = std::variant<double, long long, std::string>;

inline std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string render(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_number(*d);
  if (const long long* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return quote(std::get<std::string>(c));
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw invalid_argument("csv::Table: row width does not match header");
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }

  std::string str(const char* sep = ",") const {
    std::string out;
    auto line = [&](const std::vector<std::string>& fields) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += sep;
        out += fields[i];
      }
      out += '\n';
    };
    std::vector<std::string> head;
    for (const auto& h : header_) head.push_back(quote(h));
    line(head);
    for (const auto& row : rows_) {
      std::vector<std::string> fields;
      for (const auto& c : row) fields.push_back(render(c));
      line(fields);
    }
    return out;
  }

  /// Whitespace-separated variant with a commented header, readable by gnuplot.
  std::string gnuplot() const {
    std::string out = "#";
    for (const auto& h : header_) out += " " + h;
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ' ';
        std::string f = render(row[i]);
        if (std::holds_alternative<std::string>(row[i])) f = "\"" + std::get<std::string>(row[i]) + "\"";
        out += f;
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::filesystem::path& path) const { write_text(path, str()); }

  static void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error(ErrorKind::io, "write failed for " + path.string());
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Splits one record; handles quoted fields and doubled quotes. Fields are trimmed.
inline std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false, was_quoted = false;
  auto trim_push = [&] {
    if (!was_quoted) {
      const auto b = cur.find_first_not_of(" \t\r");
      const auto e = cur.find_last_not_of(" \t\r");
      cur = b == std::string::npos ? std::string() : cur.substr(b, e - b + 1);
    }
    out.push_back(cur);
    cur.clear();
    was_quoted = false;
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
      cur.clear();
    } else if (c == ',') {
      trim_push();
    } else {
      cur += c;
    }
  }
  trim_push();
  return out;
}

struct Parsed {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with a header line. Blank lines are skipped.
inline Parsed read_numeric(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::io, "cannot open " + path.string());
  Parsed out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_record(line);
    if (out.header.empty()) {
      out.header = std::move(fields);
      continue;
    }
    if (fields.size() != out.header.size()) {
      throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(out.header.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& s : fields) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || s.empty()) {
        throw Error(ErrorKind::io, path.string() + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
      }
      row.push_back(v);
    }
    out.rows.push_back(std::move(row));
  }
  if (out.header.empty()) throw Error(ErrorKind::io, path.string() + ": empty file");
  return out;
}

}  // namespace evofam::csv
