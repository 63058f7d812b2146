//
// Copyright 2026 The finfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Small text and file helpers shared by the CSV/JSON writers.

#ifndef FINFL_IO_HPP_
#define FINFL_IO_HPP_

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace finfl {

// %.9g, the precision used by every CSV this library writes.
inline std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

// Full round-trip precision, for files that must reproduce doubles exactly.
inline std::string format_exact(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline double parse_double(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return value;
}

inline std::int64_t parse_int(const std::string& text) {
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw std::invalid_argument("not an integer: '" + text + "'");
  }
  return value;
}

// A CSV table of numbers with a fixed header.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV. If `expected_header` is non-empty the first line must
// match it exactly.
inline NumericTable read_numeric_csv(std::istream& in,
                                     const std::vector<std::string>& expected_header = {}) {
  NumericTable table;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV input");
  table.header = split_csv_line(line);
  if (!expected_header.empty() && table.header != expected_header) {
    std::string want;
    for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
    throw std::runtime_error("unexpected CSV header '" + line + "', want '" + want + "'");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, want " +
                               std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f));
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  return {text.begin(), text.end()};
}

// Writes `contents` to a sibling temp file and renames it over `path`, so a
// reader never observes a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// index,score tables. The second column may be named "score" or "mu".
using ScoreMap = std::map<std::size_t, double>;

inline std::string format_score_csv(const ScoreMap& scores, std::string_view value_name = "score") {
  std::string out = "index,";
  out += value_name;
  out += '\n';
  for (const auto& [index, score] : scores) {
    out += std::to_string(index) + ',' + format_number(score) + '\n';
  }
  return out;
}

inline ScoreMap parse_score_csv(std::istream& in) {
  NumericTable table = read_numeric_csv(in);
  if (table.header.size() != 2 || table.header[0] != "index" ||
      (table.header[1] != "score" && table.header[1] != "mu")) {
    throw std::runtime_error("score CSV must have header index,score or index,mu");
  }
  ScoreMap scores;
  for (const auto& row : table.rows) {
    if (row[0] < 0 || row[0] != static_cast<double>(static_cast<std::size_t>(row[0]))) {
      throw std::runtime_error("score CSV index is not a non-negative integer");
    }
    if (!scores.emplace(static_cast<std::size_t>(row[0]), row[1]).second) {
      throw std::runtime_error("duplicate index in score CSV");
    }
  }
  return scores;
}

}  // namespace finfl

#endif  // FINFL_IO_HPP_
