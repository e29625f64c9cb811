// SPDX-License-Identifier: Apache-2.0
#include "fscore/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <string>

#include "fscore/errors.hpp"

namespace fscore::csv {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& field, double& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

Table read(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split_line(s);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (!parse_number(fields[i], row[i])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        t.header = std::move(fields);
        first = false;
        continue;
      }
      throw IoError("csv line " + std::to_string(lineno) + ": non-numeric field");
    }
    first = false;
    if (!t.rows.empty() && row.size() != t.rows.front().size())
      throw IoError("csv line " + std::to_string(lineno) + ": inconsistent column count");
    if (!t.header.empty() && row.size() != t.header.size())
      throw IoError("csv line " + std::to_string(lineno) + ": column count differs from header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read(in);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("cannot format number");
  return std::string(buf, ptr);
}

}  // namespace fscore::csv
