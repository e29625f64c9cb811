// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fscore::csv {

struct Table {
  std::vector<std::string> header;  // empty when the file has no header row
  std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV. A first row containing any non-numeric field is
// treated as a header. Blank lines and lines starting with '#' are skipped.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

std::vector<std::string> split_line(const std::string& line);

}  // namespace fscore::csv
