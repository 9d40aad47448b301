#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

namespace advest::csv {

/// Shortest decimal string that round-trips the double (C locale, '.' only).
/// NaN prints as "nan".
std::string fmt(double v);

void write_config_hash(std::ostream& out, std::uint64_t hash);

/// Parsed CSV with '#' comment lines skipped; first remaining row is the
/// header. Throws on ragged rows.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

Table read(std::istream& in);
Table read_file(const std::string& path);

}  // namespace advest::csv
