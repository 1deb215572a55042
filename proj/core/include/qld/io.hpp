#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qld {

// Shortest exact decimal form with 17 significant digits; round-trips doubles.
std::string format_g17(double v);

// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t len);
std::uint64_t fnv1a(const std::string& s);
std::uint64_t fnv1a_doubles(const double* data, std::size_t count);

std::string hex64(std::uint64_t v);

struct CsvTable {
  std::vector<std::string> comment_lines;  // written as "# ..." before the header
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::initializer_list<std::string> cells) { rows.emplace_back(cells); }
  std::string to_string() const;
  void write(const std::string& path) const;
};

// Minimal CSV reader: skips '#' comment lines, first non-comment row is the header.
struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
// Throws ConfigError with the 1-based line number on malformed input.
CsvFile read_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace qld
