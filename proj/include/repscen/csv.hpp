#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace repscen::csv {

/// Shortest text that parses back to the same double; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_double(double v);

/// Parses a value written by format_double. Throws ArtifactError naming
/// `where` on malformed input.
double parse_double(std::string_view text, std::string_view where = {});

/// Doubles joined with ';' (one CSV cell).
std::string join(std::span<const double> values);
std::vector<double> split_doubles(std::string_view cell, std::string_view where = {});

/// Comma-separated table without quoting; cells must not contain commas or
/// newlines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`; throws ArtifactError when absent.
  std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

}  // namespace repscen::csv
