#include "repscen/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "repscen/common.hpp"

namespace repscen::csv {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

double parse_double(std::string_view text, std::string_view where) {
  if (text == "inf") return kInf;
  if (text == "-inf") return -kInf;
  if (text == "nan") return std::nan("");
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ArtifactError(fmt::format("{}: '{}' is not a number", where, text));
  return v;
}

std::string join(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ';';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> split_doubles(std::string_view cell, std::string_view where) {
  std::vector<double> out;
  if (cell.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = cell.find(';', start);
    out.push_back(parse_double(cell.substr(start, end - start), where));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ArtifactError(fmt::format("missing column '{}'", name));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find(',', start);
    cells.push_back(line.substr(start, end - start));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return cells;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError(fmt::format("cannot open {}", path.string()));
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ArtifactError(fmt::format("{}:{}: expected {} cells, found {}", path.string(), line_no, t.header.size(),
                                      cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ArtifactError(fmt::format("{}: empty file", path.string()));
  return t;
}

void write(const std::filesystem::path& path, const Table& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError(fmt::format("cannot write {}", path.string()));
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i > 0) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  if (!out) throw ArtifactError(fmt::format("failed writing {}", path.string()));
}

}  // namespace repscen::csv
