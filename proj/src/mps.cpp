#include "repscen/mps.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>

namespace repscen {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string name_with_prefix(char prefix, int index, int count) {
  const int width = std::max(4, static_cast<int>(std::to_string(count).size()));
  return fmt::format("{}{:0{}d}", prefix, index + 1, width);
}

// Field layout of fixed MPS: columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
std::string entry_line(const std::string& f2, const std::string& f3, const std::string& f4,
                       const std::string& f5 = {}, const std::string& f6 = {}) {
  std::string line = fmt::format("    {:<8}  {:<8}  {:>12}", f2, f3, f4);
  if (!f5.empty()) line += fmt::format("   {:<8}  {:>12}", f5, f6);
  return line;
}

struct Token {
  std::string text;
  int column;
};

std::vector<Token> tokenize(const std::string& line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

double parse_number(const Token& t, int line) {
  double v = 0.0;
  const char* first = t.text.data();
  const char* last = first + t.text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw MpsParseError(fmt::format("expected a number, got '{}'", t.text), line, t.column);
  return v;
}

}  // namespace

MpsParseError::MpsParseError(const std::string& what, int line, int column)
    : Error(fmt::format("MPS line {}, column {}: {}", line, column, what)), line_(line), column_(column) {}

std::string mps_row_name(int index, int count) { return name_with_prefix('R', index, count); }
std::string mps_col_name(int index, int count) { return name_with_prefix('C', index, count); }

void write_mps(const MipProblem& p, std::ostream& out) {
  p.validate();
  const int n = p.num_cols();
  const int m = p.num_rows();
  std::vector<std::vector<std::pair<int, double>>> cols(n);
  for (int i = 0; i < m; ++i)
    for (std::size_t k = 0; k < p.rows[i].index.size(); ++k)
      if (p.rows[i].value[k] != 0.0) cols[p.rows[i].index[k]].emplace_back(i, p.rows[i].value[k]);

  out << "NAME          REPSCEN\n";
  out << "ROWS\n";
  out << " N  OBJ\n";
  for (int i = 0; i < m; ++i) {
    const char* s = p.senses[i] == RowSense::kLessEqual ? "L" : p.senses[i] == RowSense::kGreaterEqual ? "G" : "E";
    out << ' ' << s << "  " << mps_row_name(i, m) << '\n';
  }
  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < n; ++j) {
    if (static_cast<bool>(p.integral[j]) != in_int) {
      in_int = p.integral[j];
      out << fmt::format("    MARKER{:04d}              'MARKER'                 '{}'\n", marker++,
                         in_int ? "INTORG" : "INTEND");
    }
    const std::string cname = mps_col_name(j, n);
    std::vector<std::pair<std::string, double>> entries;
    if (p.objective[j] != 0.0 || cols[j].empty()) entries.emplace_back("OBJ", p.objective[j]);
    for (auto [i, a] : cols[j]) entries.emplace_back(mps_row_name(i, m), a);
    for (std::size_t k = 0; k < entries.size(); k += 2) {
      if (k + 1 < entries.size())
        out << entry_line(cname, entries[k].first, num(entries[k].second), entries[k + 1].first,
                          num(entries[k + 1].second))
            << '\n';
      else
        out << entry_line(cname, entries[k].first, num(entries[k].second)) << '\n';
    }
  }
  if (in_int) out << fmt::format("    MARKER{:04d}              'MARKER'                 'INTEND'\n", marker++);

  out << "RHS\n";
  if (p.objective_offset != 0.0) out << entry_line("RHS", "OBJ", num(-p.objective_offset)) << '\n';
  for (int i = 0; i < m; ++i)
    if (p.rhs[i] != 0.0) out << entry_line("RHS", mps_row_name(i, m), num(p.rhs[i])) << '\n';

  out << "BOUNDS\n";
  auto bound = [&](const char* type, int j, const std::string& value) {
    out << fmt::format(" {:<2} BND       {:<8}  {:>12}", type, mps_col_name(j, n), value);
    out << '\n';
  };
  for (int j = 0; j < n; ++j) {
    const double lo = p.lower[j];
    const double hi = p.upper[j];
    if (lo == hi) {
      bound("FX", j, num(lo));
      continue;
    }
    if (std::isinf(lo) && std::isinf(hi)) {
      bound("FR", j, "");
      continue;
    }
    if (std::isinf(lo)) bound("MI", j, "");
    else if (lo != 0.0) bound("LO", j, num(lo));
    if (std::isfinite(hi)) bound("UP", j, num(hi));
    else if (p.integral[j]) bound("PL", j, "");
  }
  out << "ENDATA\n";
}

void write_mps(const MipProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_mps(problem, out);
}

MipProblem read_mps(std::istream& in) {
  enum class Section { kNone, kName, kRows, kColumns, kRhs, kBounds, kEnd };
  Section section = Section::kNone;
  MipProblem p;
  std::map<std::string, int> row_index;
  std::map<std::string, int> col_index;
  std::string objective_row;
  bool in_int = false;
  std::string line;
  int line_no = 0;

  auto col_for = [&](const Token& t, int ln) {
    auto it = col_index.find(t.text);
    if (it == col_index.end()) throw MpsParseError("unknown column '" + t.text + "'", ln, t.column);
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '*') continue;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (!std::isspace(static_cast<unsigned char>(line[0]))) {
      const std::string& head = toks[0].text;
      if (head == "NAME") section = Section::kName;
      else if (head == "ROWS") section = Section::kRows;
      else if (head == "COLUMNS") section = Section::kColumns;
      else if (head == "RHS") section = Section::kRhs;
      else if (head == "BOUNDS") section = Section::kBounds;
      else if (head == "ENDATA") {
        section = Section::kEnd;
        break;
      } else if (head == "RANGES") {
        throw MpsParseError("RANGES section is not supported", line_no, 1);
      } else {
        throw MpsParseError("unknown section '" + head + "'", line_no, 1);
      }
      continue;
    }
    switch (section) {
      case Section::kRows: {
        if (toks.size() != 2) throw MpsParseError("expected '<type> <name>'", line_no, toks[0].column);
        const std::string& type = toks[0].text;
        if (type == "N") {
          if (objective_row.empty()) objective_row = toks[1].text;
          continue;
        }
        RowSense s;
        if (type == "L") s = RowSense::kLessEqual;
        else if (type == "G") s = RowSense::kGreaterEqual;
        else if (type == "E") s = RowSense::kEqual;
        else throw MpsParseError("unknown row type '" + type + "'", line_no, toks[0].column);
        if (row_index.count(toks[1].text)) throw MpsParseError("duplicate row", line_no, toks[1].column);
        row_index[toks[1].text] = p.add_row({}, s, 0.0, toks[1].text);
        break;
      }
      case Section::kColumns: {
        if (toks.size() >= 3 && toks[1].text == "'MARKER'") {
          if (toks[2].text == "'INTORG'") in_int = true;
          else if (toks[2].text == "'INTEND'") in_int = false;
          else throw MpsParseError("unknown marker '" + toks[2].text + "'", line_no, toks[2].column);
          continue;
        }
        if (toks.size() != 3 && toks.size() != 5)
          throw MpsParseError("expected 'column row value [row value]'", line_no, toks[0].column);
        int j;
        auto it = col_index.find(toks[0].text);
        if (it == col_index.end()) {
          j = p.add_column(0.0, 0.0, kInf, in_int, toks[0].text);
          col_index[toks[0].text] = j;
        } else {
          j = it->second;
        }
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const double v = parse_number(toks[k + 1], line_no);
          if (toks[k].text == objective_row) {
            p.objective[j] = v;
            continue;
          }
          auto r = row_index.find(toks[k].text);
          if (r == row_index.end()) throw MpsParseError("unknown row '" + toks[k].text + "'", line_no, toks[k].column);
          p.rows[r->second].index.push_back(j);
          p.rows[r->second].value.push_back(v);
        }
        break;
      }
      case Section::kRhs: {
        if (toks.size() != 3 && toks.size() != 5)
          throw MpsParseError("expected 'set row value [row value]'", line_no, toks[0].column);
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const double v = parse_number(toks[k + 1], line_no);
          if (toks[k].text == objective_row) {
            p.objective_offset = -v;
            continue;
          }
          auto r = row_index.find(toks[k].text);
          if (r == row_index.end()) throw MpsParseError("unknown row '" + toks[k].text + "'", line_no, toks[k].column);
          p.rhs[r->second] = v;
        }
        break;
      }
      case Section::kBounds: {
        if (toks.size() < 3) throw MpsParseError("expected 'type set column [value]'", line_no, toks[0].column);
        const std::string& type = toks[0].text;
        const int j = col_for(toks[2], line_no);
        auto value = [&]() {
          if (toks.size() < 4) throw MpsParseError("bound requires a value", line_no, toks[2].column);
          return parse_number(toks[3], line_no);
        };
        if (type == "UP") p.upper[j] = value();
        else if (type == "LO") p.lower[j] = value();
        else if (type == "FX") p.lower[j] = p.upper[j] = value();
        else if (type == "FR") p.lower[j] = -kInf, p.upper[j] = kInf;
        else if (type == "MI") p.lower[j] = -kInf;
        else if (type == "PL") p.upper[j] = kInf;
        else if (type == "BV") p.lower[j] = 0.0, p.upper[j] = 1.0, p.integral[j] = 1;
        else if (type == "LI") p.lower[j] = value(), p.integral[j] = 1;
        else if (type == "UI") p.upper[j] = value(), p.integral[j] = 1;
        else throw MpsParseError("unknown bound type '" + type + "'", line_no, toks[0].column);
        break;
      }
      case Section::kName:
      case Section::kNone:
        throw MpsParseError("data outside of a section", line_no, toks[0].column);
      case Section::kEnd:
        break;
    }
  }
  if (section != Section::kEnd) throw MpsParseError("missing ENDATA", line_no + 1, 1);
  return p;
}

MipProblem read_mps(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_mps(in);
}

MipSolution read_external_solution(const std::filesystem::path& path, int num_cols) {
  std::ifstream in(path);
  if (!in) throw BackendError("solution file " + path.string() + " was not produced");
  MipSolution sol;
  std::string line;
  int line_no = 0;
  bool have_objective = false;
  bool have_bound = false;
  std::vector<double> x(num_cols, 0.0);
  const int width = std::max(4, static_cast<int>(std::to_string(num_cols).size()));
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    auto fail = [&](const std::string& msg, const Token& t) {
      throw BackendError(fmt::format("{}:{}:{}: {}", path.string(), line_no, t.column, msg));
    };
    if (!have_objective) {
      if (toks[0].text == "infeasible") {
        sol.status = SolveStatus::kInfeasible;
        return sol;
      }
      if (toks[0].text != "objective" || toks.size() != 2) fail("expected 'objective <value>'", toks[0]);
      try {
        sol.best_objective = parse_number(toks[1], line_no);
      } catch (const MpsParseError& e) {
        fail(e.what(), toks[1]);
      }
      have_objective = true;
      continue;
    }
    if (toks.size() != 2) fail("expected 'name value'", toks[0]);
    double v = 0.0;
    try {
      v = parse_number(toks[1], line_no);
    } catch (const MpsParseError& e) {
      fail(e.what(), toks[1]);
    }
    if (toks[0].text == "bound") {
      sol.best_bound = v;
      have_bound = true;
      continue;
    }
    const std::string& name = toks[0].text;
    if (name.size() != static_cast<std::size_t>(width) + 1 || name[0] != 'C') fail("unknown column '" + name + "'", toks[0]);
    int idx = 0;
    auto res = std::from_chars(name.data() + 1, name.data() + name.size(), idx);
    if (res.ec != std::errc() || idx < 1 || idx > num_cols) fail("unknown column '" + name + "'", toks[0]);
    x[idx - 1] = v;
  }
  if (!have_objective) throw BackendError(path.string() + ": empty solution file");
  sol.x = std::move(x);
  if (!have_bound) sol.best_bound = sol.best_objective;
  sol.gap = relative_gap(sol.best_objective, sol.best_bound);
  sol.status = sol.gap <= 1e-6 ? SolveStatus::kOptimal : SolveStatus::kGapLimit;
  return sol;
}

void write_external_solution(const MipSolution& solution, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (!solution.has_solution()) {
    out << "infeasible\n";
    return;
  }
  const int n = static_cast<int>(solution.x.size());
  out << "objective " << num(solution.best_objective) << '\n';
  if (std::isfinite(solution.best_bound)) out << "bound " << num(solution.best_bound) << '\n';
  for (int j = 0; j < n; ++j) out << mps_col_name(j, n) << ' ' << num(solution.x[j]) << '\n';
}

std::string expand_command(const std::string& tmpl, const std::filesystem::path& input,
                           const std::filesystem::path& output, const SolverConfig& config) {
  const std::map<std::string, std::string> values = {
      {"{input}", input.string()},
      {"{output}", output.string()},
      {"{gap}", num(config.gap_limit)},
      {"{timelimit}", num(config.time_limit)},
      {"{threads}", std::to_string(config.threads)},
  };
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [key, val] : values) {
        if (tmpl.compare(i, key.size(), key) == 0) {
          out += val;
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

MipSolution solve_external(const MipProblem& problem, const SolverConfig& config) {
  static std::atomic<int> counter{0};
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       fmt::format("repscen_{}_{}", static_cast<long>(::getpid()), counter.fetch_add(1));
  fs::create_directories(dir);
  const fs::path input = dir / "model.mps";
  const fs::path output = dir / "model.sol";
  const fs::path log = dir / "solver.log";
  write_mps(problem, input);
  const std::string cmd = expand_command(config.external_command, input, output, config);
  Stopwatch clock;
  const int rc = std::system((cmd + " > \"" + log.string() + "\" 2>&1").c_str());
  const double seconds = clock.seconds();
  auto diagnostics = [&]() {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    if (text.size() > 4000) text = text.substr(text.size() - 4000);
    return text;
  };
  if (rc != 0) {
    const std::string diag = diagnostics();
    fs::remove_all(dir);
    throw BackendError(fmt::format("external solver exited with status {}: {}\n{}", rc, cmd, diag));
  }
  MipSolution sol;
  try {
    sol = read_external_solution(output, problem.num_cols());
  } catch (const BackendError& e) {
    const std::string diag = diagnostics();
    fs::remove_all(dir);
    throw BackendError(std::string(e.what()) + "\n" + diag);
  }
  fs::remove_all(dir);
  sol.seconds = seconds;
  if (sol.has_solution()) {
    if (problem.max_violation(sol.x) > kFeasibilityTol || problem.max_fractionality(sol.x) > kIntegralityTol)
      throw BackendError("external solver returned a point that violates the model");
    sol.incumbent_trajectory.push_back({seconds, sol.best_objective});
  }
  return sol;
}

}  // namespace repscen
