#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "repscen/mip_problem.hpp"

namespace repscen {

/// Parse failure with the 1-based line and column of the offending token.
class MpsParseError : public Error {
 public:
  MpsParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Deterministic MPS names: R0001.. for rows, C0001.. for columns.
std::string mps_row_name(int index, int count);
std::string mps_col_name(int index, int count);

/// Writes fixed-format MPS (ROWS, COLUMNS with INTORG/INTEND markers, RHS,
/// BOUNDS, ENDATA). Numbers use the shortest representation that reads back
/// to the same double; values longer than 12 characters overflow their field.
void write_mps(const MipProblem& problem, std::ostream& out);
void write_mps(const MipProblem& problem, const std::filesystem::path& path);

/// Reads MPS written by write_mps (or any MPS without RANGES and without
/// spaces in names). Column and row names are kept in the result.
MipProblem read_mps(std::istream& in);
MipProblem read_mps(const std::filesystem::path& path);

/// Reads an external solver solution: an "objective <v>" line, an optional
/// "bound <v>" line, then "name value" pairs; a first line "infeasible"
/// denotes an infeasible model. Names follow mps_col_name.
MipSolution read_external_solution(const std::filesystem::path& path, int num_cols);

/// Writes a solution file in the format accepted by read_external_solution.
void write_external_solution(const MipSolution& solution, const std::filesystem::path& path);

/// Expands {input} {output} {gap} {timelimit} {threads} in a command template.
std::string expand_command(const std::string& tmpl, const std::filesystem::path& input,
                           const std::filesystem::path& output, const SolverConfig& config);

/// Writes the problem as MPS, runs the configured external command and reads
/// its solution back. Throws BackendError on a nonzero exit code, an
/// unparsable output file, or a returned point that violates the problem.
MipSolution solve_external(const MipProblem& problem, const SolverConfig& config);

}  // namespace repscen
