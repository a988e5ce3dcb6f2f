#pragma once

#include <stdexcept>
#include <string>

namespace padiff {

// Stable machine-readable failure codes surfaced in CLI reports.
// Mapping to process exit codes: usage/parse failures exit 1, math guard
// failures exit 2, inconclusive results exit 3.
namespace code {
inline constexpr const char* parse_error = "PARSE_ERROR";
inline constexpr const char* validation_error = "VALIDATION_ERROR";
inline constexpr const char* all_coefficients_unknown = "ALL_COEFFICIENTS_UNKNOWN";
inline constexpr const char* precision_exhausted = "PRECISION_EXHAUSTED";
inline constexpr const char* non_invertible_leading_coefficient =
    "NON_INVERTIBLE_LEADING_COEFFICIENT";
inline constexpr const char* pole_at_center = "POLE_AT_CENTER";
inline constexpr const char* inconclusive = "INCONCLUSIVE";
inline constexpr const char* budget_exhausted = "BUDGET_EXHAUSTED";
inline constexpr const char* wrong_mode = "WRONG_MODE";
inline constexpr const char* not_solvable_at_boundary = "NOT_SOLVABLE_AT_BOUNDARY";
inline constexpr const char* singular_linearization = "SINGULAR_LINEARIZATION";
inline constexpr const char* no_polygon_vertex = "NO_POLYGON_VERTEX";
inline constexpr const char* did_not_converge = "DID_NOT_CONVERGE";
inline constexpr const char* slopes_not_distinct = "SLOPES_NOT_DISTINCT";
inline constexpr const char* no_separation = "NO_SEPARATION";
inline constexpr const char* skeleton_not_nested = "SKELETON_NOT_NESTED";
}  // namespace code

// A mathematical precondition failed in a way the caller can report.
class guard_error : public std::runtime_error {
 public:
  guard_error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Input could not be parsed or validated (CLI exit 1 rather than 2).
class input_error : public guard_error {
 public:
  input_error(std::string code, const std::string& what, int line = 0, int col = 0)
      : guard_error(std::move(code), what), line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

}  // namespace padiff
