#pragma once

#include <optional>
#include <string>

#include "htopt/problem.hpp"

namespace htopt {

struct LoadedProblem {
  std::string name;
  FullProblem full;
  ReducedProblem reduced;
  /// Region in R^n used by check_convexity.
  std::optional<Box> region;
  /// Initial point used when the caller gives none.
  Vector default_theta0;
};

/// Parses a problem document:
/// { "name", "kind": "builtin" | "quadratic", "params": {...}, "box": {"lower", "upper"},
///   "lambda_h", optional "region" and "theta0" }.
/// Builtin params select "problem": "academic" | "academic-upper" | "nesterov" (falling back
/// to "name"); nesterov accepts mu, theta0, c, d. Quadratic params are "Q" (PSD) and "c".
LoadedProblem load_problem_json(const std::string& json_text, const ReduceOptions& opts = {});

/// `source` is a builtin name or a path to a JSON document.
LoadedProblem load_problem(const std::string& source, const ReduceOptions& opts = {});

}  // namespace htopt
