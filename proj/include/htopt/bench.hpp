#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "htopt/diagnostics.hpp"
#include "htopt/problem.hpp"
#include "htopt/tuner.hpp"

namespace htopt {

/// Shrink of the academic box away from |theta| = 1, where the reduced loss has infinite slope.
inline constexpr double kAcademicBoxShrink = 1e-9;

/// min log(e^x1 + e^x2) s.t. x1^2 + (x2 - 4)^2 = 1 on the lower branch x2 = 4 - sqrt(1 - x1^2),
/// with the box [-1 + 1e-9, 1 - 1e-9].
std::pair<FullProblem, Box> academic_problem();

/// Same objective and constraint on the upper branch x2 = 4 + sqrt(1 - x1^2).
std::pair<FullProblem, Box> academic_upper_problem();

/// Certification regions in R^2 for the two branches: x1 in [-1, 1] and x2 in
/// [2.5, 4 - 1e-6] (lower) or [4 + 1e-6, 5.5] (upper).
Box academic_region();
Box academic_upper_region();

struct NesterovParams {
  double mu = 1e-4;
  double theta0 = 2.0;  ///< anchor of the quadratic term
  double c = 0.5;
  double d = 1.0;
};

Box nesterov_default_box();

/// log(c e^{d theta} + c e^{-d theta}) + (mu / 2) (theta - theta0)^2 as an unconstrained
/// problem with n = m = 1.
FullProblem nesterov_full_problem(const NesterovParams& params = {});

/// Reduced form with analytic gradient d tanh(d theta) + mu (theta - theta0), analytic
/// Hessian d^2 sech^2(d theta) + mu, and smoothness bound d^2 + mu.
ReducedProblem nesterov_problem(double mu = 1e-4, double theta0 = 2.0, double c = 0.5, double d = 1.0,
                                const Box& box = nesterov_default_box());

/// Minimizer of a scalar reduced problem over its box by bisection on the gradient sign.
Vector scalar_minimizer(const ReducedProblem& prob);

/// Gains used by the builtin suites.
TunerConfig default_bench_config(Algorithm algorithm);

struct ExperimentCase {
  ReducedProblem problem;
  Vector theta0;
  Vector nu0;
  std::optional<Vector> theta_star;
};

struct ExperimentSpec {
  std::vector<ExperimentCase> cases;
  std::vector<TunerConfig> configs;
  std::string out_dir;
};

struct RunSummary {
  std::string problem;
  std::string algorithm;
  double gamma = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  Outcome outcome = Outcome::kMaxIters;
  std::size_t iters = 0;
  double final_loss = 0.0;
  std::size_t feasibility_violations = 0;
  std::optional<double> max_delta_v;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<std::string> files;  ///< CSV traces, in run order
  std::vector<RunSummary> runs;
  std::string summary_path;
};

/// Runs every config on every case, writing one CSV per run and summary.json into out_dir.
/// Throws IoError if out_dir cannot be created or written.
ExperimentResult run_experiment(const ExperimentSpec& spec);

/// "fig1" (academic), "fig2" (Nesterov) or "all"; throws ConfigError otherwise.
ExperimentSpec builtin_suite(const std::string& suite, const std::string& out_dir);

std::string summary_json(const std::vector<RunSummary>& runs);

}  // namespace htopt
