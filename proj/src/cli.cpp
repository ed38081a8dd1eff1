#include "htopt/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "htopt/bench.hpp"
#include "htopt/diagnostics.hpp"
#include "htopt/errors.hpp"
#include "htopt/problem_io.hpp"
#include "htopt/tuner.hpp"

namespace htopt {

namespace {

struct SolveArgs {
  std::string problem;
  std::string algorithm = "ht2";
  TunerConfig cfg;
  std::vector<double> theta0;
  std::vector<double> nu0;
  std::string trace = "trace.csv";
};

struct BenchArgs {
  std::string suite = "all";
  std::string out = "bench_out";
};

struct ConvexityArgs {
  std::string problem;
  int grid = 50;
  bool require_match = false;
};

struct GradCheckArgs {
  std::string problem;
  int samples = 100;
  std::uint64_t seed = 0;
  double tol = 1e-6;
};

std::string join(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

Vector to_vector(const std::vector<double>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

ReduceOptions reduce_options_from_env() {
  ReduceOptions opts;
  if (const char* seed = std::getenv("HTOPT_SEED"); seed && *seed) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(seed, &end, 10);
    if (*end != '\0') throw ConfigError(std::string("HTOPT_SEED must be a nonnegative integer, got '") + seed + "'");
    opts.eigen.seed = v;
  }
  return opts;
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  TunerConfig cfg = a.cfg;
  std::optional<LoadedProblem> loaded;
  Vector theta0, nu0;
  try {
    cfg.algorithm = parse_algorithm(a.algorithm);
    validate_config(cfg);
    loaded = load_problem(a.problem, reduce_options_from_env());
    theta0 = a.theta0.empty() ? loaded->default_theta0 : to_vector(a.theta0);
    nu0 = a.nu0.empty() ? theta0 : to_vector(a.nu0);
    if (theta0.size() != loaded->reduced.m || nu0.size() != loaded->reduced.m) {
      throw ConfigError("--theta0 and --nu0 need " + std::to_string(loaded->reduced.m) + " values");
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  Trace trace;
  try {
    trace = solve(loaded->reduced, cfg, theta0, nu0);
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDiverged;
  }

  try {
    write_trace_csv(trace, a.trace);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const TraceRecord& last = trace.records.back();
  out << "problem: " << loaded->reduced.name << "\n"
      << "algorithm: " << trace.algorithm << "\n"
      << "outcome: " << to_string(trace.outcome) << "\n"
      << "iterations: " << last.k << "\n"
      << "theta: " << join(last.theta) << "\n"
      << "loss: " << format_double(last.loss) << "\n"
      << "grad_norm: " << format_double(last.grad_norm) << "\n"
      << "trace: " << a.trace << "\n";
  if (!trace.message.empty()) out << "message: " << trace.message << "\n";

  switch (trace.outcome) {
    case Outcome::kConverged: return kExitOk;
    case Outcome::kMaxIters: return kExitMaxIters;
    case Outcome::kDiverged: return kExitDiverged;
  }
  return kExitDiverged;
}

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentResult result = run_experiment(builtin_suite(a.suite, a.out));
    for (const auto& r : result.runs) {
      out << r.problem << " " << r.algorithm << ": " << to_string(r.outcome) << " after " << r.iters
          << " iterations, " << r.feasibility_violations << " feasibility violations -> " << r.csv_path << "\n";
    }
    out << "summary: " << result.summary_path << "\n";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_check_convexity(const ConvexityArgs& a, std::ostream& out, std::ostream& err) {
  ConvexityReport report;
  std::string name;
  try {
    const LoadedProblem loaded = load_problem(a.problem, reduce_options_from_env());
    if (!loaded.region) throw ProblemError("problem '" + loaded.name + "' has no certification region");
    name = loaded.name;
    report = check_convexity(loaded.full, *loaded.region, a.grid);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto yes_no = [](bool b) { return b ? "yes" : "no"; };
  out << "problem: " << name << "\n"
      << "samples_tested: " << report.samples_tested << "\n"
      << "h_linear: " << yes_no(report.h_linear) << "\n"
      << "h_convex: " << yes_no(report.h_convex) << "\n"
      << "loss_convex: " << yes_no(report.loss_convex) << "\n"
      << "grad_L_nonneg: " << yes_no(report.grad_loss_nonneg) << "\n"
      << "grad_L_nonpos: " << yes_no(report.grad_loss_nonpos) << "\n"
      << "grad_p_h_sign = " << to_string(report.grad_p_h_sign) << "\n"
      << "condition_matched = " << to_string(report.condition_matched) << "\n"
      << "violations: " << report.violations.size() << "\n";
  for (const auto& v : report.violations) out << "  violation at " << join(v) << "\n";

  if (!report.evaluation_failures.empty()) {
    err << "evaluation failed at " << report.evaluation_failures.size() << " grid points:\n";
    for (const auto& p : report.evaluation_failures) err << "  " << join(p) << "\n";
    return kExitDiverged;
  }
  if (a.require_match && report.condition_matched == ConvexityCondition::kNone) return kExitMaxIters;
  return kExitOk;
}

int cmd_grad_check(const GradCheckArgs& a, std::ostream& out, std::ostream& err) {
  GradCheckReport report;
  std::string name;
  try {
    const LoadedProblem loaded = load_problem(a.problem, reduce_options_from_env());
    name = loaded.name;
    report = gradient_check(loaded.reduced, a.samples, a.seed, a.tol);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  out << "problem: " << name << "\n"
      << "samples: " << report.points.size() << "\n"
      << "max_relative_error: " << format_double(report.max_relative_error) << "\n"
      << "above_tolerance: " << report.above_tol << "\n";
  for (const auto& p : report.points) {
    if (p.failure.empty() && p.relative_error >= a.tol) {
      out << "  theta=" << join(p.theta) << " relative_error=" << format_double(p.relative_error) << "\n";
    }
  }
  if (report.failures > 0) {
    err << "evaluation failed at " << report.failures << " points:\n";
    for (const auto& p : report.points) {
      if (!p.failure.empty()) err << "  theta=" << join(p.theta) << ": " << p.failure << "\n";
    }
    return kExitDiverged;
  }
  return report.above_tol == 0 ? kExitOk : kExitMaxIters;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-order tuner for box-constrained convex problems", "htopt"};
  app.require_subcommand(1, 1);
  app.failure_message(CLI::FailureMessage::help);
  app.option_defaults()->always_capture_default();

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Run the tuner on one problem and write a trace CSV");
  solve_cmd->add_option("--problem", solve_args.problem, "Builtin name (academic, academic-upper, nesterov) or JSON path")
      ->required();
  solve_cmd->add_option("--algorithm", solve_args.algorithm, "ht1 or ht2")->check(CLI::IsMember({"ht1", "ht2"}));
  solve_cmd->add_option("--gamma", solve_args.cfg.gamma, "Step size gamma");
  solve_cmd->add_option("--beta", solve_args.cfg.beta, "Averaging weight beta");
  solve_cmd->add_option("--epsilon", solve_args.cfg.epsilon, "Reverse gain used on the boundary");
  solve_cmd->add_option("--theta0", solve_args.theta0, "Initial theta, comma separated (default: problem start)")
      ->delimiter(',')
      ->default_str("");
  solve_cmd->add_option("--nu0", solve_args.nu0, "Initial nu, comma separated (default: theta0)")
      ->delimiter(',')
      ->default_str("");
  solve_cmd->add_option("--max-iters", solve_args.cfg.max_iters, "Iteration limit");
  solve_cmd->add_option("--grad-tol", solve_args.cfg.grad_tol, "Stop when |grad l| <= grad-tol");
  solve_cmd->add_option("--trace", solve_args.trace, "Output CSV path");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark suite and write CSVs plus summary.json");
  bench_cmd->add_option("--suite", bench_args.suite, "fig1, fig2 or all")
      ->check(CLI::IsMember({"fig1", "fig2", "all"}));
  bench_cmd->add_option("--out", bench_args.out, "Output directory");

  ConvexityArgs conv_args;
  auto* conv_cmd = app.add_subcommand("check-convexity", "Sampled convexity certificate over the problem region");
  conv_cmd->add_option("--problem", conv_args.problem, "Builtin name or JSON path")->required();
  conv_cmd->add_option("--grid", conv_args.grid, "Grid points per dimension")->check(CLI::Range(3, 100000));
  conv_cmd->add_flag("--require-match", conv_args.require_match, "Exit 2 when no convexity condition matched");

  GradCheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand("grad-check", "Compare the analytic gradient with central differences");
  grad_cmd->add_option("--problem", grad_args.problem, "Builtin name or JSON path")->required();
  grad_cmd->add_option("--samples", grad_args.samples, "Number of random points in the box")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", grad_args.seed, "Sampling seed");
  grad_cmd->add_option("--tol", grad_args.tol, "Relative error tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (solve_cmd->parsed()) return cmd_solve(solve_args, out, err);
  if (bench_cmd->parsed()) return cmd_bench(bench_args, out, err);
  if (conv_cmd->parsed()) return cmd_check_convexity(conv_args, out, err);
  return cmd_grad_check(grad_args, out, err);
}

}  // namespace htopt
