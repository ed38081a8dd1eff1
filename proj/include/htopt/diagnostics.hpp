#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "htopt/numerics.hpp"
#include "htopt/problem.hpp"

namespace htopt {

struct TraceRecord {
  std::size_t k = 0;
  Vector theta;
  Vector nu;
  Vector theta_bar;  ///< theta_bar from the step that produced this record (theta_0 at k = 0)
  double loss = 0.0;
  double grad_norm = 0.0;
  double a_k = 1.0;
  double b_k = 1.0;
  double N_k = 1.0;
  std::optional<double> V;
  bool feasible = true;
};

enum class Outcome { kConverged, kMaxIters, kDiverged };

std::string to_string(Outcome o);
Outcome parse_outcome(const std::string& s);

struct Trace {
  std::vector<TraceRecord> records;
  Outcome outcome = Outcome::kMaxIters;
  std::string problem_name;
  std::string algorithm;
  double gamma = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double grad_tol = 0.0;
  std::size_t max_iters = 0;
  std::string message;  ///< divergence detail, empty otherwise
};

/// V = (|nu - theta*|^2 + |nu - theta|^2) / gamma.
double lyapunov(const Vector& theta, const Vector& nu, const Vector& theta_star, double gamma);

struct LyapunovViolation {
  std::size_t k;  ///< step from record k to record k+1
  double delta_v;
  double v_k;
};

struct LyapunovReport {
  std::vector<LyapunovViolation> violations;
  std::optional<double> max_delta_v;
  std::size_t worst_k = 0;
};

/// Flags every k with V_{k+1} - V_k > tol * max(1, V_k).
LyapunovReport check_lyapunov_decrease(const Trace& trace, const Vector& theta_star, double gamma, double tol);

struct FeasibilityViolation {
  std::size_t k;
  std::string field;  ///< "theta", "nu" or "theta_bar"
  Eigen::Index coordinate;
  double value;
  double bound;
};

struct FeasibilityReport {
  std::vector<FeasibilityViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Exact comparison of theta, nu and theta_bar against the box.
FeasibilityReport check_feasibility(const Trace& trace, const Box& box);

/// max |theta_k - theta*| (per-coordinate max) over the tail half of the records.
double oscillation_amplitude(const Trace& trace, const Vector& theta_star);

/// CSV with header k,theta_0..,nu_0..,thetabar_0..,loss,grad_norm,a_k,b_k,N_k,V,feasible.
/// Floats use 17 significant digits; an absent V is an empty field.
void write_trace_csv(const Trace& trace, std::ostream& out);
void write_trace_csv(const Trace& trace, const std::string& path);

/// Inverse of write_trace_csv for the record table (metadata is not stored in the CSV).
Trace read_trace_csv(std::istream& in);
Trace read_trace_csv(const std::string& path);

std::string format_double(double v);

struct GradCheckPoint {
  Vector theta;
  double relative_error = 0.0;
  std::string failure;  ///< non-empty when a stencil evaluation was not finite
};

struct GradCheckReport {
  std::vector<GradCheckPoint> points;
  double max_relative_error = 0.0;
  std::size_t failures = 0;
  std::size_t above_tol = 0;
};

/// Relative error |a - b| / (|a| + |b|), zero when both vanish.
double relative_error(const Vector& a, const Vector& b);

/// Analytic gradient of `prob` against fd_gradient of its loss at `samples` points drawn
/// uniformly from the box with a seeded generator.
GradCheckReport gradient_check(const ReducedProblem& prob, int samples, std::uint64_t seed, double tol);

}  // namespace htopt
