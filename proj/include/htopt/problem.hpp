#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htopt/numerics.hpp"

namespace htopt {

/// Axis-aligned box [lower, upper], lower < upper componentwise.
class Box {
 public:
  Box(Vector lower, Vector upper);

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Eigen::Index dim() const { return lower_.size(); }
  Vector center() const { return 0.5 * (lower_ + upper_); }

  /// Exact comparison, no tolerance.
  bool contains(const Vector& x) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// min f(x) s.t. h(x) = 0 with x = [theta; z], theta in R^m, z in R^(n-m).
///
/// Optional callables are empty std::function objects when absent. When `p` is absent the
/// dependent block is recovered with implicit_solve_p starting from `z_guess`, which also
/// selects the branch of the constraint manifold.
struct FullProblem {
  std::string name;
  int n = 0;
  int m = 0;
  ScalarFn f;
  VectorFn f_grad;
  VectorFn h;
  MatrixFn h_jac;  // (n-m) x n
  VectorFn p;
  MatrixFn p_jac;  // (n-m) x m
  double lambda_h = 0.0;
  Vector z_guess;
  /// Analytic Hessian of the reduced loss, m x m. Used for the normalizing signal when present.
  MatrixFn reduced_hessian;

  int dependent_dim() const { return n - m; }

  /// Structural checks: dimensions, presence of f and h, and the p / lambda_h pairing.
  void validate() const;

  /// Penalty loss L(x) = f(x) + lambda_h |h(x)|^2.
  double penalty_loss(const Vector& x) const;
  /// Gradient of the penalty loss, analytic wherever the pieces are.
  Vector penalty_loss_grad(const Vector& x) const;
  Vector eval_f_grad(const Vector& x) const;
  Matrix eval_h_jac(const Vector& x) const;
};

struct ReducedProblem {
  std::string name;
  int m = 0;
  ScalarFn loss;
  VectorFn grad;
  /// Largest eigenvalue of the loss Hessian at theta, clamped at zero.
  ScalarFn hessian_spectrum;
  std::optional<double> smoothness_bound;
  Box box;
};

struct ReduceOptions {
  double implicit_tol = 1e-12;
  PowerIterationOptions eigen{};
};

/// Variable reduction: l(theta) = L([theta; p(theta)]).
ReducedProblem reduce(const FullProblem& full, const Box& box, const ReduceOptions& opts = {});

/// Damped Newton solve of h([theta; z]) = 0 for z, starting at z0.
Vector implicit_solve_p(const FullProblem& full, const Vector& theta, const Vector& z0, double tol);

/// Jacobian of the dependent block with respect to theta at a manifold point x = [theta; z].
Matrix dependent_jacobian(const FullProblem& full, const Vector& theta, const Vector& z);

enum class ConvexityCondition { kHLinear, kGradNonnegPConvex, kGradNonposPConcave, kNone };
enum class GradientSign { kNegative, kPositive, kMixed, kNotApplicable };

struct ConvexityReport {
  ConvexityCondition condition_matched = ConvexityCondition::kNone;
  GradientSign grad_p_h_sign = GradientSign::kMixed;
  int samples_tested = 0;
  bool h_linear = false;
  bool h_convex = false;
  bool loss_convex = false;
  bool grad_loss_nonneg = false;
  bool grad_loss_nonpos = false;
  /// Grid points failing the candidate condition (empty when a condition matched).
  std::vector<Vector> violations;
  /// Grid points where evaluation failed.
  std::vector<Vector> evaluation_failures;
};

std::string to_string(ConvexityCondition c);
std::string to_string(GradientSign s);

/// Sampled certificate of the sufficient conditions for convexity of the reduced loss, on a
/// regular grid with `grid_per_dim` points per axis over `region` (a box in R^n).
ConvexityReport check_convexity(const FullProblem& full, const Box& region, int grid_per_dim);

}  // namespace htopt
