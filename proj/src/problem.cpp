#include "htopt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "htopt/errors.hpp"

namespace htopt {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ProblemError("Box: lower and upper differ in length");
  if (lower_.size() == 0) throw ProblemError("Box: empty box");
  if (!lower_.allFinite() || !upper_.allFinite()) throw ProblemError("Box: bounds must be finite");
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw ProblemError("Box: lower[" + std::to_string(i) + "] must be strictly below upper[" + std::to_string(i) + "]");
    }
  }
}

bool Box::contains(const Vector& x) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(lower_[i] <= x[i] && x[i] <= upper_[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// FullProblem

void FullProblem::validate() const {
  if (m < 1) throw ProblemError(name + ": reduced dimension m must be at least 1");
  if (m > n) throw ProblemError(name + ": problem is overdetermined (m > n)");
  if (!f) throw ProblemError(name + ": objective f is missing");
  if (n > m && !h) throw ProblemError(name + ": constraint h is missing");
  if (!(lambda_h >= 0.0) || !std::isfinite(lambda_h)) throw ProblemError(name + ": lambda_h must be a nonnegative real");
  const bool closed_form = static_cast<bool>(p) || n == m;
  if (closed_form && lambda_h != 0.0) {
    throw ProblemError(name + ": lambda_h must be 0 when p is available in closed form");
  }
  if (!closed_form) {
    if (!(lambda_h > 0.0)) throw ProblemError(name + ": lambda_h must be positive when p is solved implicitly");
    if (z_guess.size() != dependent_dim()) {
      throw ProblemError(name + ": z_guess must have n - m entries to select the implicit branch");
    }
  }
}

Vector FullProblem::eval_f_grad(const Vector& x) const { return f_grad ? f_grad(x) : fd_gradient(f, x); }

Matrix FullProblem::eval_h_jac(const Vector& x) const {
  if (dependent_dim() == 0) return Matrix(0, n);
  return h_jac ? h_jac(x) : fd_jacobian(h, x);
}

double FullProblem::penalty_loss(const Vector& x) const {
  double value = f(x);
  if (lambda_h > 0.0) value += lambda_h * h(x).squaredNorm();
  return value;
}

Vector FullProblem::penalty_loss_grad(const Vector& x) const {
  Vector g = eval_f_grad(x);
  if (lambda_h > 0.0) g += 2.0 * lambda_h * eval_h_jac(x).transpose() * h(x);
  return g;
}

// ---------------------------------------------------------------------------
// Implicit solve

namespace {

constexpr int kNewtonIterations = 100;
constexpr int kMaxHalvings = 8;

Vector stack(const Vector& theta, const Vector& z) {
  Vector x(theta.size() + z.size());
  x << theta, z;
  return x;
}

}  // namespace

Vector implicit_solve_p(const FullProblem& full, const Vector& theta, const Vector& z0, double tol) {
  const int k = full.dependent_dim();
  if (k == 0) return Vector(0);
  if (z0.size() != k) throw ImplicitSolveError("implicit_solve_p: z0 has the wrong length");
  if (!(tol > 0.0)) throw ImplicitSolveError("implicit_solve_p: tol must be positive");

  Vector z = z0;
  Vector r = full.h(stack(theta, z));
  if (!r.allFinite()) throw ImplicitSolveError("implicit_solve_p: h is not finite at the starting point");
  double rnorm = r.norm();

  for (int it = 0; it < kNewtonIterations; ++it) {
    if (rnorm <= tol) return z;
    const Matrix jz = full.eval_h_jac(stack(theta, z)).rightCols(k);
    Eigen::FullPivLU<Matrix> lu(jz);
    if (!jz.allFinite() || !lu.isInvertible()) {
      throw ImplicitSolveError("implicit_solve_p: dh/dz is singular at iteration " + std::to_string(it));
    }
    const Vector dz = lu.solve(-r);

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, t *= 0.5) {
      const Vector z_try = z + t * dz;
      const Vector r_try = full.h(stack(theta, z_try));
      if (r_try.allFinite() && r_try.norm() < rnorm) {
        z = z_try;
        r = r_try;
        rnorm = r.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ImplicitSolveError("implicit_solve_p: Newton step stalled at residual " + std::to_string(rnorm));
    }
  }
  if (rnorm <= tol) return z;
  throw ImplicitSolveError("implicit_solve_p: no convergence in " + std::to_string(kNewtonIterations) +
                           " iterations (residual " + std::to_string(rnorm) + ")");
}

Matrix dependent_jacobian(const FullProblem& full, const Vector& theta, const Vector& z) {
  const int k = full.dependent_dim();
  if (k == 0) return Matrix(0, full.m);
  if (full.p_jac) return full.p_jac(theta);
  if (full.p && !full.h_jac) return fd_jacobian(full.p, theta);

  // Implicit function theorem: dz/dtheta = -(dh/dz)^{-1} dh/dtheta.
  const Matrix jac = full.eval_h_jac(stack(theta, z));
  Eigen::FullPivLU<Matrix> lu(jac.rightCols(k));
  if (!lu.isInvertible()) {
    if (full.p) return fd_jacobian(full.p, theta);
    throw ReductionError(full.name + ": dh/dz is singular, dependent Jacobian undefined");
  }
  return -lu.solve(jac.leftCols(full.m));
}

// ---------------------------------------------------------------------------
// Reduction

ReducedProblem reduce(const FullProblem& full, const Box& box, const ReduceOptions& opts) {
  full.validate();
  if (box.dim() != full.m) throw ReductionError(full.name + ": box dimension does not match m");

  const bool closed_form = static_cast<bool>(full.p) || full.n == full.m;
  Vector z_anchor = full.z_guess;
  if (!closed_form) {
    try {
      z_anchor = implicit_solve_p(full, box.center(), full.z_guess, opts.implicit_tol);
    } catch (const ImplicitSolveError& e) {
      throw ReductionError(full.name + ": implicit solve failed at the box center: " + e.what());
    }
  } else if (full.n > full.m) {
    const Vector c = box.center();
    const double residual = full.h(stack(c, full.p(c))).norm();
    if (!(residual <= 1e-9)) {
      throw ReductionError(full.name + ": closed-form p does not satisfy h = 0 at the box center (|h| = " +
                           std::to_string(residual) + ")");
    }
  }

  // FullProblem is captured by value so the reduced problem owns everything it calls.
  const auto lift = [full, z_anchor, closed_form, tol = opts.implicit_tol](const Vector& theta) -> Vector {
    if (full.n == full.m) return theta;
    if (closed_form) return stack(theta, full.p(theta));
    return stack(theta, implicit_solve_p(full, theta, z_anchor, tol));
  };

  const int m = full.m;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  ScalarFn loss = [full, lift, nan](const Vector& theta) {
    try {
      return full.penalty_loss(lift(theta));
    } catch (const ImplicitSolveError&) {
      return nan;
    }
  };

  VectorFn grad = [full, lift, m, nan](const Vector& theta) -> Vector {
    try {
      const Vector x = lift(theta);
      const Vector g = full.penalty_loss_grad(x);
      if (full.n == m) return g;
      const Matrix jp = dependent_jacobian(full, theta, x.tail(full.n - m));
      return g.head(m) + jp.transpose() * g.tail(full.n - m);
    } catch (const ImplicitSolveError&) {
      return Vector::Constant(m, nan);
    } catch (const DifferentiationError&) {
      return Vector::Constant(m, nan);
    }
  };

  ScalarFn spectrum;
  if (full.reduced_hessian) {
    spectrum = [hess = full.reduced_hessian, nan](const Vector& theta) {
      const Matrix hm = hess(theta);
      if (!hm.allFinite()) return nan;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(hm, Eigen::EigenvaluesOnly);
      return std::max(0.0, eig.eigenvalues().maxCoeff());
    };
  } else {
    spectrum = [grad, m, eigen = opts.eigen, nan](const Vector& theta) {
      const double step = default_fd_step(theta.lpNorm<Eigen::Infinity>());
      const LinearOperator matvec = [&](const Vector& v) { return fd_hessian_matvec(grad, theta, v, step); };
      try {
        return std::max(0.0, max_eigenvalue_sym(matvec, m, eigen));
      } catch (const DifferentiationError&) {
        return nan;
      }
    };
  }

  return ReducedProblem{full.name, m, std::move(loss), std::move(grad), std::move(spectrum), std::nullopt, box};
}

// ---------------------------------------------------------------------------
// Convexity certification

std::string to_string(ConvexityCondition c) {
  switch (c) {
    case ConvexityCondition::kHLinear:
      return "h-linear";
    case ConvexityCondition::kGradNonnegPConvex:
      return "grad-L-nonneg-and-p-convex";
    case ConvexityCondition::kGradNonposPConcave:
      return "grad-L-nonpos-and-p-concave";
    case ConvexityCondition::kNone:
      return "none";
  }
  return "none";
}

std::string to_string(GradientSign s) {
  switch (s) {
    case GradientSign::kNegative:
      return "negative";
    case GradientSign::kPositive:
      return "positive";
    case GradientSign::kMixed:
      return "mixed";
    case GradientSign::kNotApplicable:
      return "not-applicable";
  }
  return "mixed";
}

namespace {

constexpr double kSignTol = 1e-9;
constexpr double kCurvatureTol = 1e-9;

struct GridSample {
  Vector x;
  bool ok = false;
  Vector h;
  double loss = 0.0;
  Vector grad_loss;
  Matrix dh_dz;
};

/// Regular grid in row-major order (last coordinate fastest).
class Grid {
 public:
  Grid(const Box& region, int per_dim) : region_(region), per_dim_(per_dim) {
    n_ = static_cast<int>(region.dim());
    total_ = 1;
    for (int i = 0; i < n_; ++i) total_ *= per_dim_;
  }

  long total() const { return total_; }
  int dim() const { return n_; }
  int per_dim() const { return per_dim_; }

  std::vector<int> index(long flat) const {
    std::vector<int> idx(n_);
    for (int i = n_ - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(flat % per_dim_);
      flat /= per_dim_;
    }
    return idx;
  }

  long flat(const std::vector<int>& idx) const {
    long f = 0;
    for (int i = 0; i < n_; ++i) f = f * per_dim_ + idx[i];
    return f;
  }

  Vector point(const std::vector<int>& idx) const {
    Vector x(n_);
    for (int i = 0; i < n_; ++i) {
      const double t = static_cast<double>(idx[i]) / (per_dim_ - 1);
      x[i] = idx[i] == per_dim_ - 1 ? region_.upper()[i]
                                    : region_.lower()[i] + t * (region_.upper()[i] - region_.lower()[i]);
    }
    return x;
  }

 private:
  const Box& region_;
  int per_dim_;
  int n_ = 0;
  long total_ = 0;
};

/// Second differences of a sampled scalar field at one grid point, along every e_i and
/// e_i +- e_j direction, plus the mixed differences when `out_mixed` is given.
template <typename Value>
void second_differences(const Grid& grid, const std::vector<GridSample>& samples, const std::vector<int>& idx,
                        const Value& value, std::vector<double>* out_diffs, std::vector<double>* out_mixed) {
  const int n = grid.dim();
  const int last = grid.per_dim() - 1;
  auto at = [&](std::vector<int> j) -> const GridSample* {
    for (int i = 0; i < n; ++i) {
      if (j[i] < 0 || j[i] > last) return nullptr;
    }
    const GridSample& s = samples[grid.flat(j)];
    return s.ok ? &s : nullptr;
  };
  const GridSample* center = at(idx);
  if (!center) return;
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      for (int sign : {+1, -1}) {
        if (a == b && sign < 0) continue;
        std::vector<int> up = idx, dn = idx;
        up[a] += 1;
        dn[a] -= 1;
        if (b != a) {
          up[b] += sign;
          dn[b] -= sign;
        }
        const GridSample* su = at(up);
        const GridSample* sd = at(dn);
        if (!su || !sd) continue;
        out_diffs->push_back(value(*su) - 2.0 * value(*center) + value(*sd));
      }
      if (a != b && out_mixed) {
        std::vector<int> pp = idx, pm = idx, mp = idx, mm = idx;
        pp[a] += 1; pp[b] += 1;
        pm[a] += 1; pm[b] -= 1;
        mp[a] -= 1; mp[b] += 1;
        mm[a] -= 1; mm[b] -= 1;
        const GridSample *s1 = at(pp), *s2 = at(pm), *s3 = at(mp), *s4 = at(mm);
        if (s1 && s2 && s3 && s4) out_mixed->push_back(value(*s1) - value(*s2) - value(*s3) + value(*s4));
      }
    }
  }
}

}  // namespace

ConvexityReport check_convexity(const FullProblem& full, const Box& region, int grid_per_dim) {
  full.validate();
  if (grid_per_dim < 3) throw PreconditionError("check_convexity: grid_per_dim must be at least 3");
  if (region.dim() != full.n) throw PreconditionError("check_convexity: region must be a box in R^n");

  const int k = full.dependent_dim();
  const Grid grid(region, grid_per_dim);
  std::vector<GridSample> samples(static_cast<std::size_t>(grid.total()));

  ConvexityReport report;
  for (long f = 0; f < grid.total(); ++f) {
    GridSample& s = samples[f];
    s.x = grid.point(grid.index(f));
    try {
      s.h = k > 0 ? full.h(s.x) : Vector(0);
      s.loss = full.penalty_loss(s.x);
      s.grad_loss = full.penalty_loss_grad(s.x);
      s.dh_dz = full.eval_h_jac(s.x).rightCols(k);
      s.ok = s.h.allFinite() && std::isfinite(s.loss) && s.grad_loss.allFinite() && s.dh_dz.allFinite();
    } catch (const Error&) {
      s.ok = false;
    }
    if (!s.ok) report.evaluation_failures.push_back(s.x);
  }
  report.samples_tested = static_cast<int>(grid.total() - static_cast<long>(report.evaluation_failures.size()));

  // Per-point verdicts.
  std::vector<char> h_linear_at(samples.size(), 1), h_convex_at(samples.size(), 1), loss_convex_at(samples.size(), 1);
  std::vector<char> nonneg_at(samples.size(), 1), nonpos_at(samples.size(), 1);
  std::vector<char> neg_at(samples.size(), 1), pos_at(samples.size(), 1);
  Matrix structural = Matrix::Zero(k, k);

  for (long f = 0; f < grid.total(); ++f) {
    const GridSample& s = samples[f];
    if (!s.ok) continue;
    const auto idx = grid.index(f);

    for (int comp = 0; comp < k; ++comp) {
      std::vector<double> diffs, mixed;
      second_differences(grid, samples, idx, [comp](const GridSample& g) { return g.h[comp]; }, &diffs, &mixed);
      const double scale = std::max(1.0, std::abs(s.h[comp]));
      for (double d : diffs) {
        if (std::abs(d) > kCurvatureTol * scale) h_linear_at[f] = 0;
        if (d < -kCurvatureTol * scale) h_convex_at[f] = 0;
      }
      for (double d : mixed) {
        if (std::abs(d) > kCurvatureTol * scale) h_linear_at[f] = 0;
      }
    }
    {
      std::vector<double> diffs;
      second_differences(grid, samples, idx, [](const GridSample& g) { return g.loss; }, &diffs, nullptr);
      const double scale = std::max(1.0, std::abs(s.loss));
      for (double d : diffs) {
        if (d < -kCurvatureTol * scale) loss_convex_at[f] = 0;
      }
    }

    if ((s.grad_loss.array() < -kSignTol).any()) nonneg_at[f] = 0;
    if ((s.grad_loss.array() > kSignTol).any()) nonpos_at[f] = 0;

    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        const double d = s.dh_dz(i, j);
        if (d != 0.0) structural(i, j) = 1.0;
      }
    }
  }

  // Sign of dh/dz over structurally nonzero entries.
  for (long f = 0; f < grid.total(); ++f) {
    const GridSample& s = samples[f];
    if (!s.ok) continue;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (structural(i, j) == 0.0) continue;
        const double d = s.dh_dz(i, j);
        if (!(d < 0.0)) neg_at[f] = 0;
        if (!(d > 0.0)) pos_at[f] = 0;
      }
    }
  }

  const auto all_ok = [&](const std::vector<char>& flags) {
    for (std::size_t f = 0; f < samples.size(); ++f) {
      if (samples[f].ok && !flags[f]) return false;
    }
    return true;
  };

  report.h_linear = k == 0 || all_ok(h_linear_at);
  report.h_convex = k == 0 || all_ok(h_convex_at);
  report.loss_convex = all_ok(loss_convex_at);
  report.grad_loss_nonneg = all_ok(nonneg_at);
  report.grad_loss_nonpos = all_ok(nonpos_at);

  if (k == 0 || structural.isZero()) {
    report.grad_p_h_sign = k == 0 ? GradientSign::kNotApplicable : GradientSign::kMixed;
  } else if (all_ok(neg_at)) {
    report.grad_p_h_sign = GradientSign::kNegative;
  } else if (all_ok(pos_at)) {
    report.grad_p_h_sign = GradientSign::kPositive;
  } else {
    report.grad_p_h_sign = GradientSign::kMixed;
  }

  const bool have_samples = report.samples_tested > 0;
  if (have_samples && report.loss_convex && report.h_linear) {
    report.condition_matched = ConvexityCondition::kHLinear;
  } else if (have_samples && report.loss_convex && report.h_convex && report.grad_loss_nonneg &&
             report.grad_p_h_sign == GradientSign::kNegative) {
    report.condition_matched = ConvexityCondition::kGradNonnegPConvex;
  } else if (have_samples && report.loss_convex && report.h_convex && report.grad_loss_nonpos &&
             report.grad_p_h_sign == GradientSign::kPositive) {
    report.condition_matched = ConvexityCondition::kGradNonposPConcave;
  }

  if (report.condition_matched == ConvexityCondition::kNone) {
    // Candidate condition: the one selected by the sign of dh/dz (ii when negative, iii when
    // positive); with a mixed sign neither applies and every point failing both is listed.
    for (std::size_t f = 0; f < samples.size(); ++f) {
      if (!samples[f].ok) continue;
      const bool base = loss_convex_at[f] && h_convex_at[f];
      bool ok = false;
      switch (report.grad_p_h_sign) {
        case GradientSign::kNegative:
          ok = base && nonneg_at[f];
          break;
        case GradientSign::kPositive:
          ok = base && nonpos_at[f];
          break;
        default:
          ok = base && ((nonneg_at[f] && neg_at[f]) || (nonpos_at[f] && pos_at[f]));
          break;
      }
      if (!ok) report.violations.push_back(samples[f].x);
    }
  }
  return report;
}

}  // namespace htopt
