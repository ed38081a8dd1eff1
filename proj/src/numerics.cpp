#include "htopt/numerics.hpp"

#include <cmath>
#include <random>
#include <string>

#include "htopt/errors.hpp"

namespace htopt {

bool all_finite(const Vector& v) { return v.allFinite(); }

double default_fd_step(double x) { return 1e-5 * (1.0 + std::abs(x)); }

Vector fd_gradient(const ScalarFn& f, const Vector& x, double step) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step > 0.0 ? step : default_fd_step(x[i]);
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw DifferentiationError("fd_gradient: non-finite function value at coordinate " + std::to_string(i), i);
    }
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix fd_jacobian(const VectorFn& f, const Vector& x, double step) {
  Matrix jac;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = step > 0.0 ? step : default_fd_step(x[i]);
    probe[i] = x[i] + h;
    const Vector fp = f(probe);
    probe[i] = x[i] - h;
    const Vector fm = f(probe);
    probe[i] = x[i];
    if (!fp.allFinite() || !fm.allFinite()) {
      throw DifferentiationError("fd_jacobian: non-finite function value at coordinate " + std::to_string(i), i);
    }
    if (i == 0) jac.resize(fp.size(), x.size());
    jac.col(i) = (fp - fm) / (2.0 * h);
  }
  if (x.size() == 0) jac.resize(f(x).size(), 0);
  return jac;
}

namespace {

Eigen::Index first_non_finite(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return i;
  }
  return -1;
}

}  // namespace

Vector fd_hessian_matvec(const VectorFn& grad, const Vector& x, const Vector& v, double step) {
  const double vnorm = v.norm();
  if (!(vnorm > 0.0)) throw PreconditionError("fd_hessian_matvec: direction must be nonzero");
  if (!(step > 0.0)) throw PreconditionError("fd_hessian_matvec: step must be positive");
  const Vector u = v / vnorm;
  const Vector gp = grad(x + step * u);
  const Vector gm = grad(x - step * u);
  Vector hv = (gp - gm) * (vnorm / (2.0 * step));
  if (const auto bad = first_non_finite(hv); bad >= 0) {
    throw DifferentiationError("fd_hessian_matvec: non-finite gradient component " + std::to_string(bad), bad);
  }
  return hv;
}

Vector fd_hessian_matvec(const ScalarFn& f, const Vector& x, const Vector& v, double step) {
  const VectorFn grad = [&f](const Vector& y) { return fd_gradient(f, y); };
  return fd_hessian_matvec(grad, x, v, step);
}

namespace {

struct PowerResult {
  bool converged = false;
  bool degenerate = false;  // start vector mapped to zero
  double lambda = 0.0;
  Vector v;
};

PowerResult power_iterate(const LinearOperator& matvec, Vector v, const PowerIterationOptions& opts) {
  PowerResult res;
  v.normalize();
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vector w = matvec(v);
    if (!w.allFinite()) {
      throw EigenEstimationError("max_eigenvalue_sym: operator returned non-finite values", v, res.lambda);
    }
    const double lambda = v.dot(w);
    const double residual = (w - lambda * v).norm();
    res.lambda = lambda;
    res.v = v;
    const double wnorm = w.norm();
    if (wnorm == 0.0) {
      res.degenerate = (it == 0);
      res.converged = true;
      return res;
    }
    if (residual <= opts.tol * std::abs(lambda)) {
      res.converged = true;
      return res;
    }
    v = w / wnorm;
  }
  return res;
}

}  // namespace

double max_eigenvalue_sym(const LinearOperator& matvec, int dim, const PowerIterationOptions& opts) {
  if (dim <= 0) throw PreconditionError("max_eigenvalue_sym: dimension must be positive");
  if (!(opts.tol > 0.0) || opts.max_iters <= 0) {
    throw PreconditionError("max_eigenvalue_sym: tol and max_iters must be positive");
  }

  PowerResult first = power_iterate(matvec, Vector::Ones(dim), opts);
  if (first.converged && !first.degenerate) return first.lambda;

  // Stagnated from the all-ones start: one restart from a seeded random direction.
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector start(dim);
  for (int i = 0; i < dim; ++i) start[i] = normal(rng);
  PowerResult second = power_iterate(matvec, start, opts);
  if (second.converged) return second.lambda;

  throw EigenEstimationError("max_eigenvalue_sym: no convergence within " + std::to_string(opts.max_iters) +
                                 " iterations (after one restart)",
                             second.v, second.lambda);
}

}  // namespace htopt
