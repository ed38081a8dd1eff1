#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

namespace htopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ScalarFn = std::function<double(const Vector&)>;
using VectorFn = std::function<Vector(const Vector&)>;
using MatrixFn = std::function<Matrix(const Vector&)>;
using LinearOperator = std::function<Vector(const Vector&)>;

/// Per-coordinate step used when no explicit step is requested: 1e-5 * (1 + |x_i|).
double default_fd_step(double x);

/// Central-difference gradient. A non-positive `step` selects default_fd_step per coordinate.
/// Throws DifferentiationError naming the coordinate whose stencil produced a non-finite value.
Vector fd_gradient(const ScalarFn& f, const Vector& x, double step = 0.0);

/// Central-difference Jacobian of a vector-valued map, one column per coordinate of x.
Matrix fd_jacobian(const VectorFn& f, const Vector& x, double step = 0.0);

/// Hessian-vector product as a central difference of gradients along v.
/// The step is taken along v / |v|, so `step` is a distance in x-space.
Vector fd_hessian_matvec(const VectorFn& grad, const Vector& x, const Vector& v, double step);

/// Same, for a scalar function whose gradient is itself obtained with fd_gradient.
Vector fd_hessian_matvec(const ScalarFn& f, const Vector& x, const Vector& v, double step);

struct PowerIterationOptions {
  double tol = 1e-8;
  int max_iters = 1000;
  std::uint64_t seed = 0;
};

/// Largest eigenvalue of a symmetric (PSD on the region of use) operator by power iteration.
///
/// Starts from the normalized all-ones vector. If that start stagnates (it lies in the
/// kernel, or the residual stops improving before reaching `tol`) the iteration restarts
/// once from a random vector drawn with `seed`. Converged means
/// |A v - lambda v| <= tol * |lambda| with lambda the Rayleigh quotient of the unit iterate v.
/// Throws EigenEstimationError with the last iterate otherwise.
double max_eigenvalue_sym(const LinearOperator& matvec, int dim, const PowerIterationOptions& opts = {});

inline double max_eigenvalue_sym(const LinearOperator& matvec, int dim, double tol, int max_iters) {
  return max_eigenvalue_sym(matvec, dim, PowerIterationOptions{tol, max_iters, 0});
}

bool all_finite(const Vector& v);

}  // namespace htopt
