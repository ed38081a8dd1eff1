#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "htopt/diagnostics.hpp"
#include "htopt/numerics.hpp"
#include "htopt/problem.hpp"

namespace htopt {

enum class Algorithm {
  kHt1,  ///< baseline high-order tuner, no feasibility control
  kHt2,  ///< time-varying gains a_k, b_{k+1} keeping every iterate in the box
};

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);

struct TunerConfig {
  double gamma = 0.05;
  double beta = 0.5;
  double epsilon = 1e-3;
  Algorithm algorithm = Algorithm::kHt2;
  std::size_t max_iters = 100000;
  double grad_tol = 1e-8;
};

/// Upper limit on gamma for a given beta: beta (2 - beta) / (8 + beta).
double gamma_upper_bound(double beta);

/// Throws ConfigError naming the violated inequality and its admissible range.
void validate_config(const TunerConfig& cfg);

struct TunerState {
  std::size_t k = 0;
  Vector theta;
  Vector nu;
  Vector theta_bar;
  double last_a = 1.0;
  double last_b = 1.0;
  double last_N = 1.0;

  static TunerState initial(Vector theta0, Vector nu0);
};

/// Distance to a bound below which an iterate counts as sitting on it.
inline constexpr double kBoundaryTol = 1e-12;

/// Gain a_k for the theta_bar update.
///
/// a_k = min{1, a_hat, a_tilde}; coordinates with zero gradient impose no bound. When the
/// binding coordinate already sits on its bound with the gradient pushing outward the gain
/// is negated: -min{epsilon, reverse bound}, where the reverse bound keeps the reversed step
/// inside the box for every coordinate. The step itself absorbs rounding of a few ulps past a
/// bound (see step_ht2).
double compute_gain_a(const TunerState& state, const TunerConfig& cfg, const Vector& grad_theta, double N_k,
                      const Box& box);

/// Gain b_{k+1} for the nu update; same rules with nu_k, grad l(theta_{k+1}) and step gamma.
double compute_gain_b(const TunerState& state, const TunerConfig& cfg, const Vector& grad_theta_next, double N_k,
                      const Box& box);

/// One iteration of the baseline tuner. Throws DivergenceError on non-finite values.
TunerState step_ht1(const TunerState& state, const TunerConfig& cfg, const ReducedProblem& prob);

/// One iteration with time-varying gains. theta_bar, theta_{k+1} and nu_{k+1} are each pulled
/// back onto the box when rounding puts them at most 8 ulps (of the bound magnitude) outside.
/// Throws PreconditionError if the state is not in the box and InvariantError if the step
/// leaves it by more.
TunerState step_ht2(const TunerState& state, const TunerConfig& cfg, const ReducedProblem& prob);

struct SolveOptions {
  /// When set, every record carries the Lyapunov value V.
  std::optional<Vector> theta_star;
};

/// Iterate until |grad l| <= grad_tol or max_iters steps. ht1 divergence ends the trace with
/// outcome diverged instead of throwing.
Trace solve(const ReducedProblem& prob, const TunerConfig& cfg, const Vector& theta0, const Vector& nu0,
            const SolveOptions& opts = {});

}  // namespace htopt
