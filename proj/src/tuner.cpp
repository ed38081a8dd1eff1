#include "htopt/tuner.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "htopt/errors.hpp"

namespace htopt {

std::string to_string(Algorithm a) { return a == Algorithm::kHt1 ? "ht1" : "ht2"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "ht1") return Algorithm::kHt1;
  if (s == "ht2") return Algorithm::kHt2;
  throw ConfigError("unknown algorithm '" + s + "' (expected ht1 or ht2)");
}

double gamma_upper_bound(double beta) { return beta * (2.0 - beta) / (8.0 + beta); }

void validate_config(const TunerConfig& cfg) {
  std::ostringstream msg;
  msg.precision(6);
  if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) {
    msg << "beta=" << cfg.beta << " violates 0 < beta <= 1";
    throw ConfigError(msg.str());
  }
  const double bound = gamma_upper_bound(cfg.beta);
  if (!(cfg.gamma > 0.0 && cfg.gamma < bound)) {
    msg << "gamma=" << cfg.gamma << " violates 0 < gamma < beta(2-beta)/(8+beta) = " << bound
        << " for beta=" << cfg.beta << "; admissible range is (0, " << bound << ")";
    throw ConfigError(msg.str());
  }
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    msg << "epsilon=" << cfg.epsilon << " violates 0 < epsilon < 1";
    throw ConfigError(msg.str());
  }
  if (!(cfg.grad_tol >= 0.0)) throw ConfigError("grad_tol must be nonnegative");
  if (cfg.max_iters == 0) throw ConfigError("max_iters must be positive");
}

TunerState TunerState::initial(Vector theta0, Vector nu0) {
  TunerState s;
  s.theta_bar = theta0;
  s.theta = std::move(theta0);
  s.nu = std::move(nu0);
  return s;
}

namespace {

Vector gain_step(const Vector& x, double coefficient, const Vector& scaled_grad) {
  return x - coefficient * scaled_grad;
}

// A step whose exact value lands on a bound can round a few ulps past it. Pull such
// excursions back; anything larger is left for the invariant check to report.
void snap_to_box(Vector& v, const Box& box) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double lo = box.lower()[i], hi = box.upper()[i];
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (v[i] < lo && lo - v[i] <= slack) v[i] = lo;
    if (v[i] > hi && v[i] - hi <= slack) v[i] = hi;
  }
}

/// Shared gain rule. `x` is theta_k (for a) or nu_k (for b); `scale` is gamma*beta or gamma.
double boundary_gain(const Vector& x, const Vector& grad, double N_k, double scale, double epsilon, const Box& box) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double forward = kInf;
  double binding_distance = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    const double distance = g < 0.0 ? box.upper()[i] - x[i] : x[i] - box.lower()[i];
    const double q = distance * N_k / (scale * std::abs(g));
    if (q < forward) {
      forward = q;
      binding_distance = distance;
    }
  }
  if (forward == kInf) return 1.0;

  if (binding_distance <= kBoundaryTol) {
    // Pinned on a bound with the gradient pointing out: step backwards, as far as epsilon
    // allows without any coordinate leaving through the opposite side.
    double reverse = kInf;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double g = grad[i];
      if (g == 0.0) continue;
      const double distance = g > 0.0 ? box.upper()[i] - x[i] : x[i] - box.lower()[i];
      reverse = std::min(reverse, distance * N_k / (scale * std::abs(g)));
    }
    const double gain = -std::min(epsilon, reverse);
    return gain == 0.0 ? 0.0 : gain;  // drop the sign of -0
  }
  return std::min(1.0, forward);
}

void require_in_box(const Vector& v, const Box& box, const char* what) {
  if (!box.contains(v)) throw PreconditionError(std::string(what) + " is outside the box");
}

}  // namespace

double compute_gain_a(const TunerState& state, const TunerConfig& cfg, const Vector& grad_theta, double N_k,
                      const Box& box) {
  require_in_box(state.theta, box, "compute_gain_a: theta_k");
  return boundary_gain(state.theta, grad_theta, N_k, cfg.gamma * cfg.beta, cfg.epsilon, box);
}

double compute_gain_b(const TunerState& state, const TunerConfig& cfg, const Vector& grad_theta_next, double N_k,
                      const Box& box) {
  require_in_box(state.nu, box, "compute_gain_b: nu_k");
  return boundary_gain(state.nu, grad_theta_next, N_k, cfg.gamma, cfg.epsilon, box);
}

namespace {

TunerState advance(const TunerState& state, const TunerConfig& cfg, const ReducedProblem& prob, bool feasible_gains) {
  const double N_k = 1.0 + prob.hessian_spectrum(state.theta);
  if (!std::isfinite(N_k)) throw DivergenceError("normalizing signal is not finite", state.theta);

  const Vector grad = prob.grad(state.theta);
  if (!grad.allFinite()) throw DivergenceError("gradient is not finite at theta_k", state.theta);
  const Vector scaled = grad / N_k;

  const double a = feasible_gains ? compute_gain_a(state, cfg, grad, N_k, prob.box) : 1.0;
  Vector theta_bar = gain_step(state.theta, cfg.gamma * cfg.beta * a, scaled);
  if (feasible_gains) snap_to_box(theta_bar, prob.box);
  Vector theta_next = theta_bar - cfg.beta * (theta_bar - state.nu);
  if (feasible_gains) snap_to_box(theta_next, prob.box);

  const Vector grad_next = prob.grad(theta_next);
  const double loss_next = prob.loss(theta_next);
  if (!grad_next.allFinite() || !std::isfinite(loss_next)) {
    throw DivergenceError("loss or gradient is not finite at theta_{k+1}", theta_next);
  }
  const Vector scaled_next = grad_next / N_k;

  const double b = feasible_gains ? compute_gain_b(state, cfg, grad_next, N_k, prob.box) : 1.0;
  Vector nu_next = gain_step(state.nu, cfg.gamma * b, scaled_next);
  if (!nu_next.allFinite()) throw DivergenceError("nu_{k+1} is not finite", theta_next);
  if (feasible_gains) snap_to_box(nu_next, prob.box);

  if (feasible_gains) {
    if (!prob.box.contains(theta_bar) || !prob.box.contains(theta_next) || !prob.box.contains(nu_next)) {
      throw InvariantError("ht2 step left the box at k = " + std::to_string(state.k));
    }
  }

  TunerState next;
  next.k = state.k + 1;
  next.theta = std::move(theta_next);
  next.nu = std::move(nu_next);
  next.theta_bar = theta_bar;
  next.last_a = a;
  next.last_b = b;
  next.last_N = N_k;
  return next;
}

}  // namespace

TunerState step_ht1(const TunerState& state, const TunerConfig& cfg, const ReducedProblem& prob) {
  return advance(state, cfg, prob, false);
}

TunerState step_ht2(const TunerState& state, const TunerConfig& cfg, const ReducedProblem& prob) {
  require_in_box(state.theta, prob.box, "step_ht2: theta_k");
  require_in_box(state.nu, prob.box, "step_ht2: nu_k");
  return advance(state, cfg, prob, true);
}

namespace {

TraceRecord make_record(const TunerState& s, const ReducedProblem& prob, const TunerConfig& cfg,
                        const SolveOptions& opts) {
  TraceRecord r;
  r.k = s.k;
  r.theta = s.theta;
  r.nu = s.nu;
  r.theta_bar = s.theta_bar;
  r.loss = prob.loss(s.theta);
  const Vector g = prob.grad(s.theta);
  r.grad_norm = g.allFinite() ? g.norm() : std::numeric_limits<double>::quiet_NaN();
  if (s.k == 0) {
    r.a_k = r.b_k = r.N_k = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.a_k = s.last_a;
    r.b_k = s.last_b;
    r.N_k = s.last_N;
  }
  if (opts.theta_star) r.V = lyapunov(s.theta, s.nu, *opts.theta_star, cfg.gamma);
  r.feasible = prob.box.contains(s.theta) && prob.box.contains(s.nu) && prob.box.contains(s.theta_bar);
  return r;
}

}  // namespace

Trace solve(const ReducedProblem& prob, const TunerConfig& cfg, const Vector& theta0, const Vector& nu0,
            const SolveOptions& opts) {
  validate_config(cfg);
  if (theta0.size() != prob.m || nu0.size() != prob.m) {
    throw PreconditionError("solve: initial point has the wrong dimension");
  }
  if (opts.theta_star && opts.theta_star->size() != prob.m) {
    throw PreconditionError("solve: theta_star has the wrong dimension");
  }
  const bool ht2 = cfg.algorithm == Algorithm::kHt2;
  if (ht2) {
    require_in_box(theta0, prob.box, "solve: theta0");
    require_in_box(nu0, prob.box, "solve: nu0");
  }

  Trace trace;
  trace.problem_name = prob.name;
  trace.algorithm = to_string(cfg.algorithm);
  trace.gamma = cfg.gamma;
  trace.beta = cfg.beta;
  trace.epsilon = cfg.epsilon;
  trace.grad_tol = cfg.grad_tol;
  trace.max_iters = cfg.max_iters;

  TunerState state = TunerState::initial(theta0, nu0);
  trace.records.push_back(make_record(state, prob, cfg, opts));
  if (!std::isfinite(trace.records.back().loss) || !std::isfinite(trace.records.back().grad_norm)) {
    trace.outcome = Outcome::kDiverged;
    trace.message = "loss or gradient is not finite at theta_0";
    return trace;
  }

  while (true) {
    if (trace.records.back().grad_norm <= cfg.grad_tol) {
      trace.outcome = Outcome::kConverged;
      break;
    }
    if (state.k >= cfg.max_iters) {
      trace.outcome = Outcome::kMaxIters;
      break;
    }
    try {
      state = ht2 ? step_ht2(state, cfg, prob) : step_ht1(state, cfg, prob);
    } catch (const DivergenceError& e) {
      TraceRecord r;
      r.k = state.k + 1;
      r.theta = e.iterate();
      r.nu = state.nu;
      r.theta_bar = state.theta_bar;
      r.loss = prob.loss(r.theta);
      const Vector g = prob.grad(r.theta);
      r.grad_norm = g.allFinite() ? g.norm() : std::numeric_limits<double>::quiet_NaN();
      r.a_k = r.b_k = r.N_k = std::numeric_limits<double>::quiet_NaN();
      if (opts.theta_star) r.V = lyapunov(r.theta, r.nu, *opts.theta_star, cfg.gamma);
      r.feasible = prob.box.contains(r.theta) && prob.box.contains(r.nu);
      trace.records.push_back(std::move(r));
      trace.outcome = Outcome::kDiverged;
      trace.message = e.what();
      break;
    }
    trace.records.push_back(make_record(state, prob, cfg, opts));
  }
  return trace;
}

}  // namespace htopt
