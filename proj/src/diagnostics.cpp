#include "htopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "htopt/errors.hpp"

namespace htopt {

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kConverged:
      return "converged";
    case Outcome::kMaxIters:
      return "max-iters";
    case Outcome::kDiverged:
      return "diverged";
  }
  return "max-iters";
}

Outcome parse_outcome(const std::string& s) {
  if (s == "converged") return Outcome::kConverged;
  if (s == "max-iters") return Outcome::kMaxIters;
  if (s == "diverged") return Outcome::kDiverged;
  throw IoError("unknown outcome '" + s + "'");
}

double lyapunov(const Vector& theta, const Vector& nu, const Vector& theta_star, double gamma) {
  return ((nu - theta_star).squaredNorm() + (nu - theta).squaredNorm()) / gamma;
}

LyapunovReport check_lyapunov_decrease(const Trace& trace, const Vector& theta_star, double gamma, double tol) {
  LyapunovReport report;
  const auto& recs = trace.records;
  for (std::size_t k = 0; k + 1 < recs.size(); ++k) {
    const double v_k = lyapunov(recs[k].theta, recs[k].nu, theta_star, gamma);
    const double v_next = lyapunov(recs[k + 1].theta, recs[k + 1].nu, theta_star, gamma);
    const double delta = v_next - v_k;
    if (!report.max_delta_v || delta > *report.max_delta_v || std::isnan(delta)) {
      report.max_delta_v = delta;
      report.worst_k = k;
    }
    if (!(delta <= tol * std::max(1.0, v_k))) report.violations.push_back({k, delta, v_k});
  }
  return report;
}

FeasibilityReport check_feasibility(const Trace& trace, const Box& box) {
  FeasibilityReport report;
  const auto audit = [&](std::size_t k, const char* field, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size() && i < box.dim(); ++i) {
      if (!(v[i] >= box.lower()[i])) {
        report.violations.push_back({k, field, i, v[i], box.lower()[i]});
      } else if (!(v[i] <= box.upper()[i])) {
        report.violations.push_back({k, field, i, v[i], box.upper()[i]});
      }
    }
  };
  for (const auto& r : trace.records) {
    audit(r.k, "theta", r.theta);
    audit(r.k, "nu", r.nu);
    audit(r.k, "theta_bar", r.theta_bar);
  }
  return report;
}

double oscillation_amplitude(const Trace& trace, const Vector& theta_star) {
  const auto& recs = trace.records;
  double amplitude = 0.0;
  for (std::size_t k = recs.size() / 2; k < recs.size(); ++k) {
    amplitude = std::max(amplitude, (recs[k].theta - theta_star).lpNorm<Eigen::Infinity>());
  }
  return amplitude;
}

double relative_error(const Vector& a, const Vector& b) {
  const double scale = a.norm() + b.norm();
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

GradCheckReport gradient_check(const ReducedProblem& prob, int samples, std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradCheckReport report;
  for (int s = 0; s < samples; ++s) {
    GradCheckPoint pt;
    pt.theta.resize(prob.m);
    for (int i = 0; i < prob.m; ++i) {
      const double lo = prob.box.lower()[i], hi = prob.box.upper()[i];
      pt.theta[i] = lo + unit(rng) * (hi - lo);
    }
    try {
      const Vector analytic = prob.grad(pt.theta);
      const Vector numeric = fd_gradient(prob.loss, pt.theta);
      if (!analytic.allFinite()) throw DifferentiationError("analytic gradient is not finite", -1);
      pt.relative_error = relative_error(analytic, numeric);
      report.max_relative_error = std::max(report.max_relative_error, pt.relative_error);
      if (!(pt.relative_error < tol)) ++report.above_tol;
    } catch (const DifferentiationError& e) {
      pt.failure = e.what();
      ++report.failures;
    }
    report.points.push_back(std::move(pt));
  }
  return report;
}

}  // namespace htopt
