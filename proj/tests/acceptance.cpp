// Acceptance checks. Prints one line per criterion:
//   PASS, FAIL, or DISCREPANCY (a qualitative claim that did not reproduce; reported, not failed).
// Exit status is the number of FAIL lines.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "htopt/bench.hpp"
#include "htopt/diagnostics.hpp"
#include "htopt/errors.hpp"
#include "htopt/problem.hpp"
#include "htopt/tuner.hpp"

using namespace htopt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int g_failures = 0;

void report(int id, const char* status, const std::string& title, const std::string& detail) {
  std::printf("[%-11s] %2d %-28s %s\n", status, id, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

void verdict(int id, bool ok, const std::string& title, const std::string& detail) {
  if (!ok) ++g_failures;
  report(id, ok ? "PASS" : "FAIL", title, detail);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Vector v1(double x) { return Vector::Constant(1, x); }

// ---------------------------------------------------------------------------
// Oracles, written without the library.

double academic_loss(double x) { return std::log(std::exp(x) + std::exp(4.0 - std::sqrt(1.0 - x * x))); }

double academic_slope(double x) {
  const double s = std::sqrt(1.0 - x * x);
  const double w = 1.0 / (1.0 + std::exp(x - (4.0 - s)));  // weight of e^{p}
  return (1.0 - w) + w * (x / s);
}

double bisect(double (*g)(double), double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double nesterov_slope(double t) { return std::tanh(t) + 1e-4 * (t - 2.0); }

double lyapunov_oracle(double theta, double nu, double star, double gamma) {
  return ((nu - star) * (nu - star) + (nu - theta) * (nu - theta)) / gamma;
}

bool gains_valid(double beta, double gamma) {
  if (!(beta > 0.0 && beta <= 1.0)) return false;
  return gamma > 0.0 && gamma < beta * (2.0 - beta) / (8.0 + beta);
}

// Gain rule: a = min{1, a_hat, a_tilde}; on the boundary -min{eps, reverse room}.
double gain_oracle(const Vector& x, const Vector& g, double n, double scale, double eps, const Vector& lo,
                   const Vector& hi) {
  double best = kInf;
  double best_dist = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double d;
    if (g[i] < 0.0) {
      d = hi[i] - x[i];
    } else if (g[i] > 0.0) {
      d = x[i] - lo[i];
    } else {
      continue;
    }
    const double q = d * n / (scale * std::abs(g[i]));
    if (q < best) {
      best = q;
      best_dist = d;
    }
  }
  if (best == kInf) return 1.0;
  if (best_dist > 1e-12) return std::min(1.0, best);
  double room = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (g[i] == 0.0) continue;
    const double d = g[i] > 0.0 ? hi[i] - x[i] : x[i] - lo[i];
    room = std::min(room, d * n / (scale * std::abs(g[i])));
  }
  const double r = -std::min(eps, room);
  return r == 0.0 ? 0.0 : r;
}

bool inside(const Vector& v, const Vector& lo, const Vector& hi) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(lo[i] <= v[i] && v[i] <= hi[i])) return false;
  }
  return true;
}

TunerConfig reference_config(Algorithm alg) {
  TunerConfig cfg;
  cfg.gamma = 0.05;
  cfg.beta = 0.5;
  cfg.epsilon = 1e-3;
  cfg.algorithm = alg;
  return cfg;
}

// Fixed-length run: no early stop, exactly `steps` iterations (or until divergence).
Trace fixed_run(const ReducedProblem& prob, Algorithm alg, double start, std::size_t steps) {
  TunerConfig cfg = reference_config(alg);
  cfg.grad_tol = 0.0;
  cfg.max_iters = steps;
  return solve(prob, cfg, v1(start), v1(start));
}

std::size_t box_violations(const Trace& t, double lo, double hi) {
  std::size_t n = 0;
  for (const auto& r : t.records) {
    for (const Vector* v : {&r.theta, &r.nu, &r.theta_bar}) {
      if (!((*v)[0] >= lo && (*v)[0] <= hi)) ++n;
    }
  }
  return n;
}

double tail_amplitude(const Trace& t, double star) {
  double amp = 0.0;
  for (std::size_t k = t.records.size() / 2; k < t.records.size(); ++k) {
    amp = std::max(amp, std::abs(t.records[k].theta[0] - star));
  }
  return amp;
}

}  // namespace

int main() {
  const double academic_star = bisect(academic_slope, -1.0 + 1e-12, 1.0 - 1e-12);
  const double academic_lstar = academic_loss(academic_star);
  const double nesterov_star = bisect(nesterov_slope, -1.0, 2.0);
  std::printf("oracles: academic theta*=%.15f l*=%.15f, nesterov theta*=%.15e\n", academic_star, academic_lstar,
              nesterov_star);

  const ReducedProblem nesterov = nesterov_problem();
  auto [academic_full, academic_box] = academic_problem();
  const ReducedProblem academic = reduce(academic_full, academic_box);

  // 1
  const Trace nes_ht2 = fixed_run(nesterov, Algorithm::kHt2, 2.0, 10000);
  {
    const std::size_t bad = box_violations(nes_ht2, -1.0, 2.0);
    verdict(1, bad == 0 && nes_ht2.records.size() == 10001, "ht2 feasibility (Nesterov)",
            std::to_string(nes_ht2.records.size() - 1) + " steps, " + std::to_string(bad) + " violations");
  }

  // 2
  const Trace nes_ht1 = fixed_run(nesterov, Algorithm::kHt1, 2.0, 10000);
  {
    const std::size_t bad = box_violations(nes_ht1, -1.0, 2.0);
    if (bad > 0) {
      verdict(2, true, "ht1 violates box (Nesterov)", std::to_string(bad) + " violations");
    } else {
      double lo = kInf, hi = -kInf;
      for (const auto& r : nes_ht1.records) {
        for (const Vector* v : {&r.theta, &r.nu, &r.theta_bar}) {
          lo = std::min(lo, (*v)[0]);
          hi = std::max(hi, (*v)[0]);
        }
      }
      report(2, "DISCREPANCY", "ht1 violates box (Nesterov)",
             "no violation in 10000 steps; iterates span [" + fmt("%.6g", lo) + ", " + fmt("%.6g", hi) + "]");
    }
  }

  // 3
  const Trace aca_ht2 = fixed_run(academic, Algorithm::kHt2, 0.9, 10000);
  {
    std::size_t hit = 0;
    bool reached = false;
    for (const auto& r : aca_ht2.records) {
      if (std::abs(r.loss - academic_lstar) < 1e-6) {
        hit = r.k;
        reached = true;
        break;
      }
    }
    verdict(3, reached, "ht2 converges (academic)",
            reached ? "|l - l*| < 1e-6 at k = " + std::to_string(hit) + fmt(", l* = %.10f", academic_lstar)
                    : "gap never below 1e-6");
  }

  // 4
  {
    std::string detail;
    bool failed = false;
    for (double start : {0.9, 0.95, 0.99}) {
      const Trace t = fixed_run(academic, Algorithm::kHt1, start, 10000);
      bool bad = t.outcome == Outcome::kDiverged;
      double widest = 0.0;
      for (const auto& r : t.records) {
        widest = std::max(widest, std::abs(r.theta[0]));
        if (std::abs(r.theta[0]) > 1.0 || !std::isfinite(r.loss)) bad = true;
      }
      failed = failed || bad;
      detail += fmt("theta0=%.2f: ", start) + (bad ? "fails" : "ok") + fmt(" (max|theta| %.6f); ", widest);
    }
    if (failed) {
      verdict(4, true, "ht1 fails (academic)", detail);
    } else {
      report(4, "DISCREPANCY", "ht1 fails (academic)", "no failure: " + detail);
    }
  }

  // 5
  {
    const Trace t = solve(nesterov, reference_config(Algorithm::kHt2), v1(2.0), v1(2.0));
    const double err = std::abs(t.records.back().theta[0] - nesterov_star);
    verdict(5, err < 1e-3, "ht2 converges (Nesterov)",
            fmt("|theta - theta*| = %.3e", err) + " after " + std::to_string(t.records.back().k) + " steps");
  }

  // 6
  {
    std::size_t bad = 0, steps = 0;
    double worst = -kInf;
    const auto scan = [&](const Trace& t, double star) {
      for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
        const auto& a = t.records[k];
        const auto& b = t.records[k + 1];
        const double va = lyapunov_oracle(a.theta[0], a.nu[0], star, 0.05);
        const double vb = lyapunov_oracle(b.theta[0], b.nu[0], star, 0.05);
        const double dv = vb - va;
        worst = std::max(worst, dv / std::max(1.0, va));
        if (!(dv <= 1e-10 * std::max(1.0, va))) ++bad;
        ++steps;
      }
    };
    scan(nes_ht2, nesterov_star);
    scan(aca_ht2, academic_star);
    verdict(6, bad == 0, "Lyapunov monotone",
            std::to_string(steps) + " steps, " + std::to_string(bad) + " violations, worst dV/max(1,V) = " +
                fmt("%.3e", worst));
  }

  // 7
  {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ub(-0.2, 1.2), ug(-0.02, 0.15), unit(0.0, 1.0);
    int mismatches = 0, boundary = 0;
    for (int i = 0; i < 1000; ++i) {
      double beta = ub(rng), gamma = ug(rng);
      if (i % 5 == 0) {
        beta = i % 10 == 0 ? 1.0 : 0.05 + 0.95 * unit(rng);
        gamma = beta * (2.0 - beta) / (8.0 + beta);
        ++boundary;
      }
      TunerConfig cfg;
      cfg.beta = beta;
      cfg.gamma = gamma;
      bool accepted = true;
      try {
        validate_config(cfg);
      } catch (const ConfigError&) {
        accepted = false;
      }
      if (accepted != gains_valid(beta, gamma)) ++mismatches;
      if (i % 5 == 0 && accepted) ++mismatches;
    }
    verdict(7, mismatches == 0, "gain validation",
            "1000 pairs (" + std::to_string(boundary) + " on the bound), " + std::to_string(mismatches) +
                " mismatches");
  }

  // 8
  {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    int mismatches = 0, exits = 0, reversed = 0, partial = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const int m = trial % 3 == 0 ? 1 : (trial % 3 == 1 ? 2 : 5);
      Vector lo(m), hi(m), theta(m), nu(m), g(m), g_next(m);
      for (int i = 0; i < m; ++i) {
        lo[i] = -5.0 * unit(rng);
        hi[i] = lo[i] + 0.01 + 5.0 * unit(rng);
      }
      const auto sample = [&](int i) {
        const double u = unit(rng);
        if (u < 0.2) return lo[i];
        if (u < 0.4) return hi[i];
        if (u < 0.6) return lo[i] + 1e-3 * unit(rng) * (hi[i] - lo[i]);
        if (u < 0.8) return hi[i] - 1e-3 * unit(rng) * (hi[i] - lo[i]);
        return lo[i] + unit(rng) * (hi[i] - lo[i]);
      };
      const auto grad = [&]() { return unit(rng) < 0.1 ? 0.0 : normal(rng) * std::pow(10.0, -3.0 + 5.0 * unit(rng)); };
      for (int i = 0; i < m; ++i) {
        theta[i] = sample(i);
        nu[i] = sample(i);
        g[i] = grad();
        g_next[i] = grad();
      }
      TunerConfig cfg;
      cfg.beta = 0.05 + 0.95 * unit(rng);
      cfg.gamma = (0.01 + 0.98 * unit(rng)) * gamma_upper_bound(cfg.beta);
      cfg.epsilon = 1e-4 + 0.5 * unit(rng);
      const double n = 1.0 + 10.0 * unit(rng);
      const Box box(lo, hi);
      const TunerState state = TunerState::initial(theta, nu);

      const double a = compute_gain_a(state, cfg, g, n, box);
      const double b = compute_gain_b(state, cfg, g_next, n, box);
      if (a != gain_oracle(theta, g, n, cfg.gamma * cfg.beta, cfg.epsilon, lo, hi)) ++mismatches;
      if (b != gain_oracle(nu, g_next, n, cfg.gamma, cfg.epsilon, lo, hi)) ++mismatches;
      reversed += (a < 0.0) + (b < 0.0);
      partial += (a > 0.0 && a < 1.0) + (b > 0.0 && b < 1.0);

      // The same state pushed through a full ht2 step: gradient g at theta_k, g_next elsewhere.
      ReducedProblem prob{"random", m, {}, {}, {}, std::nullopt, box};
      prob.loss = [](const Vector&) { return 0.0; };
      prob.grad = [&](const Vector& t) { return t == theta ? g : g_next; };
      prob.hessian_spectrum = [n](const Vector&) { return n - 1.0; };
      try {
        const TunerState next = step_ht2(state, cfg, prob);
        if (!inside(next.theta_bar, lo, hi) || !inside(next.theta, lo, hi) || !inside(next.nu, lo, hi)) ++exits;
        if (next.last_a != a) ++mismatches;
        const Vector& g_used = next.theta == theta ? g : g_next;
        if (next.last_b != gain_oracle(nu, g_used, next.last_N, cfg.gamma, cfg.epsilon, lo, hi)) ++mismatches;
      } catch (const Error&) {
        ++exits;
      }
    }
    verdict(8, mismatches == 0 && exits == 0, "gain formulas",
            "2000 gains and 1000 steps (" + std::to_string(reversed) + " reversed, " + std::to_string(partial) + " partial), " +
                std::to_string(mismatches) + " mismatches, " + std::to_string(exits) + " box exits");
  }

  // 9
  {
    const ReducedProblem wide = nesterov_problem(1e-4, 2.0, 0.5, 1.0, Box(v1(-10.0), v1(10.0)));
    TunerConfig c1 = reference_config(Algorithm::kHt1), c2 = reference_config(Algorithm::kHt2);
    const Trace t1 = solve(wide, c1, v1(2.0), v1(2.0));
    const Trace t2 = solve(wide, c2, v1(2.0), v1(2.0));
    bool unit_gains = true, identical = t1.records.size() == t2.records.size();
    for (std::size_t k = 1; k < t2.records.size(); ++k) unit_gains = unit_gains && t2.records[k].a_k == 1.0 && t2.records[k].b_k == 1.0;
    for (std::size_t k = 0; identical && k < t1.records.size(); ++k) {
      identical = t1.records[k].theta == t2.records[k].theta && t1.records[k].nu == t2.records[k].nu &&
                  t1.records[k].theta_bar == t2.records[k].theta_bar;
    }
    verdict(9, unit_gains && identical, "ht1/ht2 equivalence",
            std::to_string(t2.records.size()) + " records, gains all 1: " + (unit_gains ? "yes" : "no") +
                ", bitwise identical: " + (identical ? "yes" : "no"));
  }

  // 10
  {
    std::string detail;
    bool ok = true;
    for (const ReducedProblem* prob : {&academic, &nesterov}) {
      std::mt19937_64 rng(0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double lo = prob->box.lower()[0], hi = prob->box.upper()[0];
      double worst = 0.0;
      int bad = 0;
      for (int i = 0; i < 100; ++i) {
        const double t = lo + unit(rng) * (hi - lo);
        const double h = 1e-5 * (1.0 + std::abs(t));
        const double fd = (prob->loss(v1(t + h)) - prob->loss(v1(t - h))) / (2.0 * h);
        const double an = prob->grad(v1(t))[0];
        const double denom = std::abs(an) + std::abs(fd);
        const double rel = denom == 0.0 ? 0.0 : std::abs(an - fd) / denom;
        if (!(rel < 1e-6)) ++bad;
        worst = std::max(worst, std::isfinite(rel) ? rel : kInf);
      }
      ok = ok && bad == 0;
      detail += prob->name + fmt(": max rel err %.3e", worst) + ", " + std::to_string(bad) + " above 1e-6; ";
    }
    verdict(10, ok, "gradient correctness", detail);
  }

  // 11
  {
    const ConvexityReport lower = check_convexity(academic_full, academic_region(), 50);
    const ConvexityReport upper = check_convexity(academic_upper_problem().first, academic_upper_region(), 50);
    const bool ok = lower.grad_p_h_sign == GradientSign::kNegative &&
                    lower.condition_matched == ConvexityCondition::kGradNonnegPConvex && lower.violations.empty() &&
                    upper.grad_p_h_sign == GradientSign::kPositive;
    verdict(11, ok, "convexity certification",
            "lower: " + to_string(lower.grad_p_h_sign) + ", " + to_string(lower.condition_matched) + ", " +
                std::to_string(lower.violations.size()) + " violations; upper: " + to_string(upper.grad_p_h_sign) +
                ", " + to_string(upper.condition_matched));
  }

  // 12
  {
    const ExperimentSpec suite = builtin_suite("all", "");
    std::size_t steps = 0, bad = 0;
    double worst = 0.0;
    for (const auto& c : suite.cases) {
      for (const auto& cfg : suite.configs) {
        const Trace t = solve(c.problem, cfg, c.theta0, c.nu0);
        for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
          const auto& next = t.records[k + 1];
          for (Eigen::Index i = 0; i < next.theta.size(); ++i) {
            const double combo = (1.0 - cfg.beta) * next.theta_bar[i] + cfg.beta * t.records[k].nu[i];
            const double scale = std::max({1.0, std::abs(next.theta_bar[i]), std::abs(t.records[k].nu[i])});
            const double err = std::abs(next.theta[i] - combo) / scale;
            worst = std::max(worst, err);
            if (!(err <= 8.0 * std::numeric_limits<double>::epsilon())) ++bad;
          }
          ++steps;
        }
      }
    }
    verdict(12, bad == 0, "convex-combination identity",
            std::to_string(steps) + " steps, worst relative gap " + fmt("%.3e", worst) + ", " + std::to_string(bad) +
                " above 8 eps");
  }

  // 13
  {
    const ReducedProblem unbounded = nesterov_problem(1e-4, 2.0, 0.5, 1.0, Box(v1(-1e6), v1(1e6)));
    const Trace t1 = solve(unbounded, reference_config(Algorithm::kHt1), v1(2.0), v1(2.0));
    const Trace t2 = solve(nesterov, reference_config(Algorithm::kHt2), v1(2.0), v1(2.0));
    const double a1 = tail_amplitude(t1, nesterov_star), a2 = tail_amplitude(t2, nesterov_star);
    verdict(13, a2 <= a1, "oscillation amplitude",
            fmt("ht2 %.6e", a2) + fmt(" vs ht1 %.6e", a1) + (a2 == a1 ? " (equal)" : ""));
  }

  std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
