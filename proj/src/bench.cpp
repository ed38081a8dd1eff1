#include "htopt/bench.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "json.hpp"

#include "htopt/errors.hpp"

namespace htopt {

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }

Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

double logsumexp2(double a, double b) {
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Weight of x2 in the softmax of (x1, x2).
double softmax_second(double x1, double x2) { return 1.0 / (1.0 + std::exp(x1 - x2)); }

std::pair<FullProblem, Box> academic_branch(bool upper) {
  const double sign = upper ? 1.0 : -1.0;

  FullProblem full;
  full.name = upper ? "academic-upper" : "academic";
  full.n = 2;
  full.m = 1;
  full.f = [](const Vector& x) { return logsumexp2(x[0], x[1]); };
  full.f_grad = [](const Vector& x) {
    const double w = softmax_second(x[0], x[1]);
    Vector g(2);
    g << 1.0 - w, w;
    return g;
  };
  full.h = [](const Vector& x) { return vec1(x[0] * x[0] + (x[1] - 4.0) * (x[1] - 4.0) - 1.0); };
  full.h_jac = [](const Vector& x) {
    Matrix j(1, 2);
    j << 2.0 * x[0], 2.0 * (x[1] - 4.0);
    return j;
  };
  full.p = [sign](const Vector& t) { return vec1(4.0 + sign * std::sqrt(1.0 - t[0] * t[0])); };
  full.p_jac = [sign](const Vector& t) { return mat1(-sign * t[0] / std::sqrt(1.0 - t[0] * t[0])); };
  full.lambda_h = 0.0;
  // l'' = w (1 - w) (p' - 1)^2 + w p'' with w the softmax weight of p, p'' = -sign / s^3.
  full.reduced_hessian = [sign](const Vector& t) {
    const double s = std::sqrt(1.0 - t[0] * t[0]);
    const double p = 4.0 + sign * s;
    const double dp = -sign * t[0] / s;
    const double ddp = -sign / (s * s * s);
    const double w = softmax_second(t[0], p);
    return mat1(w * (1.0 - w) * (dp - 1.0) * (dp - 1.0) + w * ddp);
  };

  Box box(vec1(-1.0 + kAcademicBoxShrink), vec1(1.0 - kAcademicBoxShrink));
  return {std::move(full), std::move(box)};
}

Box region2(double x2_lo, double x2_hi) {
  Vector lo(2), hi(2);
  lo << -1.0, x2_lo;
  hi << 1.0, x2_hi;
  return Box(lo, hi);
}

}  // namespace

std::pair<FullProblem, Box> academic_problem() { return academic_branch(false); }
std::pair<FullProblem, Box> academic_upper_problem() { return academic_branch(true); }

Box academic_region() { return region2(2.5, 4.0 - 1e-6); }
Box academic_upper_region() { return region2(4.0 + 1e-6, 5.5); }

Box nesterov_default_box() { return Box(vec1(-1.0), vec1(2.0)); }

FullProblem nesterov_full_problem(const NesterovParams& params) {
  if (!(params.c > 0.0) || !(params.d > 0.0) || !(params.mu >= 0.0)) {
    throw ProblemError("nesterov: c and d must be positive and mu nonnegative");
  }
  const double mu = params.mu, anchor = params.theta0, c = params.c, d = params.d;
  FullProblem full;
  full.name = "nesterov";
  full.n = 1;
  full.m = 1;
  full.f = [=](const Vector& t) {
    const double u = d * t[0];
    return std::log(c) + logsumexp2(u, -u) + 0.5 * mu * (t[0] - anchor) * (t[0] - anchor);
  };
  full.f_grad = [=](const Vector& t) { return vec1(d * std::tanh(d * t[0]) + mu * (t[0] - anchor)); };
  full.reduced_hessian = [=](const Vector& t) {
    const double sech = 1.0 / std::cosh(d * t[0]);
    return mat1(d * d * sech * sech + mu);
  };
  return full;
}

ReducedProblem nesterov_problem(double mu, double theta0, double c, double d, const Box& box) {
  if (box.dim() != 1) throw ProblemError("nesterov: box must be one-dimensional");
  ReducedProblem prob = reduce(nesterov_full_problem({mu, theta0, c, d}), box);
  prob.smoothness_bound = d * d + mu;
  return prob;
}

Vector scalar_minimizer(const ReducedProblem& prob) {
  if (prob.m != 1) throw PreconditionError("scalar_minimizer: problem must be one-dimensional");
  const auto g = [&](double t) { return prob.grad(vec1(t))[0]; };
  double lo = prob.box.lower()[0];
  double hi = prob.box.upper()[0];
  if (g(lo) >= 0.0) return vec1(lo);
  if (g(hi) <= 0.0) return vec1(hi);
  for (int it = 0; it < 200 && lo < hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (g(mid) > 0.0 ? hi : lo) = mid;
  }
  return vec1(0.5 * (lo + hi));
}

TunerConfig default_bench_config(Algorithm algorithm) {
  TunerConfig cfg;
  cfg.algorithm = algorithm;
  return cfg;
}

ExperimentSpec builtin_suite(const std::string& suite, const std::string& out_dir) {
  if (suite != "fig1" && suite != "fig2" && suite != "all") {
    throw ConfigError("unknown suite '" + suite + "' (expected fig1, fig2 or all)");
  }
  ExperimentSpec spec;
  spec.out_dir = out_dir;
  spec.configs = {default_bench_config(Algorithm::kHt1), default_bench_config(Algorithm::kHt2)};
  if (suite == "fig1" || suite == "all") {
    auto [full, box] = academic_problem();
    ReducedProblem prob = reduce(full, box);
    Vector star = scalar_minimizer(prob);
    spec.cases.push_back({std::move(prob), vec1(0.9), vec1(0.9), std::move(star)});
  }
  if (suite == "fig2" || suite == "all") {
    ReducedProblem prob = nesterov_problem();
    Vector star = scalar_minimizer(prob);
    spec.cases.push_back({std::move(prob), vec1(2.0), vec1(2.0), std::move(star)});
  }
  return spec;
}

std::string summary_json(const std::vector<RunSummary>& runs) {
  nlohmann::ordered_json doc;
  doc["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json j;
    j["problem"] = r.problem;
    j["algorithm"] = r.algorithm;
    j["gamma"] = r.gamma;
    j["beta"] = r.beta;
    j["epsilon"] = r.epsilon;
    j["outcome"] = to_string(r.outcome);
    j["iters"] = r.iters;
    j["final_loss"] = std::isfinite(r.final_loss) ? nlohmann::ordered_json(r.final_loss) : nlohmann::ordered_json();
    j["feasibility_violations"] = r.feasibility_violations;
    j["max_delta_V"] = r.max_delta_v ? nlohmann::ordered_json(*r.max_delta_v) : nlohmann::ordered_json();
    doc["runs"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(spec.out_dir, ec);
  if (ec || !fs::is_directory(spec.out_dir)) {
    throw IoError("cannot create output directory '" + spec.out_dir + "'");
  }

  ExperimentResult result;
  std::map<std::string, int> name_count;
  for (const auto& c : spec.cases) {
    for (std::size_t i = 0; i < spec.configs.size(); ++i) {
      const TunerConfig& cfg = spec.configs[i];
      SolveOptions opts;
      opts.theta_star = c.theta_star;
      const Trace trace = solve(c.problem, cfg, c.theta0, c.nu0, opts);

      std::string stem = c.problem.name + "_" + to_string(cfg.algorithm);
      if (name_count[stem]++ > 0) stem += "_" + std::to_string(i);
      const std::string path = (fs::path(spec.out_dir) / (stem + ".csv")).string();
      write_trace_csv(trace, path);

      RunSummary run;
      run.problem = c.problem.name;
      run.algorithm = to_string(cfg.algorithm);
      run.gamma = cfg.gamma;
      run.beta = cfg.beta;
      run.epsilon = cfg.epsilon;
      run.outcome = trace.outcome;
      run.iters = trace.records.back().k;
      run.final_loss = trace.records.back().loss;
      run.feasibility_violations = check_feasibility(trace, c.problem.box).violations.size();
      if (c.theta_star) run.max_delta_v = check_lyapunov_decrease(trace, *c.theta_star, cfg.gamma, 0.0).max_delta_v;
      run.csv_path = path;

      result.files.push_back(path);
      result.runs.push_back(std::move(run));
    }
  }

  result.summary_path = (fs::path(spec.out_dir) / "summary.json").string();
  std::ofstream out(result.summary_path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + result.summary_path + "'");
  out << summary_json(result.runs);
  if (!out) throw IoError("failed writing '" + result.summary_path + "'");
  return result;
}

}  // namespace htopt
