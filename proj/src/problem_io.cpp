#include "htopt/problem_io.hpp"

#include <fstream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "htopt/bench.hpp"
#include "htopt/errors.hpp"
#include "json.hpp"

namespace htopt {

namespace {

using nlohmann::json;

Vector to_vector(const json& j, const std::string& what) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array()) throw ProblemError(what + " must be a number or an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ProblemError(what + " must contain only numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Box to_box(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("lower") || !j.contains("upper")) {
    throw ProblemError(what + " needs \"lower\" and \"upper\"");
  }
  return Box(to_vector(j["lower"], what + ".lower"), to_vector(j["upper"], what + ".upper"));
}

double number_or(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_number()) throw ProblemError(std::string("params.") + key + " must be a number");
  return params[key].get<double>();
}

LoadedProblem builtin(const std::string& which, const json& params, const std::optional<Box>& box_override,
                      const ReduceOptions& opts) {
  if (which == "academic" || which == "academic-upper") {
    auto [full, box] = which == "academic" ? academic_problem() : academic_upper_problem();
    const Box used = box_override.value_or(box);
    ReducedProblem reduced = reduce(full, used, opts);
    Box region = which == "academic" ? academic_region() : academic_upper_region();
    return {which, std::move(full), std::move(reduced), std::move(region), Vector::Constant(1, 0.9)};
  }
  if (which == "nesterov") {
    NesterovParams np;
    np.mu = number_or(params, "mu", np.mu);
    np.theta0 = number_or(params, "theta0", np.theta0);
    np.c = number_or(params, "c", np.c);
    np.d = number_or(params, "d", np.d);
    FullProblem full = nesterov_full_problem(np);
    const Box used = box_override.value_or(nesterov_default_box());
    ReducedProblem reduced = reduce(full, used, opts);
    reduced.smoothness_bound = np.d * np.d + np.mu;
    return {which, std::move(full), std::move(reduced), used, Vector::Constant(1, 2.0)};
  }
  throw ProblemError("unknown builtin problem '" + which + "' (expected academic, academic-upper or nesterov)");
}

LoadedProblem quadratic(const std::string& name, const json& params, const std::optional<Box>& box,
                        const ReduceOptions& opts) {
  if (!box) throw ProblemError("quadratic problems need a \"box\"");
  if (!params.contains("Q") || !params["Q"].is_array()) throw ProblemError("quadratic params need a matrix \"Q\"");
  const json& rows = params["Q"];
  const auto dim = static_cast<Eigen::Index>(rows.size());
  Matrix q(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const Vector row = to_vector(rows[static_cast<std::size_t>(i)], "params.Q row");
    if (row.size() != dim) throw ProblemError("params.Q must be square");
    q.row(i) = row.transpose();
  }
  const Vector c = params.contains("c") ? to_vector(params["c"], "params.c") : Vector::Zero(dim);
  if (c.size() != dim) throw ProblemError("params.c must match the size of Q");
  if (!q.isApprox(q.transpose(), 1e-12)) throw ProblemError("params.Q must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
    throw ProblemError("params.Q must be positive semidefinite");
  }

  FullProblem full;
  full.name = name;
  full.n = static_cast<int>(dim);
  full.m = static_cast<int>(dim);
  full.f = [q, c](const Vector& t) { return 0.5 * t.dot(q * t) + c.dot(t); };
  full.f_grad = [q, c](const Vector& t) -> Vector { return q * t + c; };
  full.reduced_hessian = [q](const Vector&) { return q; };

  ReducedProblem reduced = reduce(full, *box, opts);
  reduced.smoothness_bound = std::max(0.0, eig.eigenvalues().maxCoeff());
  return {name, std::move(full), std::move(reduced), std::nullopt, box->center()};
}

}  // namespace

LoadedProblem load_problem_json(const std::string& json_text, const ReduceOptions& opts) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ProblemError(std::string("problem document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ProblemError("problem document must be a JSON object");

  const std::string name = doc.value("name", std::string("problem"));
  const std::string kind = doc.value("kind", std::string());
  const json params = doc.value("params", json::object());
  const double lambda_h = doc.contains("lambda_h") ? doc["lambda_h"].get<double>() : 0.0;
  std::optional<Box> box;
  if (doc.contains("box")) box = to_box(doc["box"], "box");

  LoadedProblem loaded = [&] {
    if (kind == "builtin") return builtin(params.value("problem", name), params, box, opts);
    if (kind == "quadratic") return quadratic(name, params, box, opts);
    throw ProblemError("unknown problem kind '" + kind + "' (expected builtin or quadratic)");
  }();

  // Every loadable kind has p in closed form, so the penalty weight must be zero.
  if (lambda_h != 0.0) {
    FullProblem probe = loaded.full;
    probe.lambda_h = lambda_h;
    probe.validate();
  }
  if (doc.contains("region")) loaded.region = to_box(doc["region"], "region");
  if (doc.contains("theta0")) loaded.default_theta0 = to_vector(doc["theta0"], "theta0");
  if (doc.contains("name")) loaded.name = loaded.reduced.name = loaded.full.name = name;
  return loaded;
}

LoadedProblem load_problem(const std::string& source, const ReduceOptions& opts) {
  if (source == "academic" || source == "academic-upper" || source == "nesterov") {
    return builtin(source, json::object(), std::nullopt, opts);
  }
  std::ifstream in(source, std::ios::binary);
  if (!in) throw ProblemError("cannot open problem file '" + source + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_problem_json(ss.str(), opts);
}

}  // namespace htopt
