#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "htopt/diagnostics.hpp"
#include "htopt/errors.hpp"

namespace htopt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("trace csv: bad number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_trace_csv(const Trace& trace, std::ostream& out) {
  const Eigen::Index m = trace.records.empty() ? 0 : trace.records.front().theta.size();
  out << "k";
  for (const char* prefix : {"theta_", "nu_", "thetabar_"}) {
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << prefix << i;
  }
  out << ",loss,grad_norm,a_k,b_k,N_k,V,feasible\n";
  for (const auto& r : trace.records) {
    out << r.k;
    for (const Vector* v : {&r.theta, &r.nu, &r.theta_bar}) {
      for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double((*v)[i]);
    }
    out << ',' << format_double(r.loss) << ',' << format_double(r.grad_norm) << ',' << format_double(r.a_k) << ','
        << format_double(r.b_k) << ',' << format_double(r.N_k) << ',' << (r.V ? format_double(*r.V) : "") << ','
        << (r.feasible ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_trace_csv(trace, out);
  if (!out) throw IoError("failed writing '" + path + "'");
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("trace csv: missing header");
  const auto header = split(line);
  constexpr std::size_t kFixed = 8;  // k + 7 trailing columns
  if (header.size() < kFixed || (header.size() - kFixed) % 3 != 0 || header.front() != "k") {
    throw IoError("trace csv: malformed header");
  }
  const std::size_t m = (header.size() - kFixed) / 3;

  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw IoError("trace csv: row has " + std::to_string(f.size()) + " fields");
    TraceRecord r;
    r.k = std::stoul(f[0]);
    r.theta.resize(m);
    r.nu.resize(m);
    r.theta_bar.resize(m);
    std::size_t c = 1;
    for (Vector* v : {&r.theta, &r.nu, &r.theta_bar}) {
      for (std::size_t i = 0; i < m; ++i) (*v)[i] = parse_double(f[c++]);
    }
    r.loss = parse_double(f[c++]);
    r.grad_norm = parse_double(f[c++]);
    r.a_k = parse_double(f[c++]);
    r.b_k = parse_double(f[c++]);
    r.N_k = parse_double(f[c++]);
    if (!f[c].empty()) r.V = parse_double(f[c]);
    ++c;
    r.feasible = f[c] == "1";
    trace.records.push_back(std::move(r));
  }
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_trace_csv(in);
}

}  // namespace htopt
