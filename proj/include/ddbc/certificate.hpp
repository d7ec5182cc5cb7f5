#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "ddbc/errors.hpp"
#include "ddbc/gp_envelope.hpp"
#include "ddbc/safety.hpp"
#include "ddbc/sos.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

inline constexpr const char* kToolVersion = "ddbc 1.0.0";

/// Everything written to a certificate file.
struct CertificateDocument {
  BarrierCertificate certificate;
  std::optional<EnvelopeReport> envelope;  // absent when the envelope step was skipped
  double p_psi = 0;
  std::optional<int> horizon;
  std::string tool_version = kToolVersion;
};

namespace detail {

inline std::string horizon_text(const std::optional<int>& h) { return h ? std::to_string(*h) : "infinite"; }

inline std::optional<int> parse_horizon(const std::string& s) {
  if (s == "infinite") return std::nullopt;
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("horizon: expected a positive integer or 'infinite', got '" + s + "'");
  }
}

using Sections = std::map<std::string, std::map<std::string, std::string>>;

inline Sections read_sections(std::istream& in, const std::string& what) {
  Sections out;
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(what + ":" + std::to_string(lineno) + ": malformed section header");
      current = line.substr(1, line.size() - 2);
      out[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(what + ":" + std::to_string(lineno) + ": expected key=value");
    if (current.empty()) throw ParseError(what + ":" + std::to_string(lineno) + ": key outside any section");
    out[current][line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

class SectionReader {
 public:
  SectionReader(const Sections& s, std::string what) : sections_(s), what_(std::move(what)) {}

  [[nodiscard]] const std::map<std::string, std::string>& section(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end()) throw ParseError(what_ + ": missing section [" + name + "]");
    return it->second;
  }
  [[nodiscard]] std::string text(const std::string& sec, const std::string& key) const {
    const auto& m = section(sec);
    const auto it = m.find(key);
    if (it == m.end()) throw ParseError(what_ + ": [" + sec + "] missing key '" + key + "'");
    return it->second;
  }
  [[nodiscard]] double number(const std::string& sec, const std::string& key) const {
    const std::string s = text(sec, key);
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError(what_ + ": [" + sec + "] " + key + ": expected a number, got '" + s + "'");
    }
  }
  [[nodiscard]] long integer(const std::string& sec, const std::string& key) const {
    const double v = number(sec, key);
    if (v != std::floor(v)) throw ParseError(what_ + ": [" + sec + "] " + key + ": expected an integer");
    return static_cast<long>(v);
  }

 private:
  const Sections& sections_;
  std::string what_;
};

}  // namespace detail

/// Deterministic text form: fixed section and key order, %.17g numbers,
/// no timestamps.
inline std::string certificate_text(const CertificateDocument& doc) {
  const auto& c = doc.certificate;
  const auto g = format_g17;
  std::ostringstream out;
  out << "# barrier certificate\n";
  out << "[barrier]\n"
      << "num_vars=" << c.barrier.num_vars() << '\n'
      << "polynomial=" << to_string(c.barrier) << '\n';
  out << "[constants]\n"
      << "eta=" << g(c.eta) << '\n'
      << "gamma=" << g(c.gamma) << '\n'
      << "c=" << g(c.c) << '\n'
      << "epsilon=" << g(c.ambiguity.epsilon) << '\n'
      << "b_bar=" << g(c.ambiguity.b_bar) << '\n'
      << "zeta1=" << g(c.zeta1) << '\n'
      << "zeta2=" << g(c.zeta2) << '\n'
      << "lambda=" << g(c.context.lambda) << '\n'
      << "rho=" << g(c.ambiguity.rho) << '\n'
      << "xi=" << g(c.xi) << '\n'
      << "sup_sqrt_kx=" << g(c.sup_sqrt_kx) << '\n';
  out << "[envelope]\n";
  if (doc.envelope) {
    const auto& e = *doc.envelope;
    out << "status=" << (e.passed ? "passed" : "failed") << '\n'
        << "zeta1_hat=" << g(e.errors.zeta1_hat) << '\n'
        << "zeta2_hat=" << g(e.errors.zeta2_hat) << '\n'
        << "rkhs_norm=" << g(e.rkhs_norm) << '\n'
        << "grid_spacing=" << vector_to_list(e.errors.grid_spacing) << '\n'
        << "grid_points=" << e.errors.grid_points << '\n'
        << "n_train=" << e.n_train << '\n'
        << "gp_regularizer=" << g(e.gp_regularizer) << '\n'
        << "sup_method=grid maximum x " << g(kSupInflation) << '\n';
  } else {
    out << "status=skipped\n";
  }
  out << "[bound]\n"
      << "p_psi=" << g(doc.p_psi) << '\n'
      << "horizon=" << detail::horizon_text(doc.horizon) << '\n'
      << "confidence=" << g(1.0 - c.ambiguity.rho) << '\n';
  const auto& kx = std::get<PolynomialKernel>(c.context.kx);
  const auto& kp = std::get<SquaredExponentialKernel>(c.context.k_plus);
  out << "[provenance]\n"
      << "dataset_fingerprint=" << c.context.dataset_fingerprint << '\n'
      << "seed=" << c.context.seed << '\n'
      << "kx_a=" << g(kx.a) << '\n'
      << "kx_b=" << g(kx.b) << '\n'
      << "kx_d=" << kx.d << '\n'
      << "kplus_sigma_f_sq=" << g(kp.sigma_f_sq) << '\n'
      << "kplus_sigma_l_sq=" << g(kp.sigma_l_sq) << '\n'
      << "solver_status=" << c.solver.status << '\n'
      << "solver_iterations=" << c.solver.iterations << '\n'
      << "solver_primal_residual=" << g(c.solver.primal_residual) << '\n'
      << "solver_dual_residual=" << g(c.solver.dual_residual) << '\n'
      << "solver_duality_gap=" << g(c.solver.duality_gap) << '\n'
      << "identity_residual=" << g(c.solver.identity_residual) << '\n'
      << "tool_version=" << doc.tool_version << '\n';
  return out.str();
}

inline CertificateDocument parse_certificate(std::istream& in, const std::string& what = "certificate") {
  const detail::Sections sections = detail::read_sections(in, what);
  const detail::SectionReader r(sections, what);
  for (const char* name : {"barrier", "constants", "envelope", "bound", "provenance"}) (void)r.section(name);

  CertificateDocument doc;
  auto& c = doc.certificate;
  c.barrier = parse_polynomial(r.text("barrier", "polynomial"), static_cast<int>(r.integer("barrier", "num_vars")));
  c.eta = r.number("constants", "eta");
  c.gamma = r.number("constants", "gamma");
  c.c = r.number("constants", "c");
  c.ambiguity = {r.number("constants", "epsilon"), r.number("constants", "rho"), r.number("constants", "b_bar")};
  c.zeta1 = r.number("constants", "zeta1");
  c.zeta2 = r.number("constants", "zeta2");
  c.context.lambda = r.number("constants", "lambda");
  c.xi = r.number("constants", "xi");
  c.sup_sqrt_kx = r.number("constants", "sup_sqrt_kx");

  const std::string status = r.text("envelope", "status");
  if (status != "skipped") {
    if (status != "passed" && status != "failed") throw ParseError(what + ": [envelope] status must be passed, failed or skipped");
    EnvelopeReport e;
    e.passed = status == "passed";
    e.errors.zeta1_hat = r.number("envelope", "zeta1_hat");
    e.errors.zeta2_hat = r.number("envelope", "zeta2_hat");
    e.rkhs_norm = r.number("envelope", "rkhs_norm");
    e.errors.grid_spacing = parse_list(r.text("envelope", "grid_spacing"));
    e.errors.grid_points = r.integer("envelope", "grid_points");
    e.n_train = r.integer("envelope", "n_train");
    e.gp_regularizer = r.number("envelope", "gp_regularizer");
    e.zeta1_margin = c.zeta1 - e.errors.zeta1_hat;
    e.zeta2_margin = c.zeta2 - e.errors.zeta2_hat;
    e.norm_margin = c.ambiguity.b_bar - e.rkhs_norm;
    doc.envelope = e;
  }
  doc.p_psi = r.number("bound", "p_psi");
  doc.horizon = detail::parse_horizon(r.text("bound", "horizon"));

  c.context.dataset_fingerprint = r.text("provenance", "dataset_fingerprint");
  c.context.seed = static_cast<std::uint64_t>(std::stoull(r.text("provenance", "seed")));
  c.context.kx = PolynomialKernel{r.number("provenance", "kx_a"), r.number("provenance", "kx_b"),
                                  static_cast<int>(r.integer("provenance", "kx_d"))};
  c.context.k_plus = SquaredExponentialKernel{r.number("provenance", "kplus_sigma_f_sq"), r.number("provenance", "kplus_sigma_l_sq")};
  c.solver.status = r.text("provenance", "solver_status");
  c.solver.iterations = static_cast<int>(r.integer("provenance", "solver_iterations"));
  c.solver.primal_residual = r.number("provenance", "solver_primal_residual");
  c.solver.dual_residual = r.number("provenance", "solver_dual_residual");
  c.solver.duality_gap = r.number("provenance", "solver_duality_gap");
  c.solver.identity_residual = r.number("provenance", "identity_residual");
  doc.tool_version = r.text("provenance", "tool_version");
  return doc;
}

inline CertificateDocument read_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open certificate " + path);
  return parse_certificate(in, path);
}

inline void write_certificate(const CertificateDocument& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write certificate " + path);
  out << certificate_text(doc);
}

}  // namespace ddbc
