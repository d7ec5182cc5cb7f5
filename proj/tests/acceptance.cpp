// Acceptance run: one PASS/FAIL line per criterion, details on the
// following indented lines. Exits 1 when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddbc/pipeline.hpp"

#ifndef DDBC_CLI_PATH
#error "DDBC_CLI_PATH must name the ddbc executable"
#endif

namespace fs = std::filesystem;
using namespace ddbc;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Acceptance {
 public:
  void run(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget_seconds) {
      out.pass = false;
      out.detail += "\nruntime " + format_g17(secs) + " s exceeds the " + format_g17(budget_seconds) + " s budget";
    }
    failures_ += out.pass ? 0 : 1;
    std::cout << (out.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " (" << std::fixed
              << std::setprecision(1) << secs << " s)\n";
    std::cout.unsetf(std::ios::floatfield);
    std::istringstream lines(out.detail);
    std::string line;
    while (std::getline(lines, line)) std::cout << "    " << line << '\n';
    std::cout.flush();
  }
  [[nodiscard]] int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

std::string g(double v) { return format_g17(v); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Plain Gram-matrix SOS problem for criterion 3: one block over the monomials
// of degree <= deg(p)/2, one equality per monomial of degree <= deg(p).

SdpProblem gram_sos_problem(const Polynomial& p, std::vector<Exponent>& basis) {
  const int n = p.num_vars();
  const int half = (p.degree() + 1) / 2;
  basis = monomial_basis(n, half);
  const MonomialIndex rows(monomial_basis(n, 2 * half));
  SdpProblem prob({static_cast<int>(basis.size())}, static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i; j < basis.size(); ++j) {
      Exponent e(static_cast<std::size_t>(n));
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = basis[i][k] + basis[j][k];
      prob.add_constraint_entry(rows.find(e), 0, static_cast<int>(i), static_cast<int>(j), 1.0);
    }
  }
  for (const auto& [e, c] : p.terms()) prob.set_rhs(rows.find(e), c);
  return prob;
}

Polynomial gram_polynomial(const std::vector<Exponent>& basis, const Matrix& q) {
  Polynomial out(static_cast<int>(basis.front().size()));
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      out += Polynomial::monomial(basis[i]) *
             Polynomial::monomial(basis[j], q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const double p = probability_bound(0.58, 5.0, 1e-4, 10);
  return {std::abs(p - 0.8838) <= 1e-12, "probability_bound(0.58, 5, 1e-4, 10) = " + g(p)};
}

Outcome criterion2() {
  Polynomial b(3);
  b.add_term({2, 0, 0}, -1.425e-4);
  b.add_term({1, 0, 0}, -0.048);
  b.add_term({0, 0, 0}, 0.562);
  const Vector x = Eigen::Vector3d(1.5, 0.0, 0.0);
  const double v = b.evaluate(x);
  const bool initial_holds = v <= 0.58;
  return {std::abs(v - 0.48968) <= 1e-4 && initial_holds,
          "B(1.5, 0, 0) = " + g(v) + "; initial condition B <= 0.58 " + (initial_holds ? "holds" : "violated")};
}

Outcome criterion3() {
  std::ostringstream d;
  bool ok = true;
  {
    SdpProblem prob({2}, 1);
    prob.add_cost_entry(0, 0, 0, 1.0);
    prob.add_cost_entry(0, 1, 1, 1.0);
    prob.add_constraint_entry(0, 0, 0, 0, 1.0);
    prob.set_rhs(0, 1.0);
    const SdpSolution sol = solve(prob, {.tol = 1e-9});
    const bool pass = sol.status == SdpStatus::optimal && std::abs(sol.primal_objective - 1.0) <= 1e-7;
    ok = ok && pass;
    d << "min-trace toy: status " << to_string(sol.status) << ", optimum " << g(sol.primal_objective) << '\n';
  }
  {
    const Polynomial x = Polynomial::variable(1, 0);
    const Polynomial p = pow(x * x - Polynomial::constant(1, 1.0), 2);
    std::vector<Exponent> basis;
    const SdpSolution sol = solve(gram_sos_problem(p, basis));
    const double err = sol.status == SdpStatus::optimal ? (gram_polynomial(basis, sol.primal[0]) - p).max_abs_coeff() : INFINITY;
    ok = ok && err <= 1e-7;
    d << "(x^2-1)^2: status " << to_string(sol.status) << ", reconstruction error " << g(err) << '\n';
  }
  {
    const Polynomial x = Polynomial::variable(2, 0);
    const Polynomial y = Polynomial::variable(2, 1);
    const Polynomial p = pow(x, 4) * pow(y, 2) + pow(x, 2) * pow(y, 4) - 3.0 * pow(x, 2) * pow(y, 2) +
                         Polynomial::constant(2, 1.0);
    std::vector<Exponent> basis;
    const SdpSolution sol = solve(gram_sos_problem(p, basis));
    ok = ok && sol.status == SdpStatus::infeasible;
    d << "Motzkin as plain SOS: status " << to_string(sol.status);
  }
  return {ok, d.str()};
}

// Worst gap between sum_j b_j q_j(x) and w(x)^T B(X+) over 10 random
// coefficient vectors and 100 random states, relative to max(1, |w^T B|).
double lift_gap(const TransitionDataset& data, const KernelSpec& kx, double lambda, int degree, RandomStream& rng) {
  const EmpiricalCme cme = fit_cme(data, kx, lambda);
  const auto basis = monomial_basis(static_cast<int>(data.dim()), degree);
  const auto q = cme_monomial_lift(cme, basis);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Vector b(static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = 2.0 * rng.uniform() - 1.0;
    const Vector at_successors = from_coefficients(basis, b).evaluate_rows(data.successors);
    for (int t = 0; t < 100; ++t) {
      const Vector x = sample_uniform(data.box, rng);
      double lifted = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) lifted += b(static_cast<Eigen::Index>(j)) * q[j].evaluate(x);
      const double direct = cme.expected_value(at_successors, x);
      worst = std::max(worst, std::abs(lifted - direct) / std::max(1.0, std::abs(direct)));
    }
  }
  return worst;
}

Outcome criterion4() {
  RandomStream rng(2024);
  TransitionDataset one;
  one.states.resize(2, 1);
  one.successors.resize(2, 1);
  one.states << 0.3, -0.8;
  one.successors << 0.5, -0.1;
  one.box = StateBox(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  one.system_tag = "toy";
  const double gap1 = lift_gap(one, PolynomialKernel{1.0, 0.5, 2}, 1e-2, 2, rng);
  const TransitionDataset three =
      sample_transitions(LaneKeepingParams{}, StateBox({1.0, -7.0, -0.05}, {10.0, 7.0, 0.05}), 50, 7);
  const double gap3 = lift_gap(three, PolynomialKernel{0.005, 0.11, 2}, 1e-3, 2, rng);
  return {gap1 <= 1e-8 && gap3 <= 1e-8,
          "2-anchor 1-D worst relative gap " + g(gap1) + "\n50-anchor 3-D worst relative gap " + g(gap3)};
}

Outcome criterion5() {
  const LinearGaussianParams sys{0.8, 0.1};
  const StateBox box({-1.0}, {1.0});
  const KernelSpec kx = SquaredExponentialKernel{1.0, 0.1};
  const double lambda = 1e-5;
  std::vector<double> tests;
  for (int i = 0; i < 50; ++i) tests.push_back(-0.9 + 1.8 * i / 49.0);
  std::ostringstream d;
  std::vector<double> medians;
  for (long n : {100L, 500L, 2000L}) {
    std::vector<double> per_seed;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TransitionDataset data = sample_transitions(sys, box, n, seed);
      const EmpiricalCme cme = fit_cme(data, kx, lambda);
      const Vector f = data.successors.col(0);
      std::vector<double> err;
      for (double x : tests) err.push_back(std::abs(cme.expected_value(f, Vector::Constant(1, x)) - 0.8 * x));
      per_seed.push_back(median(err));
    }
    medians.push_back(median(per_seed));
    d << "N=" << n << ": median absolute error " << g(medians.back()) << '\n';
  }
  const bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  return {decreasing && medians[2] <= 0.05, d.str() + (decreasing ? "strictly decreasing" : "NOT decreasing")};
}

struct DeskRun {
  RunConfig cfg;
  TransitionDataset data;
  std::optional<EmpiricalCme> cme;
  std::optional<CertifyOutcome> outcome;
};

Outcome criterion6(DeskRun& desk) {
  desk.cfg = profile_defaults("desk");
  desk.data = obtain_dataset(desk.cfg);
  desk.cme.emplace(fit_embedding(desk.cfg, desk.data));
  desk.outcome.emplace(certify(desk.cfg, desk.data, *desk.cme));
  const auto& out = *desk.outcome;
  const auto& rep = out.validation;
  const double p = out.document.p_psi;
  std::ostringstream d;
  d << "barrier " << to_string(out.document.certificate.barrier) << '\n'
    << "eta " << g(out.document.certificate.eta) << ", p_psi " << g(p) << '\n'
    << "grid margins: initial " << g(rep.initial.margin) << ", unsafe " << g(rep.unsafe.margin) << ", martingale "
    << g(rep.martingale.margin) << '\n';
  bool envelope_ok = true;
  if (out.envelope) {
    const auto& e = out.envelope->report;
    envelope_ok = e.passed;
    d << "envelope " << (e.passed ? "passed" : "FAILED") << ": zeta1_hat " << g(e.errors.zeta1_hat) << ", zeta2_hat "
      << g(e.errors.zeta2_hat) << ", rkhs_norm " << g(e.rkhs_norm) << ", n_train " << e.n_train << '\n';
  }
  const MonteCarloResult mc = monte_carlo_safety(desk.cfg.make_system(), desk.cfg.initial, unsafe_sets(desk.cfg),
                                                 desk.cfg.horizon.value_or(10), 10000, desk.cfg.seed);
  d << "Monte-Carlo " << mc.n_safe << "/" << mc.n_runs << " safe, 99% lower limit " << g(mc.lower);
  const bool ok = rep.all_hold(1e-6) && envelope_ok && p >= 0.5 && mc.lower > p - 0.01;
  return {ok, d.str()};
}

Outcome criterion7(const DeskRun& desk) {
  const std::vector<double> eps{0.0, 0.5, 1.0, 2.0};
  const auto rows = sweep_epsilon(desk.cfg, eps, 1);
  std::ostringstream d;
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d << "epsilon " << g(rows[i].epsilon) << ": p_psi " << g(rows[i].p_per_seed[0]) << '\n';
    if (i > 0 && rows[i].p_per_seed[0] > rows[i - 1].p_per_seed[0]) monotone = false;
  }
  d << (monotone ? "nonincreasing" : "NOT nonincreasing");
  return {monotone, d.str()};
}

Outcome criterion8(const DeskRun& desk) {
  const KernelSpec kernel = desk.cfg.k_plus;
  GpModel single;
  single.kernel = kernel;
  single.centers = Matrix::Constant(1, 3, 0.5);
  single.alpha = Vector::Ones(1);
  const double sigma_f = std::sqrt(desk.cfg.k_plus.sigma_f_sq);
  const double norm_gap = std::abs(rkhs_norm(single) - sigma_f) / sigma_f;
  std::ostringstream d;
  d << "single-center norm relative gap " << g(norm_gap) << '\n';
  if (!desk.outcome) return {false, d.str() + "no desk-scale barrier (criterion 6 did not produce one)"};
  const Polynomial& b = desk.outcome->document.certificate.barrier;
  std::vector<double> z;
  for (long n : {125L, 1000L, 8000L}) {
    const GpModel m = fit_gp(sample_barrier(b, desk.cfg.domain, n, SamplingScheme::grid), kernel, default_gp_regularizer(kernel));
    z.push_back(sup_errors(b, m, *desk.cme, desk.cfg.domain, desk.cfg.grid_envelope).zeta1_hat);
    d << "n_train " << m.size() << ": zeta1_hat " << g(z.back()) << '\n';
  }
  const bool decreasing = z[0] > z[1] && z[1] > z[2];
  d << (decreasing ? "strictly decreasing" : "NOT decreasing");
  return {norm_gap <= 1e-10 && decreasing, d.str()};
}

Outcome criterion9(const DeskRun& desk) {
  const fs::path root = fs::temp_directory_path() / "ddbc_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ostringstream d;
  std::vector<std::string> texts;
  for (const char* name : {"run1", "run2"}) {
    const std::string cmd = std::string("'") + DDBC_CLI_PATH + "' --profile desk --out '" + (root / name).string() +
                            "' certify > '" + (root / (std::string(name) + ".log")).string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    d << name << ": exit " << code << '\n';
    if (code != 0) return {false, d.str() + slurp(root / (std::string(name) + ".log"))};
    texts.push_back(slurp(root / name / "certificate.txt"));
  }
  const bool same = !texts[0].empty() && texts[0] == texts[1];
  d << "certificate files " << (same ? "byte-identical" : "DIFFER") << " (" << texts[0].size() << " bytes)";
  if (desk.outcome) {
    const bool matches = certificate_text(desk.outcome->document) == texts[0];
    d << "\nin-process certificate " << (matches ? "matches" : "differs from") << " the CLI output";
  }
  fs::remove_all(root);
  return {same, d.str()};
}

}  // namespace

int main() {
  Acceptance acc;
  DeskRun desk;
  acc.run(1, "bound formula reproduction", 1, criterion1);
  acc.run(2, "reference-barrier spot check", 1, criterion2);
  acc.run(3, "SDP solver unit suite", 10, criterion3);
  acc.run(4, "CME lift equivalence", 10, criterion4);
  acc.run(5, "CME statistical consistency", 60, criterion5);
  acc.run(6, "end-to-end desk-scale certification", 600, [&] { return criterion6(desk); });
  acc.run(7, "epsilon-sweep monotonicity", 1200, [&] { return criterion7(desk); });
  acc.run(8, "GP envelope", 120, [&] { return criterion8(desk); });
  acc.run(9, "determinism of certify", 1200, [&] { return criterion9(desk); });
  std::cout << (acc.failures() == 0 ? "all criteria passed" : std::to_string(acc.failures()) + " criteria failed") << '\n';
  return acc.failures() == 0 ? 0 : 1;
}
