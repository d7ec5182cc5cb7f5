#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/cme.hpp"
#include "ddbc/polynomial.hpp"
#include "ddbc/rng.hpp"
#include "ddbc/sdp.hpp"

namespace ddbc {

enum class EtaMode { minimize, fixed };

struct SosSynthesisConfig {
  int barrier_degree = 2;
  int multiplier_degree = 2;
  double gamma = 5.0;
  double c = 1e-4;
  double zeta1 = 0.01;
  double zeta2 = 0.01;
  AmbiguityConfig ambiguity;
  EtaMode eta_mode = EtaMode::minimize;
  double fixed_eta = 0.0;  // used when eta_mode == fixed

  void validate() const {
    if (!(gamma > 0)) throw std::invalid_argument("sos: gamma must be > 0");
    if (barrier_degree < 2 || barrier_degree % 2 != 0) throw std::invalid_argument("sos: barrier_degree must be even and >= 2");
    if (multiplier_degree < 0 || multiplier_degree % 2 != 0) throw std::invalid_argument("sos: multiplier_degree must be even and >= 0");
    if (!(c >= 0)) throw std::invalid_argument("sos: c must be >= 0");
    if (!(zeta1 > 0) || !(zeta2 > 0)) throw std::invalid_argument("sos: zeta1 and zeta2 must be > 0");
    ambiguity.validate();
  }
};

/// X, X0 and the components of the unsafe union.
struct BarrierSets {
  SemiAlgebraicSet domain;
  SemiAlgebraicSet initial;
  std::vector<SemiAlgebraicSet> unsafe;
};

/// target(x) = constant(x) + sum_v v * linear[v](x), v ranging over the free variables.
struct AffineTarget {
  Polynomial constant;
  std::vector<Polynomial> linear;
};

/// target - sum_k sigma_k g_k = sigma_0 with every sigma SOS.
struct PutinarConstraint {
  std::string name;
  AffineTarget target;
  std::vector<Polynomial> inequalities;  // g_k
  int sigma0_half_degree = 0;            // sigma_0 = z^T Q z, z of degree <= this
  int multiplier_half_degree = 0;        // sigma_k likewise
};

/// Sum-of-squares program. Polynomials live in normalized coordinates u with
/// x = offset + scale .* u (the domain box maps to [-1, 1]^n); free
/// variables are the barrier coefficients over `barrier_basis`, followed by
/// eta when it is minimized. A minimized eta is also capped by gamma, so a
/// program without a certificate satisfying gamma >= eta is infeasible.
struct SosProgram {
  int num_vars = 0;
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;
  std::vector<Exponent> barrier_basis;
  int num_free = 0;
  int eta_index = -1;
  std::vector<PutinarConstraint> constraints;
  double xi = 0.0;
  double sup_sqrt_kx = 0.0;
  SosSynthesisConfig config;
};

/// Maps between the coordinates of an SosProgram.
struct CoordinateMap {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  static CoordinateMap for_set(const SemiAlgebraicSet& set) {
    if (set.box_hull) return {set.box_hull->center(), set.box_hull->half_width()};
    return {Eigen::VectorXd::Zero(set.ambient_dim), Eigen::VectorXd::Ones(set.ambient_dim)};
  }
  [[nodiscard]] Polynomial to_normalized(const Polynomial& p) const { return substitute_affine(p, offset, scale); }
  [[nodiscard]] Polynomial to_state(const Polynomial& p) const {
    return substitute_affine(p, (-offset.array() / scale.array()).matrix(), scale.cwiseInverse());
  }
  [[nodiscard]] Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& pts) const {
    return ((pts.rowwise() - offset.transpose()).array().rowwise() / scale.transpose().array()).matrix();
  }
};

namespace detail {

inline int max_inequality_degree(const std::vector<Polynomial>& gs) {
  int d = 0;
  for (const auto& g : gs) d = std::max(d, g.degree());
  return d;
}

inline PutinarConstraint make_constraint(std::string name, AffineTarget target, std::vector<Polynomial> gs,
                                         int multiplier_degree) {
  PutinarConstraint pc;
  pc.name = std::move(name);
  pc.multiplier_half_degree = multiplier_degree / 2;
  const int block_degree = gs.empty() ? 0 : multiplier_degree + max_inequality_degree(gs);
  int target_degree = target.constant.degree();
  for (const auto& p : target.linear) target_degree = std::max(target_degree, p.degree());
  if (gs.empty()) {
    pc.sigma0_half_degree = (target_degree + 1) / 2;
  } else {
    if (target_degree > block_degree) {
      throw std::invalid_argument("sos: constraint '" + pc.name + "' has degree " + std::to_string(target_degree) +
                                  " above the Putinar block degree " + std::to_string(block_degree) +
                                  "; multiplier_degree is too small");
    }
    pc.sigma0_half_degree = (block_degree + 1) / 2;
  }
  pc.target = std::move(target);
  pc.inequalities = std::move(gs);
  return pc;
}

}  // namespace detail

/// Compiles the barrier conditions into Putinar SOS constraints:
///   nonnegative:  B - zeta1                          >= 0 on X
///   initial:      eta - zeta1 - B                    >= 0 on X0
///   unsafe[k]:    B - zeta1 - gamma                  >= 0 on Xu_k
///   martingale:   B - sum_j b_j q_j - xi             >= 0 on X
/// with xi = epsilon sup_X sqrt(k_x(x,x)) b_bar - c + zeta1 + zeta2 and
/// q_j the lift of basis monomial j through the empirical embedding
/// (`lifted`, in normalized coordinates, one entry per barrier basis element).
inline SosProgram build_sos_program(const std::vector<Polynomial>& lifted, const BarrierSets& sets,
                                    const SosSynthesisConfig& cfg, double sup_sqrt_kx) {
  cfg.validate();
  const int n = sets.domain.ambient_dim;
  for (const auto* s : {&sets.initial}) require_same_dim(s->ambient_dim, n, "build_sos_program");
  for (const auto& s : sets.unsafe) require_same_dim(s.ambient_dim, n, "build_sos_program");

  const CoordinateMap map = CoordinateMap::for_set(sets.domain);
  SosProgram prog;
  prog.num_vars = n;
  prog.offset = map.offset;
  prog.scale = map.scale;
  prog.config = cfg;
  prog.barrier_basis = monomial_basis(n, cfg.barrier_degree);
  require_same_dim(static_cast<long>(lifted.size()), static_cast<long>(prog.barrier_basis.size()), "build_sos_program lift");
  const int nb = static_cast<int>(prog.barrier_basis.size());
  prog.eta_index = cfg.eta_mode == EtaMode::minimize ? nb : -1;
  prog.num_free = nb + (cfg.eta_mode == EtaMode::minimize ? 1 : 0);
  prog.sup_sqrt_kx = sup_sqrt_kx;
  prog.xi = cfg.ambiguity.epsilon * sup_sqrt_kx * cfg.ambiguity.b_bar - cfg.c + cfg.zeta1 + cfg.zeta2;

  auto normalized = [&](const SemiAlgebraicSet& s) {
    std::vector<Polynomial> out;
    for (const auto& g : s.inequalities) out.push_back(map.to_normalized(g));
    return out;
  };
  auto barrier_target = [&](double sign, double constant) {
    AffineTarget t{Polynomial::constant(n, constant), std::vector<Polynomial>(static_cast<std::size_t>(prog.num_free), Polynomial(n))};
    for (int j = 0; j < nb; ++j) t.linear[static_cast<std::size_t>(j)] = Polynomial::monomial(prog.barrier_basis[static_cast<std::size_t>(j)], sign);
    return t;
  };

  const std::vector<Polynomial> g_domain = normalized(sets.domain);
  prog.constraints.push_back(
      detail::make_constraint("nonnegative", barrier_target(1.0, -cfg.zeta1), g_domain, cfg.multiplier_degree));

  AffineTarget init = barrier_target(-1.0, cfg.eta_mode == EtaMode::minimize ? -cfg.zeta1 : cfg.fixed_eta - cfg.zeta1);
  if (prog.eta_index >= 0) init.linear[static_cast<std::size_t>(prog.eta_index)] = Polynomial::constant(n, 1.0);
  prog.constraints.push_back(detail::make_constraint("initial", std::move(init), normalized(sets.initial), cfg.multiplier_degree));

  for (std::size_t k = 0; k < sets.unsafe.size(); ++k) {
    prog.constraints.push_back(detail::make_constraint("unsafe[" + std::to_string(k) + "]",
                                                       barrier_target(1.0, -cfg.zeta1 - cfg.gamma),
                                                       normalized(sets.unsafe[k]), cfg.multiplier_degree));
  }

  AffineTarget mart = barrier_target(1.0, -prog.xi);
  for (int j = 0; j < nb; ++j) mart.linear[static_cast<std::size_t>(j)] -= lifted[static_cast<std::size_t>(j)];
  prog.constraints.push_back(detail::make_constraint("martingale", std::move(mart), g_domain, cfg.multiplier_degree));
  return prog;
}

/// Same, lifting the barrier basis through `cme` (polynomial conditioning kernel).
inline SosProgram build_sos_program(const EmpiricalCme& cme, const BarrierSets& sets, const SosSynthesisConfig& cfg) {
  if (!is_polynomial(cme.kernel())) throw std::invalid_argument("build_sos_program: conditioning kernel must be polynomial");
  require_same_dim(cme.dim(), sets.domain.ambient_dim, "build_sos_program");
  const CoordinateMap map = CoordinateMap::for_set(sets.domain);
  const std::vector<Exponent> basis = monomial_basis(cme.dim(), cfg.barrier_degree);
  // Basis monomials of u, evaluated at the normalized successors.
  const std::vector<Polynomial> lifted_x = cme_monomial_lift(cme, basis, map.normalize_rows(cme.successors()));
  std::vector<Polynomial> lifted;
  for (const auto& q : lifted_x) lifted.push_back(map.to_normalized(q));
  const double sup = sets.domain.box_hull && sets.domain.exact_box ? sup_sqrt_kx(cme.kernel(), *sets.domain.box_hull)
                                                                   : sup_sqrt_kx(cme.kernel(), sets.domain);
  return build_sos_program(lifted, sets, cfg, sup);
}

// ---------------------------------------------------------------------------
// Lowering to SDP

/// Block and row placement of each Putinar constraint inside the SDP.
struct SosLayout {
  struct Entry {
    int sigma0_block = 0;
    std::vector<int> multiplier_blocks;
    std::vector<Exponent> sigma0_basis;
    std::vector<Exponent> multiplier_basis;
    std::vector<Exponent> rows;  // monomials matched, one SDP constraint each
    int first_row = 0;
  };
  std::vector<Entry> constraints;
  std::vector<int> block_sizes;
  int num_rows = 0;
  int eta_cap_block = -1;  // 1x1 slack of eta + s = gamma
  int eta_cap_row = -1;
};

inline SosLayout sos_layout(const SosProgram& prog) {
  SosLayout layout;
  for (const auto& pc : prog.constraints) {
    SosLayout::Entry e;
    e.sigma0_basis = monomial_basis(prog.num_vars, pc.sigma0_half_degree);
    e.multiplier_basis = monomial_basis(prog.num_vars, pc.multiplier_half_degree);
    e.rows = monomial_basis(prog.num_vars, 2 * pc.sigma0_half_degree);
    e.sigma0_block = static_cast<int>(layout.block_sizes.size());
    layout.block_sizes.push_back(static_cast<int>(e.sigma0_basis.size()));
    for (std::size_t k = 0; k < pc.inequalities.size(); ++k) {
      e.multiplier_blocks.push_back(static_cast<int>(layout.block_sizes.size()));
      layout.block_sizes.push_back(static_cast<int>(e.multiplier_basis.size()));
    }
    e.first_row = layout.num_rows;
    layout.num_rows += static_cast<int>(e.rows.size());
    layout.constraints.push_back(std::move(e));
  }
  if (prog.eta_index >= 0) {
    layout.eta_cap_block = static_cast<int>(layout.block_sizes.size());
    layout.block_sizes.push_back(1);
    layout.eta_cap_row = layout.num_rows++;
  }
  return layout;
}

inline Exponent add_exponents(const Exponent& a, const Exponent& b) {
  Exponent out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
  return out;
}

/// Gram-matrix lowering: each SOS polynomial of degree 2t becomes z^T Q z
/// with z the graded-lex basis of degree <= t and Q PSD; matching
/// coefficients monomial by monomial yields one linear equality per monomial.
inline SdpProblem sos_to_sdp(const SosProgram& prog) {
  const SosLayout layout = sos_layout(prog);
  SdpProblem sdp(layout.block_sizes, layout.num_rows, prog.num_free);
  for (std::size_t c = 0; c < prog.constraints.size(); ++c) {
    const auto& pc = prog.constraints[c];
    const auto& le = layout.constraints[c];
    const MonomialIndex rows(le.rows);
    auto row_of = [&](const Exponent& e) {
      const int r = rows.find(e);
      if (r < 0) throw std::logic_error("sos_to_sdp: monomial outside the matched basis");
      return le.first_row + r;
    };
    for (std::size_t i = 0; i < le.sigma0_basis.size(); ++i)
      for (std::size_t j = i; j < le.sigma0_basis.size(); ++j)
        sdp.add_constraint_entry(row_of(add_exponents(le.sigma0_basis[i], le.sigma0_basis[j])), le.sigma0_block,
                                 static_cast<int>(i), static_cast<int>(j), 1.0);
    for (std::size_t k = 0; k < pc.inequalities.size(); ++k) {
      for (std::size_t i = 0; i < le.multiplier_basis.size(); ++i)
        for (std::size_t j = i; j < le.multiplier_basis.size(); ++j) {
          const Exponent zz = add_exponents(le.multiplier_basis[i], le.multiplier_basis[j]);
          for (const auto& [ge, gc] : pc.inequalities[k].terms())
            sdp.add_constraint_entry(row_of(add_exponents(zz, ge)), le.multiplier_blocks[k], static_cast<int>(i),
                                     static_cast<int>(j), gc);
        }
    }
    for (std::size_t v = 0; v < pc.target.linear.size(); ++v)
      for (const auto& [e, coef] : pc.target.linear[v].terms()) {
        const int r = row_of(e);
        sdp.set_free_coeff(r, static_cast<int>(v), sdp.free_coeffs()(r, static_cast<int>(v)) - coef);
      }
    for (const auto& [e, coef] : pc.target.constant.terms()) sdp.set_rhs(row_of(e), coef);
  }
  if (prog.eta_index >= 0) {
    sdp.add_constraint_entry(layout.eta_cap_row, layout.eta_cap_block, 0, 0, 1.0);
    sdp.set_free_coeff(layout.eta_cap_row, prog.eta_index, 1.0);
    sdp.set_rhs(layout.eta_cap_row, prog.config.gamma);
    sdp.set_free_cost(prog.eta_index, 1.0);
  }
  sdp.canonicalize();
  return sdp;
}

// ---------------------------------------------------------------------------
// Certificates

inline Polynomial gram_polynomial(const std::vector<Exponent>& basis, const Eigen::MatrixXd& q) {
  const int n = basis.empty() ? 0 : static_cast<int>(basis.front().size());
  Polynomial out(n);
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j)
      out.add_term(add_exponents(basis[i], basis[j]), q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return out;
}

inline Polynomial evaluate_target(const AffineTarget& t, const Eigen::VectorXd& free_values) {
  Polynomial out = t.constant;
  for (std::size_t v = 0; v < t.linear.size(); ++v) out += free_values(static_cast<Eigen::Index>(v)) * t.linear[v];
  return out;
}

/// Per constraint: target(free values) - sigma_0 - sum_k sigma_k g_k, rebuilt
/// from the solution's Gram matrices. Zero up to solver tolerance.
inline std::vector<Polynomial> constraint_residuals(const SosProgram& prog, const SdpSolution& sol) {
  const SosLayout layout = sos_layout(prog);
  std::vector<Polynomial> out;
  for (std::size_t c = 0; c < prog.constraints.size(); ++c) {
    const auto& pc = prog.constraints[c];
    const auto& le = layout.constraints[c];
    Polynomial r = evaluate_target(pc.target, sol.free_values);
    r -= gram_polynomial(le.sigma0_basis, sol.primal.at(static_cast<std::size_t>(le.sigma0_block)));
    for (std::size_t k = 0; k < pc.inequalities.size(); ++k)
      r -= gram_polynomial(le.multiplier_basis, sol.primal.at(static_cast<std::size_t>(le.multiplier_blocks[k]))) *
           pc.inequalities[k];
    out.push_back(std::move(r));
  }
  return out;
}

/// Synthesis failed: infeasible program, solver breakdown, or an identity
/// that does not re-verify.
class SynthesisError : public std::runtime_error {
 public:
  SynthesisError(const std::string& what, SdpStatus status) : std::runtime_error(what), status_(status) {}
  [[nodiscard]] SdpStatus status() const { return status_; }

 private:
  SdpStatus status_;
};

struct SolverReport {
  std::string status;
  int iterations = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double duality_gap = 0;
  double identity_residual = 0;  // max |residual| over random points, see extract_certificate
};

/// Everything a certificate records besides the barrier and its levels.
struct CertificateContext {
  double lambda = 0.0;
  KernelSpec kx = PolynomialKernel{};
  KernelSpec k_plus = SquaredExponentialKernel{};
  std::string dataset_fingerprint;
  std::uint64_t seed = 0;
};

struct BarrierCertificate {
  Polynomial barrier;  // state coordinates
  double eta = 0;
  double gamma = 0;
  double c = 0;
  AmbiguityConfig ambiguity;
  double zeta1 = 0;
  double zeta2 = 0;
  double xi = 0;
  double sup_sqrt_kx = 0;
  CertificateContext context;
  SolverReport solver;
};

/// Reads b and eta from the solution, re-verifies every constraint identity at
/// `n_check` random points of the normalized domain, and maps the barrier back
/// to state coordinates.
inline BarrierCertificate extract_certificate(const SosProgram& prog, const SdpSolution& sol,
                                              const CertificateContext& context, std::uint64_t check_seed = 0,
                                              int n_check = 10000) {
  if (sol.status != SdpStatus::optimal) {
    const std::string msg = sol.status == SdpStatus::infeasible
                                ? "SOS program infeasible: no barrier certificate exists for these constants and degrees"
                                : std::string("SDP solver did not converge (") + to_string(sol.status) + ")";
    throw SynthesisError(msg, sol.status);
  }
  const auto residuals = constraint_residuals(prog, sol);
  RandomStream rng = RandomStream(check_seed).split("identity-check");
  double worst = 0.0;
  double scale = 1.0;
  for (const auto& pc : prog.constraints) scale = std::max(scale, evaluate_target(pc.target, sol.free_values).max_abs_coeff());
  for (int p = 0; p < n_check; ++p) {
    Eigen::VectorXd u(prog.num_vars);
    for (int k = 0; k < prog.num_vars; ++k) u(k) = 2.0 * rng.uniform() - 1.0;
    for (const auto& r : residuals) worst = std::max(worst, std::abs(r.evaluate(u)));
  }
  if (worst > 1e-6 * scale) {
    throw SynthesisError("certificate identities fail to re-verify (max residual " + format_double(worst) +
                             "); tighten the solver tolerance or increase the slacks zeta1/zeta2",
                         sol.status);
  }

  const int nb = static_cast<int>(prog.barrier_basis.size());
  const Polynomial b_normalized = from_coefficients(prog.barrier_basis, sol.free_values.head(nb));
  const CoordinateMap map{prog.offset, prog.scale};

  BarrierCertificate cert;
  cert.barrier = map.to_state(b_normalized);
  cert.eta = prog.eta_index >= 0 ? sol.free_values(prog.eta_index) : prog.config.fixed_eta;
  cert.gamma = prog.config.gamma;
  cert.c = prog.config.c;
  cert.ambiguity = prog.config.ambiguity;
  cert.zeta1 = prog.config.zeta1;
  cert.zeta2 = prog.config.zeta2;
  cert.xi = prog.xi;
  cert.sup_sqrt_kx = prog.sup_sqrt_kx;
  cert.context = context;
  cert.solver = {to_string(sol.status), sol.iterations, sol.primal_residual, sol.dual_residual, sol.duality_gap, worst};
  if (!(cert.gamma > cert.eta && cert.eta >= 0)) {
    throw SynthesisError("synthesized levels violate gamma > eta >= 0 (eta = " + format_double(cert.eta) + ")", sol.status);
  }
  return cert;
}

}  // namespace ddbc
