#pragma once

#include <algorithm>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddbc/certificate.hpp"
#include "ddbc/config.hpp"
#include "ddbc/gp_envelope.hpp"
#include "ddbc/safety.hpp"
#include "ddbc/sdp.hpp"
#include "ddbc/sos.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

/// Pipeline stages. The CLI exit code for a failure is the stage's value.
enum class Stage : int {
  config = 2,
  data = 3,
  embedding = 4,
  synthesis = 5,
  extraction = 6,
  envelope = 7,
  validation = 8,
  parse = 9,
};

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::config: return "config";
    case Stage::data: return "data";
    case Stage::embedding: return "embedding";
    case Stage::synthesis: return "synthesis";
    case Stage::extraction: return "extraction";
    case Stage::envelope: return "envelope";
    case Stage::validation: return "validation";
    case Stage::parse: return "parse";
  }
  return "unknown";
}

class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, const std::string& what)
      : std::runtime_error(std::string("[") + to_string(stage) + "] " + what), stage_(stage) {}
  [[nodiscard]] Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

/// Runs `f`, re-tagging any exception with `stage`.
template <class F>
auto run_stage(Stage stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

inline BarrierSets barrier_sets(const RunConfig& cfg) {
  BarrierSets sets{box_to_semialgebraic(cfg.domain), box_to_semialgebraic(cfg.initial), {}};
  for (const auto& u : cfg.unsafe) sets.unsafe.push_back(box_to_semialgebraic(u));
  return sets;
}

inline std::vector<SemiAlgebraicSet> unsafe_sets(const RunConfig& cfg) { return barrier_sets(cfg).unsafe; }

/// Loads the configured dataset, or samples N transitions from the system.
inline TransitionDataset obtain_dataset(const RunConfig& cfg) {
  return run_stage(Stage::data, [&] {
    if (!cfg.data_csv.empty()) {
      TransitionDataset data = read_dataset(cfg.data_csv, cfg.data_meta);
      require_same_dim(data.dim(), cfg.domain.dim(), "dataset");
      return data;
    }
    return sample_transitions(cfg.make_system(), cfg.domain, cfg.n_samples, cfg.seed);
  });
}

inline SosSynthesisConfig synthesis_config(const RunConfig& cfg) {
  SosSynthesisConfig s;
  s.barrier_degree = cfg.barrier_degree;
  s.multiplier_degree = cfg.multiplier_degree;
  s.gamma = cfg.gamma;
  s.c = cfg.c;
  s.zeta1 = cfg.zeta1;
  s.zeta2 = cfg.zeta2;
  s.ambiguity = {cfg.epsilon, cfg.rho, cfg.b_bar};
  s.eta_mode = cfg.eta_mode == "fixed" ? EtaMode::fixed : EtaMode::minimize;
  s.fixed_eta = cfg.eta;
  return s;
}

inline EmpiricalCme fit_embedding(const RunConfig& cfg, const TransitionDataset& data) {
  return run_stage(Stage::embedding, [&] { return fit_cme(data, cfg.kx, cfg.lambda); });
}

struct CertifyOutcome {
  CertificateDocument document;
  ValidationReport validation;
  std::optional<EnvelopeResult> envelope;
};

/// fit_cme -> build_sos_program -> solve -> extract_certificate -> GP
/// envelope -> validate_certificate -> probability_bound. Throws StageError
/// naming the first stage that fails.
inline CertifyOutcome certify(const RunConfig& cfg, const TransitionDataset& data, const EmpiricalCme& cme) {
  const BarrierSets sets = barrier_sets(cfg);
  const SosSynthesisConfig scfg = synthesis_config(cfg);
  const SosProgram prog = run_stage(Stage::synthesis, [&] { return build_sos_program(cme, sets, scfg); });
  SdpOptions opts;
  opts.tol = cfg.solver_tol;
  opts.max_iters = cfg.solver_max_iters;
  const SdpSolution sol = run_stage(Stage::synthesis, [&] { return solve(sos_to_sdp(prog), opts); });
  if (sol.status == SdpStatus::infeasible) {
    throw StageError(Stage::synthesis, "SOS program infeasible: no barrier certificate exists for these constants and degrees");
  }
  if (sol.status != SdpStatus::optimal) {
    throw StageError(Stage::synthesis, std::string("SDP solver stopped without a certificate (") + to_string(sol.status) +
                                           "); adjust solver.tol or solver.max_iters");
  }
  const CertificateContext context{cfg.lambda, cfg.kx, cfg.k_plus, dataset_fingerprint(data), cfg.seed};
  CertifyOutcome out;
  out.document.certificate = run_stage(Stage::extraction, [&] { return extract_certificate(prog, sol, context, cfg.seed); });
  const auto& cert = out.document.certificate;

  if (cfg.require_envelope) {
    EnvelopeOptions eo;
    eo.initial_train = cfg.gp_n_train;
    eo.max_rounds = cfg.gp_max_rounds;
    eo.max_train = cfg.gp_max_train;
    eo.gp_regularizer = cfg.gp_regularizer;
    eo.validation_per_axis = cfg.grid_envelope;
    out.envelope = run_stage(Stage::envelope, [&] {
      return fit_envelope(cert.barrier, cme, cfg.domain, cfg.k_plus, {cfg.zeta1, cfg.zeta2, cfg.b_bar}, eo);
    });
    out.document.envelope = out.envelope->report;
  }
  out.validation = run_stage(Stage::validation, [&] {
    return validate_certificate(cert, sets.domain, sets.initial, sets.unsafe, cme, cfg.grid_validation);
  });
  out.document.horizon = cfg.horizon;
  out.document.p_psi = probability_bound(cert.eta, cert.gamma, cert.c, cfg.horizon);
  return out;
}

/// Stage gate applied after certify(): envelope and grid checks must pass.
inline void require_passed(const CertifyOutcome& out, double grid_tol = 1e-6) {
  if (out.envelope && !out.envelope->report.passed) {
    const auto& r = out.envelope->report;
    throw StageError(Stage::envelope, "GP envelope not certified: zeta1_hat=" + format_g17(r.errors.zeta1_hat) +
                                          " zeta2_hat=" + format_g17(r.errors.zeta2_hat) +
                                          " rkhs_norm=" + format_g17(r.rkhs_norm) +
                                          " (increase gp.max_train, zeta1/zeta2 or b_bar)");
  }
  if (!out.validation.all_hold(grid_tol)) {
    throw StageError(Stage::validation, "grid falsification failed: margins initial=" +
                                            format_g17(out.validation.initial.margin) +
                                            " unsafe=" + format_g17(out.validation.unsafe.margin) +
                                            " martingale=" + format_g17(out.validation.martingale.margin));
  }
}

inline std::string summary_text(const CertifyOutcome& out) {
  const auto& c = out.document.certificate;
  std::ostringstream s;
  s << "barrier: " << to_string(c.barrier) << '\n'
    << "eta=" << format_g17(c.eta) << " gamma=" << format_g17(c.gamma) << " c=" << format_g17(c.c)
    << " epsilon=" << format_g17(c.ambiguity.epsilon) << " b_bar=" << format_g17(c.ambiguity.b_bar) << '\n';
  if (out.envelope) {
    const auto& e = out.envelope->report;
    s << "envelope: " << (e.passed ? "passed" : "FAILED") << " zeta1_hat=" << format_g17(e.errors.zeta1_hat)
      << " zeta2_hat=" << format_g17(e.errors.zeta2_hat) << " rkhs_norm=" << format_g17(e.rkhs_norm)
      << " n_train=" << e.n_train << '\n';
  }
  for (const auto* chk : {&out.validation.initial, &out.validation.unsafe, &out.validation.martingale})
    s << "check " << chk->name << ": margin=" << format_g17(chk->margin) << " over " << chk->points_checked << " points\n";
  s << "P(safe for " << detail::horizon_text(out.document.horizon) << " steps) >= " << format_g17(out.document.p_psi)
    << " with confidence >= " << format_g17(1.0 - c.ambiguity.rho) << '\n';
  return s.str();
}

// ---------------------------------------------------------------------------
// epsilon sweep

struct SweepRow {
  double epsilon = 0;
  std::vector<double> p_per_seed;
  [[nodiscard]] double mean() const {
    double s = 0;
    for (double p : p_per_seed) s += p;
    return p_per_seed.empty() ? 0.0 : s / static_cast<double>(p_per_seed.size());
  }
};

/// Certifies once per (epsilon, repeat); repeat r uses seed cfg.seed + r and
/// the same dataset for every epsilon. A cell whose pipeline fails scores 0.
/// Cells run on up to cfg.workers threads; results do not depend on the
/// worker count.
inline std::vector<SweepRow> sweep_epsilon(const RunConfig& cfg, const std::vector<double>& epsilons, int n_repeats) {
  if (epsilons.empty()) throw std::invalid_argument("sweep_epsilon: need at least one epsilon");
  if (n_repeats < 1) throw std::invalid_argument("sweep_epsilon: n_repeats must be >= 1");
  std::vector<RunConfig> seeds;
  std::vector<TransitionDataset> datasets;
  std::vector<std::optional<EmpiricalCme>> cmes;
  for (int r = 0; r < n_repeats; ++r) {
    RunConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(r);
    datasets.push_back(obtain_dataset(c));
    try {
      cmes.emplace_back(fit_embedding(c, datasets.back()));
    } catch (const StageError&) {
      cmes.emplace_back(std::nullopt);
    }
    seeds.push_back(c);
  }
  std::vector<SweepRow> rows(epsilons.size());
  auto cell = [&](std::size_t e, int r) {
    if (!cmes[static_cast<std::size_t>(r)]) return 0.0;
    RunConfig c = seeds[static_cast<std::size_t>(r)];
    c.epsilon = epsilons[e];
    try {
      const CertifyOutcome out = certify(c, datasets[static_cast<std::size_t>(r)], *cmes[static_cast<std::size_t>(r)]);
      require_passed(out);
      return out.document.p_psi;
    } catch (const std::exception&) {
      return 0.0;
    }
  };
  std::vector<std::pair<std::size_t, int>> cells;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    rows[e].epsilon = epsilons[e];
    rows[e].p_per_seed.assign(static_cast<std::size_t>(n_repeats), 0.0);
    for (int r = 0; r < n_repeats; ++r) cells.emplace_back(e, r);
  }
  for (std::size_t start = 0; start < cells.size(); start += static_cast<std::size_t>(cfg.workers)) {
    std::vector<std::future<double>> batch;
    const std::size_t end = std::min(cells.size(), start + static_cast<std::size_t>(cfg.workers));
    for (std::size_t k = start; k < end; ++k)
      batch.push_back(std::async(cfg.workers > 1 ? std::launch::async : std::launch::deferred, cell, cells[k].first,
                                 cells[k].second));
    for (std::size_t k = start; k < end; ++k)
      rows[cells[k].first].p_per_seed[static_cast<std::size_t>(cells[k].second)] = batch[k - start].get();
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, std::uint64_t base_seed) {
  std::ostringstream out;
  out << "epsilon,mean_p_psi";
  const std::size_t n = rows.empty() ? 0 : rows.front().p_per_seed.size();
  for (std::size_t r = 0; r < n; ++r) out << ",p_psi_seed_" << base_seed + r;
  out << '\n';
  for (const auto& row : rows) {
    out << format_g17(row.epsilon) << ',' << format_g17(row.mean());
    for (double p : row.p_per_seed) out << ',' << format_g17(p);
    out << '\n';
  }
  return out.str();
}

inline std::vector<SweepRow> parse_sweep_csv(std::istream& in, const std::string& what = "sweep") {
  std::string line;
  if (!std::getline(in, line) || line.rfind("epsilon,mean_p_psi", 0) != 0) throw ParseError(what + ":1: not a sweep CSV");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Eigen::VectorXd v;
    try {
      v = parse_list(line);
    } catch (const ParseError& e) {
      throw ParseError(what + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (v.size() < 2) throw ParseError(what + ":" + std::to_string(lineno) + ": too few columns");
    SweepRow row;
    row.epsilon = v(0);
    for (Eigen::Index k = 2; k < v.size(); ++k) row.p_per_seed.push_back(v(k));
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Plot data

/// B over a resolution x resolution grid of the (axis_a, axis_b) face of
/// `box`, with the remaining coordinates fixed at `slice` (default: zero,
/// clamped into the box). Comment rows `# level,<name>,<value>` carry the
/// eta and gamma levels; the data block is `a,b,B`.
inline std::string barrier_slice_csv(const BarrierCertificate& cert, const StateBox& box, int resolution = 100,
                                     int axis_a = 0, int axis_b = 1, std::optional<Vector> slice = std::nullopt) {
  const int n = cert.barrier.num_vars();
  require_same_dim(box.dim(), n, "barrier_slice_csv");
  if (resolution < 2) throw std::invalid_argument("barrier_slice_csv: resolution must be >= 2");
  if (axis_a == axis_b || axis_a < 0 || axis_b < 0 || axis_a >= n || axis_b >= n)
    throw std::invalid_argument("barrier_slice_csv: invalid axes");
  Vector base = slice ? *slice : Vector(Vector::Zero(n).cwiseMax(box.lower).cwiseMin(box.upper));
  require_same_dim(base.size(), n, "barrier_slice_csv");
  std::ostringstream out;
  out << "# level,eta," << format_g17(cert.eta) << '\n' << "# level,gamma," << format_g17(cert.gamma) << '\n';
  out << 'x' << axis_a + 1 << ",x" << axis_b + 1 << ",B\n";
  std::vector<int> per(static_cast<std::size_t>(n), 1);
  per[static_cast<std::size_t>(axis_a)] = resolution;
  per[static_cast<std::size_t>(axis_b)] = resolution;
  StateBox face = box;
  for (int k = 0; k < n; ++k)
    if (k != axis_a && k != axis_b) face.lower(k) = face.upper(k) = base(k);
  const Matrix pts = face.grid(per);
  const Vector vals = cert.barrier.evaluate_rows(pts);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    out << format_g17(pts(i, axis_a)) << ',' << format_g17(pts(i, axis_b)) << ',' << format_g17(vals(i)) << '\n';
  return out.str();
}

/// Plot-ready series from a sweep: epsilon, mean, min and max over seeds.
inline std::string sweep_plot_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "epsilon,mean_p_psi,min_p_psi,max_p_psi\n";
  for (const auto& r : rows) {
    const auto [lo, hi] = std::minmax_element(r.p_per_seed.begin(), r.p_per_seed.end());
    out << format_g17(r.epsilon) << ',' << format_g17(r.mean()) << ',' << format_g17(r.p_per_seed.empty() ? 0.0 : *lo)
        << ',' << format_g17(r.p_per_seed.empty() ? 0.0 : *hi) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Simulation

/// `runs` trajectories from uniform initial states in X0, as rows
/// `run,t,x1..xn,unsafe` (unsafe = 1 when the state lies in an unsafe box).
inline std::string simulate_csv(const RunConfig& cfg, int runs) {
  if (runs < 1) throw std::invalid_argument("simulate: runs must be >= 1");
  const System system = cfg.make_system();
  const auto unsafe = unsafe_sets(cfg);
  const int horizon = cfg.horizon.value_or(10);
  const RandomStream root(cfg.seed);
  std::ostringstream out;
  out << "run,t";
  for (int k = 1; k <= cfg.domain.dim(); ++k) out << ",x" << k;
  out << ",unsafe\n";
  for (int r = 0; r < runs; ++r) {
    RandomStream rng = root.split("simulate", static_cast<std::uint64_t>(r));
    const Vector x0 = sample_uniform(cfg.initial, rng);
    const Matrix traj = simulate_trajectory(system, x0, horizon, rng);
    for (Eigen::Index t = 0; t < traj.rows(); ++t) {
      out << r << ',' << t;
      for (Eigen::Index k = 0; k < traj.cols(); ++k) out << ',' << format_g17(traj(t, k));
      out << ',' << (in_any(unsafe, traj.row(t).transpose()) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace ddbc
