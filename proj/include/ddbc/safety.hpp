#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <Eigen/Dense>

#include "ddbc/box.hpp"
#include "ddbc/cme.hpp"
#include "ddbc/polynomial.hpp"
#include "ddbc/rng.hpp"
#include "ddbc/sos.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

/// Reach-avoid specification: stay out of the union `unsafe` for `horizon`
/// steps (no value = unbounded horizon).
struct SafetySpec {
  std::vector<SemiAlgebraicSet> unsafe;
  std::optional<int> horizon;

  void validate() const {
    if (horizon && *horizon < 1) throw std::invalid_argument("safety spec: horizon must be >= 1");
  }
};

/// max(0, 1 - (eta + c T) / gamma); for an unbounded horizon c must be zero
/// and the bound is max(0, 1 - eta / gamma).
inline double probability_bound(double eta, double gamma, double c, std::optional<int> horizon) {
  if (!(gamma > eta) || !(eta >= 0)) throw std::invalid_argument("probability_bound: require gamma > eta >= 0");
  if (!(c >= 0)) throw std::invalid_argument("probability_bound: require c >= 0");
  if (!horizon) {
    if (c != 0.0) throw std::invalid_argument("probability_bound: an unbounded horizon requires c = 0");
    return std::max(0.0, 1.0 - eta / gamma);
  }
  if (*horizon < 1) throw std::invalid_argument("probability_bound: horizon must be >= 1");
  return std::max(0.0, 1.0 - (eta + c * *horizon) / gamma);
}

// ---------------------------------------------------------------------------
// Falsification on grids

struct ConditionCheck {
  std::string name;
  double worst_value = 0;  // max B on X0 / min B on Xu / max of the drift expression
  Vector worst_point;
  double margin = 0;       // >= 0 iff the condition holds at every grid point
  long points_checked = 0;

  [[nodiscard]] bool holds(double tol = 0.0) const { return margin >= -tol; }
};

struct ValidationReport {
  ConditionCheck initial;     // (a) B <= eta on X0
  ConditionCheck unsafe;      // (b) B >= gamma on every unsafe component
  ConditionCheck martingale;  // (c) w(x)^T B(X+) - B(x) + robust margin <= c on X
  int per_axis = 0;

  [[nodiscard]] bool all_hold(double tol = 0.0) const {
    return initial.holds(tol) && unsafe.holds(tol) && martingale.holds(tol);
  }
};

/// Grid over the set's box hull, keeping the points that satisfy its inequalities.
inline Matrix grid_points_in(const SemiAlgebraicSet& set, int per_axis) {
  if (!set.box_hull) throw std::invalid_argument("validation grid: set needs a box hull");
  const Matrix pts = set.box_hull->grid(per_axis);
  if (set.exact_box) return pts;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    if (set.contains(pts.row(i).transpose(), 1e-12)) keep.push_back(i);
  Matrix out(static_cast<Eigen::Index>(keep.size()), pts.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = pts.row(keep[k]);
  return out;
}

/// Checks the three barrier conditions of the polynomial B on dense grids;
/// condition (c) uses one representer solve for all grid points.
inline ValidationReport validate_certificate(const BarrierCertificate& cert, const SemiAlgebraicSet& domain,
                                             const SemiAlgebraicSet& initial, const std::vector<SemiAlgebraicSet>& unsafe,
                                             const EmpiricalCme& cme, int per_axis = 50) {
  const int n = cert.barrier.num_vars();
  require_same_dim(domain.ambient_dim, n, "validate_certificate");
  require_same_dim(cme.dim(), n, "validate_certificate");
  ValidationReport rep;
  rep.per_axis = per_axis;

  {
    const Matrix pts = grid_points_in(initial, per_axis);
    const Vector b = cert.barrier.evaluate_rows(pts);
    Eigen::Index arg = 0;
    rep.initial = {"initial", b.maxCoeff(&arg), pts.row(arg).transpose(), 0.0, pts.rows()};
    rep.initial.margin = cert.eta - rep.initial.worst_value;
  }
  {
    rep.unsafe = {"unsafe", std::numeric_limits<double>::infinity(), Vector::Zero(n), 0.0, 0};
    for (const auto& component : unsafe) {
      const Matrix pts = grid_points_in(component, per_axis);
      if (pts.rows() == 0) continue;
      const Vector b = cert.barrier.evaluate_rows(pts);
      Eigen::Index arg = 0;
      const double lo = b.minCoeff(&arg);
      if (lo < rep.unsafe.worst_value) {
        rep.unsafe.worst_value = lo;
        rep.unsafe.worst_point = pts.row(arg).transpose();
      }
      rep.unsafe.points_checked += pts.rows();
    }
    rep.unsafe.margin = rep.unsafe.points_checked ? rep.unsafe.worst_value - cert.gamma : 0.0;
  }
  {
    const Matrix pts = grid_points_in(domain, per_axis);
    const Vector expected = cme.expected_values(cert.barrier.evaluate_rows(cme.successors()), pts);
    const Vector drift = expected - cert.barrier.evaluate_rows(pts);
    Vector lhs(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      lhs(i) = drift(i) + robust_margin(cme.kernel(), cert.ambiguity, pts.row(i).transpose());
    Eigen::Index arg = 0;
    rep.martingale = {"martingale", lhs.maxCoeff(&arg), pts.row(arg).transpose(), 0.0, pts.rows()};
    rep.martingale.margin = cert.c - rep.martingale.worst_value;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte-Carlo falsification

struct MonteCarloResult {
  long n_runs = 0;
  long n_safe = 0;
  double probability = 0;
  double lower = 0;  // exact two-sided confidence interval
  double upper = 1;
  double confidence = 0.99;
};

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
inline std::pair<double, double> clopper_pearson(long successes, long trials, double confidence) {
  if (trials < 1 || successes < 0 || successes > trials) throw std::invalid_argument("clopper_pearson: need 0 <= k <= n, n >= 1");
  const double alpha = 1.0 - confidence;
  const auto k = static_cast<double>(successes);
  const auto n = static_cast<double>(trials);
  const double lo = successes == 0 ? 0.0 : boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1), alpha / 2);
  const double hi = successes == trials ? 1.0 : boost::math::quantile(boost::math::beta_distribution<>(k + 1, n - k), 1 - alpha / 2);
  return {lo, hi};
}

inline bool in_any(const std::vector<SemiAlgebraicSet>& sets, const Vector& x) {
  for (const auto& s : sets)
    if (s.contains(x)) return true;
  return false;
}

/// Fraction of trajectories started uniformly in X0 that avoid every unsafe
/// component at steps 0..T. Run r draws from its own split stream.
inline MonteCarloResult monte_carlo_safety(const System& system, const StateBox& initial,
                                           const std::vector<SemiAlgebraicSet>& unsafe, int horizon, long n_runs,
                                           std::uint64_t seed, double confidence = 0.99) {
  if (n_runs < 100) throw std::invalid_argument("monte_carlo_safety: n_runs must be >= 100");
  if (horizon < 1) throw std::invalid_argument("monte_carlo_safety: horizon must be >= 1");
  require_same_dim(initial.dim(), state_dim(system), "monte_carlo_safety");
  const RandomStream root(seed);
  MonteCarloResult res;
  res.n_runs = n_runs;
  res.confidence = confidence;
  for (long r = 0; r < n_runs; ++r) {
    RandomStream rng = root.split("monte-carlo", static_cast<std::uint64_t>(r));
    Vector x = sample_uniform(initial, rng);
    bool safe = !in_any(unsafe, x);
    for (int t = 0; t < horizon && safe; ++t) {
      x = step(system, x, rng);
      safe = !in_any(unsafe, x);
    }
    res.n_safe += safe ? 1 : 0;
  }
  res.probability = static_cast<double>(res.n_safe) / static_cast<double>(n_runs);
  std::tie(res.lower, res.upper) = clopper_pearson(res.n_safe, n_runs, confidence);
  return res;
}

}  // namespace ddbc
