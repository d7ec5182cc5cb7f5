#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ddbc/box.hpp"
#include "ddbc/cme.hpp"
#include "ddbc/kernels.hpp"
#include "ddbc/polynomial.hpp"
#include "ddbc/rng.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

/// Inflation applied to grid maxima when they stand in for suprema over the box.
inline constexpr double kSupInflation = 1.1;

/// Default jitter-scale regularizer, relative to the signal variance.
inline constexpr double kDefaultGpRegularizerScale = 1e-8;

enum class SamplingScheme { grid, uniform };

struct TrainingSet {
  Matrix points;
  Vector targets;
};

/// Points per axis of a lattice with about `n_total` points in `dim` dimensions.
inline int lattice_points_per_axis(long n_total, int dim) {
  if (n_total < 1 || dim < 1) throw std::invalid_argument("lattice_points_per_axis: need n_total >= 1 and dim >= 1");
  const auto k = static_cast<int>(std::llround(std::pow(static_cast<double>(n_total), 1.0 / dim)));
  return std::max(1, k);
}

/// Noise-free samples of B. The grid scheme places the same number of points
/// on every axis (spacing proportional to edge length); the uniform scheme
/// draws `n_train` i.i.d. points.
inline TrainingSet sample_barrier(const Polynomial& barrier, const StateBox& box, long n_train, SamplingScheme scheme,
                                  std::uint64_t seed = 0) {
  box.validate();
  require_same_dim(barrier.num_vars(), box.dim(), "sample_barrier");
  if (n_train < 1) throw std::invalid_argument("sample_barrier: n_train must be >= 1");
  TrainingSet out;
  if (scheme == SamplingScheme::grid) {
    out.points = box.grid(lattice_points_per_axis(n_train, box.dim()));
  } else {
    RandomStream rng = RandomStream(seed).split("gp-training");
    out.points.resize(n_train, box.dim());
    for (long i = 0; i < n_train; ++i) out.points.row(i) = sample_uniform(box, rng).transpose();
  }
  out.targets = barrier.evaluate_rows(out.points);
  return out;
}

/// Representer-form regression model, mean x -> k(centers, x)^T alpha.
struct GpModel {
  KernelSpec kernel = SquaredExponentialKernel{};
  Matrix centers;
  Vector alpha;
  Vector targets;
  double gp_regularizer = 0.0;

  [[nodiscard]] Eigen::Index size() const { return centers.rows(); }

  template <class Derived>
  [[nodiscard]] double mean(const Eigen::MatrixBase<Derived>& x) const {
    return kvec(kernel, centers, x).dot(alpha);
  }
  [[nodiscard]] Vector mean_rows(const Matrix& points) const { return kernel_matvec(kernel, points, centers, alpha); }
};

inline double default_gp_regularizer(const KernelSpec& kernel) {
  return kDefaultGpRegularizerScale * std::get<SquaredExponentialKernel>(kernel).sigma_f_sq;
}

/// alpha = (K + gp_regularizer I)^{-1} y over the training points.
inline GpModel fit_gp(const TrainingSet& train, const KernelSpec& kernel, double gp_regularizer) {
  if (is_polynomial(kernel)) throw std::invalid_argument("fit_gp: the envelope kernel must be squared-exponential");
  validate(kernel);
  require_same_dim(train.points.rows(), train.targets.size(), "fit_gp");
  GpModel model;
  model.kernel = kernel;
  model.centers = train.points;
  model.targets = train.targets;
  model.gp_regularizer = gp_regularizer;
  model.alpha = factorize_regularized(gram(kernel, train.points), gp_regularizer).solve(train.targets);
  return model;
}

/// sqrt(alpha^T K alpha), K the Gram matrix of the centers (assembled in blocks).
inline double rkhs_norm(const GpModel& model) {
  if (model.size() == 0) return 0.0;
  const Vector k_alpha = kernel_matvec(model.kernel, model.centers, model.centers, model.alpha);
  return std::sqrt(std::max(model.alpha.dot(k_alpha), 0.0));
}

/// Same norm from the fit identity K alpha = y - reg alpha, i.e.
/// alpha^T K alpha = alpha^T y - reg |alpha|^2.
inline double rkhs_norm_from_targets(const GpModel& model) {
  return std::sqrt(std::max(model.alpha.dot(model.targets) - model.gp_regularizer * model.alpha.squaredNorm(), 0.0));
}

struct SupErrors {
  double zeta1_hat = 0;
  double zeta2_hat = 0;
  Vector grid_spacing;
  long grid_points = 0;
  double max_successor_error = 0;  // max_i |B(x+_i) - B~(x+_i)|
};

inline Vector lattice_spacing(const StateBox& box, int per_axis) {
  if (per_axis <= 1) return Vector::Zero(box.dim());
  return (box.upper - box.lower) / static_cast<double>(per_axis - 1);
}

/// Grid maxima, inflated by kSupInflation, of |B - B~| (zeta1_hat) and of
/// |w(x)^T (B(X+) - B~(X+))| (zeta2_hat, one representer solve for all points).
inline SupErrors sup_errors(const Polynomial& barrier, const GpModel& model, const EmpiricalCme& cme, const StateBox& box,
                            int per_axis) {
  require_same_dim(barrier.num_vars(), box.dim(), "sup_errors");
  require_same_dim(cme.dim(), box.dim(), "sup_errors");
  const Matrix grid = box.grid(per_axis);
  SupErrors out;
  out.grid_spacing = lattice_spacing(box, per_axis);
  out.grid_points = grid.rows();
  out.zeta1_hat = kSupInflation * (barrier.evaluate_rows(grid) - model.mean_rows(grid)).cwiseAbs().maxCoeff();
  const Vector successor_error = barrier.evaluate_rows(cme.successors()) - model.mean_rows(cme.successors());
  out.max_successor_error = successor_error.cwiseAbs().maxCoeff();
  out.zeta2_hat = kSupInflation * cme.expected_values(successor_error, grid).cwiseAbs().maxCoeff();
  return out;
}

struct EnvelopeConfig {
  double zeta1 = 0.01;
  double zeta2 = 0.01;
  double b_bar = 0.1;
};

struct EnvelopeReport {
  SupErrors errors;
  double rkhs_norm = 0;
  long n_train = 0;
  double gp_regularizer = 0;
  double zeta1_margin = 0;  // zeta1 - zeta1_hat
  double zeta2_margin = 0;
  double norm_margin = 0;  // b_bar - rkhs_norm
  bool passed = false;
};

inline EnvelopeReport certify_envelope(const Polynomial& barrier, const GpModel& model, const EmpiricalCme& cme,
                                       const StateBox& box, const EnvelopeConfig& cfg, int per_axis = 50) {
  EnvelopeReport r;
  r.errors = sup_errors(barrier, model, cme, box, per_axis);
  r.rkhs_norm = rkhs_norm(model);
  r.n_train = model.size();
  r.gp_regularizer = model.gp_regularizer;
  r.zeta1_margin = cfg.zeta1 - r.errors.zeta1_hat;
  r.zeta2_margin = cfg.zeta2 - r.errors.zeta2_hat;
  r.norm_margin = cfg.b_bar - r.rkhs_norm;
  r.passed = r.zeta1_margin >= 0 && r.zeta2_margin >= 0 && r.norm_margin >= 0;
  return r;
}

struct EnvelopeOptions {
  long initial_train = 1728;  // 12^3
  int max_rounds = 3;
  long max_train = 8000;
  double gp_regularizer = 0;  // 0 picks default_gp_regularizer
  int validation_per_axis = 50;
};

struct EnvelopeResult {
  GpModel model;
  EnvelopeReport report;
  int rounds = 0;
};

/// Fits on a training lattice and certifies; while zeta1_hat exceeds zeta1,
/// doubles the points per axis (capped at max_train total) for up to
/// max_rounds refinements.
inline EnvelopeResult fit_envelope(const Polynomial& barrier, const EmpiricalCme& cme, const StateBox& box,
                                   const KernelSpec& kernel, const EnvelopeConfig& cfg, const EnvelopeOptions& opts = {}) {
  const double reg = opts.gp_regularizer > 0 ? opts.gp_regularizer : default_gp_regularizer(kernel);
  const int cap = std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(opts.max_train), 1.0 / box.dim()) + 1e-9)));
  int per_axis = std::min(cap, lattice_points_per_axis(opts.initial_train, box.dim()));
  EnvelopeResult res;
  for (int round = 0;; ++round) {
    const long n = static_cast<long>(std::llround(std::pow(per_axis, box.dim())));
    res.model = fit_gp(sample_barrier(barrier, box, n, SamplingScheme::grid), kernel, reg);
    res.report = certify_envelope(barrier, res.model, cme, box, cfg, opts.validation_per_axis);
    res.rounds = round;
    const int next = std::min(cap, 2 * per_axis);
    if (res.report.errors.zeta1_hat <= cfg.zeta1 || round >= opts.max_rounds || next == per_axis) break;
    per_axis = next;
  }
  return res;
}

}  // namespace ddbc
