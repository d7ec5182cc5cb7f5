#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/box.hpp"
#include "ddbc/kernels.hpp"
#include "ddbc/polynomial.hpp"
#include "ddbc/systems.hpp"

namespace ddbc {

/// Radius of the RKHS ambiguity ball around the empirical embedding, the
/// confidence mass it is assumed to carry, and the cap on the barrier's RKHS norm.
struct AmbiguityConfig {
  double epsilon = 0.0;
  double rho = 0.0;
  double b_bar = 0.0;

  void validate() const {
    if (!(epsilon >= 0) || !(b_bar >= 0) || !(rho >= 0 && rho <= 1)) {
      throw std::invalid_argument("ambiguity: require epsilon >= 0, b_bar >= 0, 0 <= rho <= 1");
    }
  }
};

/// Empirical conditional mean embedding with weights
///   w(x) = (K + N lambda I)^{-1} k_X(x).
/// Immutable after construction.
class EmpiricalCme {
 public:
  EmpiricalCme(Matrix anchors, Matrix successors, KernelSpec kx, double lambda)
      : anchors_(std::move(anchors)),
        successors_(std::move(successors)),
        kx_(kx),
        lambda_(lambda),
        factorization_(gram(kx_, anchors_), static_cast<double>(anchors_.rows()) * lambda) {
    require_same_dim(anchors_.rows(), successors_.rows(), "EmpiricalCme");
    require_same_dim(anchors_.cols(), successors_.cols(), "EmpiricalCme");
  }

  [[nodiscard]] const Matrix& anchors() const { return anchors_; }
  [[nodiscard]] const Matrix& successors() const { return successors_; }
  [[nodiscard]] const KernelSpec& kernel() const { return kx_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] const GramFactorization& factorization() const { return factorization_; }
  [[nodiscard]] Eigen::Index size() const { return anchors_.rows(); }
  [[nodiscard]] int dim() const { return static_cast<int>(anchors_.cols()); }

  template <class Derived>
  [[nodiscard]] Vector weights(const Eigen::MatrixBase<Derived>& x) const {
    return factorization_.solve(kvec(kx_, anchors_, x));
  }

  /// w(x)^T f(X+) for `f_at_successors` = f evaluated at the successor rows.
  template <class Derived>
  [[nodiscard]] double expected_value(const Vector& f_at_successors, const Eigen::MatrixBase<Derived>& x) const {
    require_same_dim(f_at_successors.size(), size(), "expected_value");
    return weights(x).dot(f_at_successors);
  }

  /// Representer coefficients (K + N lambda I)^{-1} f(X+); then
  /// w(x)^T f(X+) = k_X(x)^T coefficients. One solve serves any number of points.
  [[nodiscard]] Vector representer(const Vector& f_at_successors) const {
    require_same_dim(f_at_successors.size(), size(), "representer");
    return factorization_.solve(f_at_successors);
  }

  /// w(x)^T f(X+) at every row of `points`.
  [[nodiscard]] Vector expected_values(const Vector& f_at_successors, const Matrix& points) const {
    return kernel_matvec(kx_, points, anchors_, representer(f_at_successors));
  }

 private:
  Matrix anchors_;
  Matrix successors_;
  KernelSpec kx_;
  double lambda_;
  GramFactorization factorization_;
};

inline EmpiricalCme fit_cme(const TransitionDataset& data, const KernelSpec& kx, double lambda) {
  validate(kx);
  if (data.size() < 1) throw std::invalid_argument("fit_cme: need at least one transition");
  if (!(lambda >= 0)) throw std::invalid_argument("fit_cme: lambda must be >= 0");
  return EmpiricalCme(data.states, data.successors, kx, lambda);
}

/// epsilon * b_bar * sqrt(k_x(x, x)): worst-case shift of the conditional
/// expectation of a function with RKHS norm <= b_bar over the ambiguity ball.
template <class Derived>
double robust_margin(const KernelSpec& kx, const AmbiguityConfig& cfg, const Eigen::MatrixBase<Derived>& x) {
  return cfg.epsilon * cfg.b_bar * std::sqrt(eval_kernel(kx, x, x));
}

/// sup over the box of sqrt(k_x(x, x)). Exact: for the polynomial kernel the
/// diagonal is increasing in |x|^2, which peaks at a corner; the
/// squared-exponential diagonal is the constant sigma_f^2.
inline double sup_sqrt_kx(const KernelSpec& kx, const StateBox& box) {
  if (const auto* p = std::get_if<PolynomialKernel>(&kx)) {
    double r2 = 0.0;
    for (int i = 0; i < box.dim(); ++i) r2 += std::max(box.lower(i) * box.lower(i), box.upper(i) * box.upper(i));
    return std::pow(p->a * r2 + p->b, 0.5 * p->d);
  }
  return std::sqrt(std::get<SquaredExponentialKernel>(kx).sigma_f_sq);
}

/// Inflation applied when the supremum is taken over grid samples of a general set.
inline constexpr double kGridSupInflation = 1.05;

/// Grid estimate of sup sqrt(k_x(x, x)) over a semi-algebraic set with a box hull,
/// inflated by kGridSupInflation.
inline double sup_sqrt_kx(const KernelSpec& kx, const SemiAlgebraicSet& set, int per_axis = 50) {
  if (!set.box_hull) throw std::invalid_argument("sup_sqrt_kx: set needs a box hull for grid sampling");
  const Matrix pts = set.box_hull->grid(per_axis);
  double best = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    if (set.contains(x)) best = std::max(best, std::sqrt(eval_kernel(kx, x, x)));
  }
  return kGridSupInflation * best;
}

inline double multinomial(const Exponent& e) {
  double out = std::tgamma(total_degree(e) + 1.0);
  for (int v : e) out /= std::tgamma(v + 1.0);
  return out;
}

/// For each column j of `values_at_successors` (function values at X+),
/// the polynomial q_j(x) = sum_i A_ij k_x(x, anchor_i) with
/// A = (K + N lambda I)^{-1} values, so that q_j(x) = w(x)^T values.col(j).
///
/// The kernel expansion is aggregated over anchors first: with s = <x, anchor>,
///   (a s + b)^d = sum_r C(d, r) a^r b^(d-r) s^r,
///   s^r = sum_{|beta| = r} multinomial(beta) x^beta anchor^beta,
/// so each q_j needs only the weighted anchor moments sum_i A_ij anchor_i^beta.
inline std::vector<Polynomial> lift_functions(const EmpiricalCme& cme, const Matrix& values_at_successors) {
  const auto* pk = std::get_if<PolynomialKernel>(&cme.kernel());
  if (!pk) throw std::invalid_argument("cme lift requires the polynomial conditioning kernel");
  require_same_dim(values_at_successors.rows(), cme.size(), "lift_functions");
  const Matrix coeffs = cme.factorization().solve(values_at_successors);
  const int n = cme.dim();
  const std::vector<Exponent> basis = monomial_basis(n, pk->d);

  // Anchor monomial features, N x |basis|.
  Matrix features(cme.size(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index i = 0; i < cme.size(); ++i) {
    const Vector anchor = cme.anchors().row(i).transpose();
    for (std::size_t m = 0; m < basis.size(); ++m) features(i, static_cast<Eigen::Index>(m)) = monomial_value(basis[m], anchor);
  }
  const Matrix moments = features.transpose() * coeffs;  // |basis| x cols

  std::vector<Polynomial> out;
  out.reserve(static_cast<std::size_t>(values_at_successors.cols()));
  for (Eigen::Index j = 0; j < values_at_successors.cols(); ++j) {
    Polynomial q(n);
    for (std::size_t m = 0; m < basis.size(); ++m) {
      const int r = total_degree(basis[m]);
      const double binom = std::tgamma(pk->d + 1.0) / (std::tgamma(r + 1.0) * std::tgamma(pk->d - r + 1.0));
      const double scale = binom * std::pow(pk->a, r) * std::pow(pk->b, pk->d - r) * multinomial(basis[m]);
      q.add_term(basis[m], scale * moments(static_cast<Eigen::Index>(m), j));
    }
    out.push_back(std::move(q));
  }
  return out;
}

/// Lift of a monomial basis evaluated at the successors: q_j satisfies
/// sum_j b_j q_j(x) = w(x)^T B(X+) for B = sum_j b_j m_j.
/// `successor_points` defaults to the stored successors; pass transformed
/// points to lift a basis expressed in other coordinates.
inline std::vector<Polynomial> cme_monomial_lift(const EmpiricalCme& cme, const std::vector<Exponent>& basis,
                                                 const std::optional<Matrix>& successor_points = std::nullopt) {
  const Matrix& pts = successor_points ? *successor_points : cme.successors();
  require_same_dim(pts.rows(), cme.size(), "cme_monomial_lift");
  Matrix phi(pts.rows(), static_cast<Eigen::Index>(basis.size()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const Vector xp = pts.row(i).transpose();
    for (std::size_t j = 0; j < basis.size(); ++j) {
      require_same_dim(static_cast<long>(basis[j].size()), xp.size(), "cme_monomial_lift");
      phi(i, static_cast<Eigen::Index>(j)) = monomial_value(basis[j], xp);
    }
  }
  return lift_functions(cme, phi);
}

/// Non-rigorous guide for choosing epsilon: refit on the two halves of the
/// data and return the largest RKHS distance between the two empirical
/// embeddings at the probe points, normalized by sqrt(k_x(x, x)).
inline double half_split_discrepancy(const TransitionDataset& data, const KernelSpec& kx, const KernelSpec& k_plus,
                                     double lambda, const Matrix& probes) {
  const Eigen::Index half = data.size() / 2;
  if (half < 1) throw std::invalid_argument("half_split_discrepancy: need at least two transitions");
  const EmpiricalCme first(data.states.topRows(half), data.successors.topRows(half), kx, lambda);
  const EmpiricalCme second(data.states.middleRows(half, half), data.successors.middleRows(half, half), kx, lambda);
  const Matrix k11 = gram(k_plus, first.successors());
  const Matrix k22 = gram(k_plus, second.successors());
  const Matrix k12 = cross_gram(k_plus, first.successors(), second.successors());
  double worst = 0.0;
  for (Eigen::Index p = 0; p < probes.rows(); ++p) {
    const Vector x = probes.row(p).transpose();
    const Vector w1 = first.weights(x);
    const Vector w2 = second.weights(x);
    const double d2 = w1.dot(k11 * w1) - 2.0 * w1.dot(k12 * w2) + w2.dot(k22 * w2);
    worst = std::max(worst, std::sqrt(std::max(d2, 0.0)) / std::sqrt(eval_kernel(kx, x, x)));
  }
  return worst;
}

}  // namespace ddbc
