#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ddbc/errors.hpp"

namespace ddbc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// k(x, y) = (a <x, y> + b)^d
struct PolynomialKernel {
  double a = 1.0;
  double b = 0.0;
  int d = 1;
};

/// k(x, y) = sf2 exp(-|x - y|^2 / (2 sl2))
struct SquaredExponentialKernel {
  double sigma_f_sq = 1.0;
  double sigma_l_sq = 1.0;
};

using KernelSpec = std::variant<PolynomialKernel, SquaredExponentialKernel>;

inline void validate(const KernelSpec& spec) {
  if (const auto* p = std::get_if<PolynomialKernel>(&spec)) {
    if (!(p->a > 0) || !(p->b >= 0) || p->d < 1) {
      throw std::invalid_argument("polynomial kernel requires a > 0, b >= 0, d >= 1");
    }
  } else {
    const auto& s = std::get<SquaredExponentialKernel>(spec);
    if (!(s.sigma_f_sq > 0) || !(s.sigma_l_sq > 0)) {
      throw std::invalid_argument("squared-exponential kernel requires sigma_f_sq > 0, sigma_l_sq > 0");
    }
  }
}

inline bool is_polynomial(const KernelSpec& spec) {
  return std::holds_alternative<PolynomialKernel>(spec);
}

template <class A, class B>
double eval_kernel(const KernelSpec& spec, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  require_same_dim(x.size(), y.size(), "eval_kernel");
  if (const auto* p = std::get_if<PolynomialKernel>(&spec)) {
    // Summation order fixed by index so that k(x, y) == k(y, x) bit for bit.
    return std::pow(p->a * x.dot(y) + p->b, p->d);
  }
  const auto& s = std::get<SquaredExponentialKernel>(spec);
  return s.sigma_f_sq * std::exp(-(x - y).squaredNorm() / (2.0 * s.sigma_l_sq));
}

/// Gram matrix over the rows of `points`.
inline Matrix gram(const KernelSpec& spec, const Matrix& points) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw std::invalid_argument("gram: empty point set");
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = eval_kernel(spec, points.row(i), points.row(j));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

/// Cross-kernel matrix with entry (i, j) = k(rows_a[i], rows_b[j]).
inline Matrix cross_gram(const KernelSpec& spec, const Matrix& rows_a, const Matrix& rows_b) {
  require_same_dim(rows_a.cols(), rows_b.cols(), "cross_gram");
  Matrix k(rows_a.rows(), rows_b.rows());
  if (const auto* p = std::get_if<PolynomialKernel>(&spec)) {
    const Matrix inner = rows_a * rows_b.transpose();
    for (Eigen::Index j = 0; j < k.cols(); ++j)
      for (Eigen::Index i = 0; i < k.rows(); ++i) k(i, j) = std::pow(p->a * inner(i, j) + p->b, p->d);
    return k;
  }
  // Squared distances from explicit differences: the |a|^2 + |b|^2 - 2 a.b
  // expansion loses digits when points sit far from the origin.
  const auto& s = std::get<SquaredExponentialKernel>(spec);
  const double inv = -1.0 / (2.0 * s.sigma_l_sq);
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      double d2 = 0.0;
      for (Eigen::Index c = 0; c < rows_a.cols(); ++c) {
        const double diff = rows_a(i, c) - rows_b(j, c);
        d2 += diff * diff;
      }
      k(i, j) = s.sigma_f_sq * std::exp(inv * d2);
    }
  }
  return k;
}

/// Vector of kernel sections (k(x, anchor_i))_i.
template <class Derived>
Vector kvec(const KernelSpec& spec, const Matrix& anchors, const Eigen::MatrixBase<Derived>& x) {
  require_same_dim(anchors.cols(), x.size(), "kvec");
  Vector out(anchors.rows());
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) out(i) = eval_kernel(spec, x, anchors.row(i));
  return out;
}

/// Cholesky factor of K + n_times_lambda * I. Immutable after construction.
class GramFactorization {
 public:
  GramFactorization(const Matrix& k, double n_times_lambda) : regularizer_(n_times_lambda) {
    if (k.rows() != k.cols()) throw DimensionError("factorize_regularized: matrix is not square");
    if (!(n_times_lambda >= 0)) throw std::invalid_argument("factorize_regularized: regularizer must be >= 0");
    Matrix reg = k;
    reg.diagonal().array() += n_times_lambda;
    llt_.compute(reg);
    if (llt_.info() != Eigen::Success || !(llt_.matrixLLT().diagonal().array() > 0).all()) {
      throw NumericalError(
          "factorize_regularized: K + N*lambda*I is not positive definite to working precision; "
          "increase the regularization constant lambda");
    }
  }

  [[nodiscard]] Eigen::Index dim() const { return llt_.matrixLLT().rows(); }
  [[nodiscard]] double regularizer() const { return regularizer_; }
  [[nodiscard]] Matrix factor() const { return llt_.matrixL(); }

  template <class Rhs>
  [[nodiscard]] auto solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    require_same_dim(rhs.rows(), dim(), "GramFactorization::solve");
    return llt_.solve(rhs).eval();
  }

 private:
  Eigen::LLT<Matrix> llt_;
  double regularizer_;
};

/// cross_gram(points, centers) * coeffs, assembled in row blocks of `chunk`
/// points so the full cross Gram matrix is never materialized.
inline Vector kernel_matvec(const KernelSpec& spec, const Matrix& points, const Matrix& centers, const Vector& coeffs,
                            Eigen::Index chunk = 4096) {
  require_same_dim(centers.rows(), coeffs.size(), "kernel_matvec");
  Vector out(points.rows());
  for (Eigen::Index start = 0; start < points.rows(); start += chunk) {
    const Eigen::Index len = std::min(chunk, points.rows() - start);
    out.segment(start, len).noalias() = cross_gram(spec, points.middleRows(start, len), centers) * coeffs;
  }
  return out;
}

inline GramFactorization factorize_regularized(const Matrix& k, double n_times_lambda) {
  return GramFactorization(k, n_times_lambda);
}

}  // namespace ddbc
