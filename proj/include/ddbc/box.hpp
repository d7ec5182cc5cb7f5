#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/errors.hpp"

namespace ddbc {

/// Axis-aligned box [lower_i, upper_i] in state units.
struct StateBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  StateBox() = default;
  StateBox(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    validate();
  }
  StateBox(std::initializer_list<double> lo, std::initializer_list<double> hi)
      : StateBox(Eigen::Map<const Eigen::VectorXd>(lo.begin(), static_cast<Eigen::Index>(lo.size())),
                 Eigen::Map<const Eigen::VectorXd>(hi.begin(), static_cast<Eigen::Index>(hi.size()))) {}

  void validate() const {
    require_same_dim(lower.size(), upper.size(), "StateBox");
    if (lower.size() == 0) throw std::invalid_argument("StateBox: zero-dimensional box");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(lower(i) < upper(i))) {
        throw std::invalid_argument("StateBox: lower < upper violated in dimension " + std::to_string(i + 1));
      }
    }
  }

  [[nodiscard]] int dim() const { return static_cast<int>(lower.size()); }
  [[nodiscard]] Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  [[nodiscard]] Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }

  template <class Derived>
  [[nodiscard]] bool contains(const Eigen::MatrixBase<Derived>& x, double tol = 0.0) const {
    if (x.size() != lower.size()) return false;
    return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
  }

  /// Lattice with `per_axis[i]` points along axis i, endpoints included.
  /// A single point on an axis sits at the axis midpoint. Rows are points.
  [[nodiscard]] Eigen::MatrixXd grid(const std::vector<int>& per_axis) const {
    require_same_dim(static_cast<long>(per_axis.size()), dim(), "StateBox::grid");
    Eigen::Index total = 1;
    for (int c : per_axis) {
      if (c < 1) throw std::invalid_argument("StateBox::grid: need at least one point per axis");
      total *= c;
    }
    Eigen::MatrixXd pts(total, dim());
    std::vector<int> idx(per_axis.size(), 0);
    for (Eigen::Index r = 0; r < total; ++r) {
      for (int k = 0; k < dim(); ++k) {
        pts(r, k) = per_axis[k] == 1
                        ? 0.5 * (lower(k) + upper(k))
                        : lower(k) + (upper(k) - lower(k)) * idx[k] / static_cast<double>(per_axis[k] - 1);
      }
      for (int k = dim() - 1; k >= 0; --k) {
        if (++idx[k] < per_axis[k]) break;
        idx[k] = 0;
      }
    }
    return pts;
  }

  [[nodiscard]] Eigen::MatrixXd grid(int per_axis) const {
    return grid(std::vector<int>(static_cast<std::size_t>(dim()), per_axis));
  }
};

}  // namespace ddbc
