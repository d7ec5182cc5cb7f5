#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/errors.hpp"

namespace ddbc {

// ===========================================================================
// Problem data
//
//   minimize    sum_b <C_b, X_b> + c_free . x_free
//   subject to  sum_b <A_ib, X_b> + (F x_free)_i = rhs_i,   i = 1..m
//               X_b PSD, x_free unrestricted
//
// with dual
//   maximize    rhs . y
//   subject to  C_b - sum_i y_i A_ib = S_b PSD,   F^T y = c_free.
// ===========================================================================

enum class ObjectiveSense { minimize, maximize };

/// One symmetric-matrix entry; (row, col) and (col, row) both carry `value`.
struct SdpEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;

  friend bool operator==(const SdpEntry&, const SdpEntry&) = default;
};

class SdpProblem {
 public:
  SdpProblem() = default;
  SdpProblem(std::vector<int> block_sizes, int num_constraints, int num_free = 0)
      : block_sizes_(std::move(block_sizes)),
        constraints_(static_cast<std::size_t>(num_constraints)),
        rhs_(Eigen::VectorXd::Zero(num_constraints)),
        free_coeffs_(Eigen::MatrixXd::Zero(num_constraints, num_free)),
        free_cost_(Eigen::VectorXd::Zero(num_free)) {
    for (int s : block_sizes_)
      if (s < 1) throw std::invalid_argument("SdpProblem: block sizes must be positive");
  }

  [[nodiscard]] int num_constraints() const { return static_cast<int>(constraints_.size()); }
  [[nodiscard]] int num_blocks() const { return static_cast<int>(block_sizes_.size()); }
  [[nodiscard]] int num_free() const { return static_cast<int>(free_cost_.size()); }
  [[nodiscard]] const std::vector<int>& block_sizes() const { return block_sizes_; }
  [[nodiscard]] const std::vector<SdpEntry>& constraint(int i) const { return constraints_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const std::vector<SdpEntry>& cost() const { return cost_; }
  [[nodiscard]] const Eigen::VectorXd& rhs() const { return rhs_; }
  [[nodiscard]] const Eigen::MatrixXd& free_coeffs() const { return free_coeffs_; }
  [[nodiscard]] const Eigen::VectorXd& free_cost() const { return free_cost_; }
  [[nodiscard]] ObjectiveSense sense() const { return sense_; }

  void set_sense(ObjectiveSense s) { sense_ = s; }
  void set_rhs(int i, double v) { rhs_(i) = v; }
  void set_free_coeff(int i, int k, double v) { free_coeffs_(i, k) = v; }
  void set_free_cost(int k, double v) { free_cost_(k) = v; }

  /// Adds `value` at (row, col) and its mirror of constraint matrix A_i.
  void add_constraint_entry(int i, int block, int row, int col, double value) {
    constraints_.at(static_cast<std::size_t>(i)).push_back(checked_entry(block, row, col, value));
  }
  void add_cost_entry(int block, int row, int col, double value) {
    cost_.push_back(checked_entry(block, row, col, value));
  }

  /// Sorts entries and merges duplicates; equal problems compare equal afterwards.
  void canonicalize() {
    for (auto& c : constraints_) merge(c);
    merge(cost_);
  }

  friend bool operator==(const SdpProblem& a, const SdpProblem& b) {
    return a.block_sizes_ == b.block_sizes_ && a.constraints_ == b.constraints_ && a.cost_ == b.cost_ &&
           a.rhs_ == b.rhs_ && a.free_coeffs_ == b.free_coeffs_ && a.free_cost_ == b.free_cost_ &&
           a.sense_ == b.sense_;
  }

 private:
  SdpEntry checked_entry(int block, int row, int col, double value) const {
    if (block < 0 || block >= num_blocks()) throw DimensionError("SdpProblem: block index out of range");
    const int n = block_sizes_[static_cast<std::size_t>(block)];
    if (row < 0 || col < 0 || row >= n || col >= n) throw DimensionError("SdpProblem: entry outside block");
    if (row > col) std::swap(row, col);
    return {block, row, col, value};
  }

  static void merge(std::vector<SdpEntry>& entries) {
    std::sort(entries.begin(), entries.end(), [](const SdpEntry& a, const SdpEntry& b) {
      return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
    });
    std::vector<SdpEntry> out;
    for (const auto& e : entries) {
      if (!out.empty() && out.back().block == e.block && out.back().row == e.row && out.back().col == e.col) {
        out.back().value += e.value;
      } else {
        out.push_back(e);
      }
    }
    std::erase_if(out, [](const SdpEntry& e) { return e.value == 0.0; });
    entries = std::move(out);
  }

  std::vector<int> block_sizes_;
  std::vector<std::vector<SdpEntry>> constraints_;
  std::vector<SdpEntry> cost_;
  Eigen::VectorXd rhs_;
  Eigen::MatrixXd free_coeffs_;
  Eigen::VectorXd free_cost_;
  ObjectiveSense sense_ = ObjectiveSense::minimize;
};

enum class SdpStatus { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::unbounded: return "unbounded";
    case SdpStatus::numerical_failure: return "numerical-failure";
  }
  return "unknown";
}

struct SdpIterate {
  int iteration = 0;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double complementarity = 0;  // <X, S> / tau^2, nonnegative at every iterate
  double tau = 0;
  double kappa = 0;
};

/// For status optimal: X, S, y, x_free solve the problem. For infeasible:
/// (y, S) is a normalized Farkas certificate with rhs . y = 1,
/// sum_i y_i A_i + S = 0, F^T y = 0. For unbounded: (X, x_free) is an
/// improving ray with objective -1.
struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  std::vector<Eigen::MatrixXd> primal;
  std::vector<Eigen::MatrixXd> dual_slack;
  Eigen::VectorXd dual;
  Eigen::VectorXd free_values;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double duality_gap = 0;
  int iterations = 0;
  std::vector<SdpIterate> history;
};

struct SdpOptions {
  double tol = 1e-8;
  int max_iters = 100;
  /// Scale of the identity start X = S = scale * I. Zero picks
  /// 10 * max |input coefficient|, floored at 1.
  double initial_scale = 0.0;
  /// tau / kappa below this marks the problem infeasible or unbounded.
  double tau_kappa_threshold = 1e-8;
  double step_fraction = 0.99;
};

// ===========================================================================
// Interior-point solver on the homogeneous self-dual embedding
//
//   A(X) + F x - rhs tau = 0
//   A*(y) + S - C tau   = 0
//   F^T y - c tau       = 0
//   rhs.y - <C,X> - c.x - kappa = 0,     X, S PSD, tau, kappa >= 0,
//
// Mehrotra predictor-corrector steps with Nesterov-Todd scaling.
// ===========================================================================

namespace detail {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct BlockData {
  int size = 0;
  std::vector<int> touching;             // constraints with entries in this block
  std::vector<Mat> dense;                // dense A_ib for each touching constraint
  std::vector<std::vector<SdpEntry>> sparse;
  Mat cost;
};

inline double inner(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

inline double sparse_inner(const std::vector<SdpEntry>& entries, const Mat& p) {
  double s = 0.0;
  for (const auto& e : entries) s += e.row == e.col ? e.value * p(e.row, e.col) : 2.0 * e.value * p(e.row, e.col);
  return s;
}

struct Scaling {
  Mat r;       // X = r diag(lambda) r^T,  S = r^{-T} diag(lambda) r^{-1}
  Mat r_inv;
  Mat w;       // r r^T, satisfies W S W = X
  Vec lambda;
};

inline bool nt_scaling(const Mat& x, const Mat& s, Scaling& out) {
  Eigen::LLT<Mat> lx(x), ls(s);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const Mat lxm = lx.matrixL();
  const Mat lsm = ls.matrixL();
  Eigen::JacobiSVD<Mat> svd(lsm.transpose() * lxm, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if (!(out.lambda.array() > 0).all()) return false;
  const Vec isq = out.lambda.array().sqrt().inverse();
  out.r = lxm * svd.matrixV() * isq.asDiagonal();
  // r^{-1} = diag(sqrt(lambda)) V^T lx^{-1} = diag(1/sqrt(lambda)) U^T ls^T
  out.r_inv = isq.asDiagonal() * svd.matrixU().transpose() * lsm.transpose();
  out.w = out.r * out.r.transpose();
  return out.lambda.allFinite() && out.r.allFinite();
}

/// Largest alpha in [0, inf) with diag(lambda) + alpha * d PSD (d symmetric).
inline double max_step(const Vec& lambda, const Mat& d) {
  const Vec isq = lambda.array().sqrt().inverse();
  const Mat scaled = isq.asDiagonal() * d * isq.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (scaled + scaled.transpose()), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  return lo >= 0 ? std::numeric_limits<double>::infinity() : -1.0 / lo;
}

}  // namespace detail

inline SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts = {}) {
  using detail::Mat;
  using detail::Vec;
  if (!(opts.tol > 0 && opts.tol <= 1e-2)) throw std::invalid_argument("sdp solve: tol must be in (0, 1e-2]");
  const int m = prob.num_constraints();
  const int nf = prob.num_free();
  const int nb = prob.num_blocks();
  const double sense = prob.sense() == ObjectiveSense::maximize ? -1.0 : 1.0;

  // Dense block views of the data.
  std::vector<detail::BlockData> blocks(static_cast<std::size_t>(nb));
  double max_coef = 0.0;
  for (int b = 0; b < nb; ++b) {
    auto& bd = blocks[static_cast<std::size_t>(b)];
    bd.size = prob.block_sizes()[static_cast<std::size_t>(b)];
    bd.cost = Mat::Zero(bd.size, bd.size);
  }
  for (const auto& e : prob.cost()) {
    auto& c = blocks[static_cast<std::size_t>(e.block)].cost;
    c(e.row, e.col) += sense * e.value;
    if (e.row != e.col) c(e.col, e.row) += sense * e.value;
    max_coef = std::max(max_coef, std::abs(e.value));
  }
  for (int i = 0; i < m; ++i) {
    std::map<int, std::vector<SdpEntry>> by_block;
    for (const auto& e : prob.constraint(i)) {
      by_block[e.block].push_back(e);
      max_coef = std::max(max_coef, std::abs(e.value));
    }
    for (auto& [b, entries] : by_block) {
      auto& bd = blocks[static_cast<std::size_t>(b)];
      Mat a = Mat::Zero(bd.size, bd.size);
      for (const auto& e : entries) {
        a(e.row, e.col) += e.value;
        if (e.row != e.col) a(e.col, e.row) += e.value;
      }
      bd.touching.push_back(i);
      bd.dense.push_back(std::move(a));
      bd.sparse.push_back(std::move(entries));
    }
  }
  const Vec& rhs = prob.rhs();
  const Mat& fmat = prob.free_coeffs();
  const Vec cfree = sense * prob.free_cost();
  max_coef = std::max({max_coef, rhs.cwiseAbs().maxCoeff(), fmat.size() ? fmat.cwiseAbs().maxCoeff() : 0.0,
                       cfree.size() ? cfree.cwiseAbs().maxCoeff() : 0.0});

  double norm_c2 = cfree.squaredNorm();
  for (const auto& bd : blocks) norm_c2 += bd.cost.squaredNorm();
  const double norm_c = std::sqrt(norm_c2);
  const double norm_b = rhs.norm();

  auto apply_a = [&](const std::vector<Mat>& x) {
    Vec out = Vec::Zero(m);
    for (int b = 0; b < nb; ++b) {
      const auto& bd = blocks[static_cast<std::size_t>(b)];
      for (std::size_t k = 0; k < bd.touching.size(); ++k)
        out(bd.touching[k]) += detail::sparse_inner(bd.sparse[k], x[static_cast<std::size_t>(b)]);
    }
    return out;
  };
  auto apply_at = [&](const Vec& y) {
    std::vector<Mat> out;
    for (const auto& bd : blocks) {
      Mat acc = Mat::Zero(bd.size, bd.size);
      for (std::size_t k = 0; k < bd.touching.size(); ++k) acc += y(bd.touching[k]) * bd.dense[k];
      out.push_back(std::move(acc));
    }
    return out;
  };

  // Starting point.
  double nu = 0;
  for (const auto& bd : blocks) nu += bd.size;
  const double scale = opts.initial_scale > 0 ? opts.initial_scale : std::max(1.0, 10.0 * max_coef);
  std::vector<Mat> x, s;
  for (const auto& bd : blocks) {
    x.push_back(scale * Mat::Identity(bd.size, bd.size));
    s.push_back(scale * Mat::Identity(bd.size, bd.size));
  }
  Vec y = Vec::Zero(m);
  Vec xf = Vec::Zero(nf);
  double tau = 1.0;
  double kappa = 1.0;

  SdpSolution sol;
  auto finish = [&](SdpStatus status, int iters) {
    sol.status = status;
    sol.iterations = iters;
    const double t = status == SdpStatus::optimal || status == SdpStatus::numerical_failure ? tau : 1.0;
    double pscale = 1.0 / t;
    double dscale = 1.0 / t;
    if (status == SdpStatus::infeasible) {
      dscale = 1.0 / rhs.dot(y);
      pscale = 0.0;
    } else if (status == SdpStatus::unbounded) {
      double cx = cfree.dot(xf);
      for (int b = 0; b < nb; ++b) cx += detail::inner(blocks[static_cast<std::size_t>(b)].cost, x[static_cast<std::size_t>(b)]);
      pscale = -1.0 / cx;
      dscale = 0.0;
    }
    sol.primal.clear();
    sol.dual_slack.clear();
    for (int b = 0; b < nb; ++b) {
      sol.primal.push_back(pscale * x[static_cast<std::size_t>(b)]);
      sol.dual_slack.push_back(dscale * s[static_cast<std::size_t>(b)]);
    }
    sol.dual = dscale * y;
    sol.free_values = pscale * xf;
    return sol;
  };

  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    // Residuals of the embedding.
    const Vec ax = apply_a(x);
    const Vec r1 = ax + fmat * xf - rhs * tau;
    const std::vector<Mat> aty = apply_at(y);
    std::vector<Mat> r2(static_cast<std::size_t>(nb));
    double cx = cfree.dot(xf);
    double xs = 0.0;
    double r2norm2 = 0.0;
    double aty_s_norm2 = 0.0;
    for (int b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      r2[ub] = aty[ub] + s[ub] - blocks[ub].cost * tau;
      r2norm2 += r2[ub].squaredNorm();
      aty_s_norm2 += (aty[ub] + s[ub]).squaredNorm();
      cx += detail::inner(blocks[ub].cost, x[ub]);
      xs += detail::inner(x[ub], s[ub]);
    }
    const Vec r3 = fmat.transpose() * y - cfree * tau;
    const double by = rhs.dot(y);
    const double r4 = by - cx - kappa;
    const double mu = (xs + tau * kappa) / (nu + 1.0);

    const double pcost = cx / tau;
    const double dcost = by / tau;
    const double pres = r1.norm() / tau / std::max(1.0, norm_b);
    const double dres = std::sqrt(r2norm2 + r3.squaredNorm()) / tau / std::max(1.0, norm_c);
    const double gap = xs / (tau * tau);
    sol.history.push_back({iter, sense * pcost, sense * dcost, pres, dres, gap, tau, kappa});
    sol.primal_objective = sense * pcost;
    sol.dual_objective = sense * dcost;
    sol.primal_residual = pres;
    sol.dual_residual = dres;
    sol.duality_gap = gap;

    if (pres <= opts.tol && dres <= opts.tol &&
        std::max(gap, std::abs(pcost - dcost)) <= opts.tol * (1.0 + std::abs(pcost) + std::abs(dcost))) {
      return finish(SdpStatus::optimal, iter);
    }
    // Farkas certificates: rhs.y > 0 with A*(y) + S = 0, F^T y = 0 proves
    // primal infeasibility; <C,X> + c.x < 0 with A(X) + F x = 0 proves unboundedness.
    if (by > 0) {
      const double pinf = std::sqrt(aty_s_norm2 + (fmat.transpose() * y).squaredNorm()) / std::max(1.0, norm_c) / by;
      if (pinf <= opts.tol || (tau / kappa < opts.tau_kappa_threshold && by >= -cx)) {
        return finish(SdpStatus::infeasible, iter);
      }
    }
    if (cx < 0) {
      const double dinf = (ax + fmat * xf).norm() / std::max(1.0, norm_b) / (-cx);
      if (dinf <= opts.tol || (tau / kappa < opts.tau_kappa_threshold && -cx > by)) {
        return finish(SdpStatus::unbounded, iter);
      }
    }
    if (iter == opts.max_iters) break;

    // Scaling.
    std::vector<detail::Scaling> sc(static_cast<std::size_t>(nb));
    bool ok = true;
    for (int b = 0; b < nb && ok; ++b) ok = detail::nt_scaling(x[static_cast<std::size_t>(b)], s[static_cast<std::size_t>(b)], sc[static_cast<std::size_t>(b)]);
    if (!ok) return finish(SdpStatus::numerical_failure, iter);

    // Reduced Newton system in (dy, dx_free, dtau).
    const int dim = m + nf + 1;
    Mat kkt = Mat::Zero(dim, dim);
    Vec a_wcw = Vec::Zero(m);
    double c_wcw = 0.0;
    std::vector<Mat> wcw(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      const auto& bd = blocks[ub];
      const Mat& w = sc[ub].w;
      wcw[ub] = w * bd.cost * w;
      c_wcw += detail::inner(bd.cost, wcw[ub]);
      for (std::size_t kj = 0; kj < bd.touching.size(); ++kj) {
        const Mat p = w * bd.dense[kj] * w;
        const int j = bd.touching[kj];
        for (std::size_t ki = 0; ki <= kj; ++ki) {
          const int i = bd.touching[ki];
          const double v = detail::sparse_inner(bd.sparse[ki], p);
          kkt(i, j) += v;
          if (i != j) kkt(j, i) += v;
        }
        a_wcw(j) += detail::sparse_inner(bd.sparse[kj], wcw[ub]);
      }
    }
    kkt.block(0, m, m, nf) = fmat;
    kkt.block(0, m + nf, m, 1) = -(a_wcw + rhs);
    kkt.block(m, 0, nf, m) = fmat.transpose();
    kkt.block(m, m + nf, nf, 1) = -cfree;
    kkt.block(m + nf, 0, 1, m) = (rhs - a_wcw).transpose();
    kkt.block(m + nf, m, 1, nf) = -cfree.transpose();
    kkt(m + nf, m + nf) = c_wcw + kappa / tau;
    const Eigen::PartialPivLU<Mat> lu(kkt);

    struct Direction {
      std::vector<Mat> dx, ds, dx_scaled, ds_scaled;
      Vec dy, dxf;
      double dtau = 0, dkappa = 0;
    };
    // eta: fraction of the linear residuals removed; g_scaled: scaled
    // complementarity target (dX~ + dS~); rc_tau: target for tau dkappa + kappa dtau.
    auto direction = [&](double eta, const std::vector<Mat>& g_scaled, double rc_tau) {
      Direction d;
      Vec rhs_vec(dim);
      Vec top = -eta * r1;
      double last = -eta * r4 + rc_tau / tau;
      std::vector<Mat> base(static_cast<std::size_t>(nb));  // r G r^T + eta W R2 W
      for (int b = 0; b < nb; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        const auto& scb = sc[ub];
        base[ub] = scb.r * g_scaled[ub] * scb.r.transpose() + eta * (scb.w * r2[ub] * scb.w);
        last += detail::inner(blocks[ub].cost, base[ub]);
      }
      top -= apply_a(base);
      rhs_vec.head(m) = top;
      rhs_vec.segment(m, nf) = -eta * r3;
      rhs_vec(m + nf) = last;
      const Vec sol_vec = lu.solve(rhs_vec);
      d.dy = sol_vec.head(m);
      d.dxf = sol_vec.segment(m, nf);
      d.dtau = sol_vec(m + nf);
      d.dkappa = (rc_tau - kappa * d.dtau) / tau;
      const std::vector<Mat> atdy = apply_at(d.dy);
      for (int b = 0; b < nb; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        const auto& scb = sc[ub];
        Mat ds = -eta * r2[ub] - atdy[ub] + blocks[ub].cost * d.dtau;
        Mat dx = base[ub] + scb.w * (atdy[ub] - blocks[ub].cost * d.dtau) * scb.w;
        ds = 0.5 * (ds + ds.transpose());
        dx = 0.5 * (dx + dx.transpose());
        d.ds_scaled.push_back(scb.r.transpose() * ds * scb.r);
        d.dx_scaled.push_back(scb.r_inv * dx * scb.r_inv.transpose());
        d.ds.push_back(std::move(ds));
        d.dx.push_back(std::move(dx));
      }
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double alpha = std::numeric_limits<double>::infinity();
      for (int b = 0; b < nb; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        alpha = std::min({alpha, detail::max_step(sc[ub].lambda, d.dx_scaled[ub]),
                          detail::max_step(sc[ub].lambda, d.ds_scaled[ub])});
      }
      if (d.dtau < 0) alpha = std::min(alpha, -tau / d.dtau);
      if (d.dkappa < 0) alpha = std::min(alpha, -kappa / d.dkappa);
      return alpha;
    };

    // Predictor.
    std::vector<Mat> g_aff(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) g_aff[static_cast<std::size_t>(b)] = -Mat(sc[static_cast<std::size_t>(b)].lambda.asDiagonal());
    const Direction aff = direction(1.0, g_aff, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(1.0 - alpha_aff, 3);

    // Corrector with second-order term.
    std::vector<Mat> g_cc(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      const Vec& lam = sc[ub].lambda;
      const Mat prod = aff.dx_scaled[ub] * aff.ds_scaled[ub];
      Mat target = -0.5 * (prod + prod.transpose());
      target.diagonal().array() += sigma * mu - lam.array().square();
      Mat g(lam.size(), lam.size());
      for (Eigen::Index i = 0; i < lam.size(); ++i)
        for (Eigen::Index j = 0; j < lam.size(); ++j) g(i, j) = 2.0 * target(i, j) / (lam(i) + lam(j));
      g_cc[ub] = std::move(g);
    }
    const Direction dir = direction(1.0 - sigma, g_cc, sigma * mu - tau * kappa - aff.dtau * aff.dkappa);
    const double alpha = std::min(1.0, opts.step_fraction * step_length(dir));
    if (!(alpha > 0) || !std::isfinite(alpha) || !dir.dy.allFinite()) return finish(SdpStatus::numerical_failure, iter);

    for (int b = 0; b < nb; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      x[ub] += alpha * dir.dx[ub];
      s[ub] += alpha * dir.ds[ub];
    }
    y += alpha * dir.dy;
    xf += alpha * dir.dxf;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }
  return finish(SdpStatus::numerical_failure, opts.max_iters);
}

// ===========================================================================
// SDPA sparse format (.dat-s)
//
// SDPA's primal-dual pair is  min c.x s.t. sum F_i x_i - F_0 PSD  /
// max F_0 . Y s.t. F_i . Y = c_i, Y PSD. Our problem is the second form with
// F_0 = -C (minimize) or C (maximize), F_i = A_i, c = rhs. Free variables are
// written as x = x+ - x- in one trailing diagonal block of size 2 * num_free;
// a comment line `* free <k>` marks it so the file reads back exactly.
// ===========================================================================

inline std::string sdpa_string(SdpProblem prob) {
  prob.canonicalize();
  std::ostringstream out;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  const int nf = prob.num_free();
  const bool maximize = prob.sense() == ObjectiveSense::maximize;
  if (maximize) out << "* sense maximize\n";
  if (nf > 0) out << "* free " << nf << "\n";
  out << prob.num_constraints() << "\n" << prob.num_blocks() + (nf > 0 ? 1 : 0) << "\n";
  for (std::size_t b = 0; b < prob.block_sizes().size(); ++b) out << (b ? " " : "") << prob.block_sizes()[b];
  if (nf > 0) out << " " << -2 * nf;
  out << "\n";
  for (int i = 0; i < prob.num_constraints(); ++i) out << (i ? " " : "") << num(prob.rhs()(i));
  out << "\n";
  const double f0_sign = maximize ? 1.0 : -1.0;
  const int free_block = prob.num_blocks() + 1;
  for (const auto& e : prob.cost()) {
    out << "0 " << e.block + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << num(f0_sign * e.value) << "\n";
  }
  for (int k = 0; k < nf; ++k) {
    const double c = prob.free_cost()(k);
    if (c == 0.0) continue;
    out << "0 " << free_block << " " << k + 1 << " " << k + 1 << " " << num(f0_sign * c) << "\n";
    out << "0 " << free_block << " " << nf + k + 1 << " " << nf + k + 1 << " " << num(-f0_sign * c) << "\n";
  }
  for (int i = 0; i < prob.num_constraints(); ++i) {
    for (const auto& e : prob.constraint(i)) {
      out << i + 1 << " " << e.block + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << num(e.value) << "\n";
    }
    for (int k = 0; k < nf; ++k) {
      const double f = prob.free_coeffs()(i, k);
      if (f == 0.0) continue;
      out << i + 1 << " " << free_block << " " << k + 1 << " " << k + 1 << " " << num(f) << "\n";
      out << i + 1 << " " << free_block << " " << nf + k + 1 << " " << nf + k + 1 << " " << num(-f) << "\n";
    }
  }
  return out.str();
}

inline void export_sdpa(const SdpProblem& prob, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_sdpa: cannot open " + path);
  out << sdpa_string(prob);
  if (!out) throw std::runtime_error("export_sdpa: write failed for " + path);
}

inline SdpProblem parse_sdpa(std::istream& in) {
  std::string line;
  int nf = 0;
  bool maximize = false;
  std::vector<std::string> data_lines;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '*' || line[0] == '"') {
      std::istringstream c(line.substr(1));
      std::string key;
      c >> key;
      if (key == "free") c >> nf;
      if (key == "sense") {
        std::string v;
        c >> v;
        maximize = v == "maximize";
      }
      continue;
    }
    for (char& ch : line)
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    data_lines.push_back(line);
  }
  if (data_lines.size() < 4) throw ParseError("sdpa: expected counts, block structure and rhs lines");
  const int m = std::stoi(data_lines[0]);
  const int nblocks = std::stoi(data_lines[1]);
  std::vector<int> sizes;
  {
    std::istringstream bs(data_lines[2]);
    int v;
    while (bs >> v) sizes.push_back(v);
  }
  if (static_cast<int>(sizes.size()) != nblocks) throw ParseError("sdpa: block structure does not match block count");
  if (nf > 0) {
    if (sizes.back() != -2 * nf) throw ParseError("sdpa: free-variable block missing");
    sizes.pop_back();
  }
  for (int& s : sizes) s = std::abs(s);
  SdpProblem prob(sizes, m, nf);
  prob.set_sense(maximize ? ObjectiveSense::maximize : ObjectiveSense::minimize);
  {
    std::istringstream rs(data_lines[3]);
    for (int i = 0; i < m; ++i) {
      double v;
      if (!(rs >> v)) throw ParseError("sdpa: rhs line too short");
      prob.set_rhs(i, v);
    }
  }
  const double f0_sign = maximize ? 1.0 : -1.0;
  const int free_block = static_cast<int>(sizes.size()) + 1;
  for (std::size_t l = 4; l < data_lines.size(); ++l) {
    std::istringstream es(data_lines[l]);
    int mat, blk, r, c;
    double v;
    if (!(es >> mat >> blk >> r >> c >> v)) throw ParseError("sdpa: malformed entry on data line " + std::to_string(l + 1));
    if (nf > 0 && blk == free_block) {
      if (r > nf) continue;  // the x- half mirrors the x+ half
      if (mat == 0) {
        prob.set_free_cost(r - 1, f0_sign * v);
      } else {
        prob.set_free_coeff(mat - 1, r - 1, v);
      }
      continue;
    }
    if (mat == 0) {
      prob.add_cost_entry(blk - 1, r - 1, c - 1, f0_sign * v);
    } else {
      prob.add_constraint_entry(mat - 1, blk - 1, r - 1, c - 1, v);
    }
  }
  prob.canonicalize();
  return prob;
}

inline SdpProblem import_sdpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("import_sdpa: cannot open " + path);
  return parse_sdpa(in);
}

}  // namespace ddbc
