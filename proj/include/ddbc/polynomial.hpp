#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ddbc/box.hpp"
#include "ddbc/errors.hpp"

namespace ddbc {

using Exponent = std::vector<int>;

inline int total_degree(const Exponent& e) { return std::accumulate(e.begin(), e.end(), 0); }

/// Graded lexicographic order: lower total degree first, ties broken so that
/// x1 dominates x2 dominates x3 (x1^2 < x1 x2 < x2^2 in iteration order).
struct GrlexLess {
  bool operator()(const Exponent& a, const Exponent& b) const {
    const int da = total_degree(a);
    const int db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
  }
};

/// Coefficients smaller than this in magnitude are dropped after arithmetic.
inline constexpr double kPruneThreshold = 1e-14;

/// Sparse multivariate polynomial over the reals in canonical form
/// (no stored zero coefficients, terms iterated in graded-lex order).
class Polynomial {
 public:
  using TermMap = std::map<Exponent, double, GrlexLess>;

  explicit Polynomial(int num_vars = 0) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double c) {
    Polynomial p(num_vars);
    p.add_term(Exponent(static_cast<std::size_t>(num_vars), 0), c);
    return p;
  }

  /// The coordinate function x_{index} (0-based).
  static Polynomial variable(int num_vars, int index) {
    Exponent e(static_cast<std::size_t>(num_vars), 0);
    e.at(static_cast<std::size_t>(index)) = 1;
    Polynomial p(num_vars);
    p.add_term(e, 1.0);
    return p;
  }

  static Polynomial monomial(const Exponent& e, double c = 1.0) {
    Polynomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
  }

  [[nodiscard]] int num_vars() const { return num_vars_; }
  [[nodiscard]] const TermMap& terms() const { return terms_; }
  [[nodiscard]] bool is_zero() const { return terms_.empty(); }
  [[nodiscard]] std::size_t size() const { return terms_.size(); }

  [[nodiscard]] int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  [[nodiscard]] double coeff(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
  }

  [[nodiscard]] double max_abs_coeff() const {
    double m = 0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Accumulates c into the coefficient of x^e.
  void add_term(const Exponent& e, double c) {
    require_same_dim(static_cast<long>(e.size()), num_vars_, "Polynomial::add_term");
    if (c == 0.0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) it->second += c;
    if (std::abs(it->second) < kPruneThreshold) terms_.erase(it);
  }

  Polynomial& operator+=(const Polynomial& q) {
    require_same_dim(num_vars_, q.num_vars_, "Polynomial::+");
    for (const auto& [e, c] : q.terms_) add_term(e, c);
    return *this;
  }

  Polynomial& operator-=(const Polynomial& q) {
    require_same_dim(num_vars_, q.num_vars_, "Polynomial::-");
    for (const auto& [e, c] : q.terms_) add_term(e, -c);
    return *this;
  }

  Polynomial& operator*=(double s) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      it = std::abs(it->second) < kPruneThreshold ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator*(Polynomial p, double s) { return p *= s; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }
  friend Polynomial operator-(Polynomial p) { return p *= -1.0; }

  friend Polynomial operator*(const Polynomial& p, const Polynomial& q) {
    require_same_dim(p.num_vars_, q.num_vars_, "Polynomial::*");
    // Accumulate unpruned, then canonicalize once.
    TermMap acc;
    Exponent e(static_cast<std::size_t>(p.num_vars_));
    for (const auto& [ep, cp] : p.terms_) {
      for (const auto& [eq, cq] : q.terms_) {
        for (std::size_t k = 0; k < e.size(); ++k) e[k] = ep[k] + eq[k];
        acc[e] += cp * cq;
      }
    }
    Polynomial out(p.num_vars_);
    for (auto& [ex, c] : acc) {
      if (std::abs(c) >= kPruneThreshold) out.terms_.emplace_hint(out.terms_.end(), ex, c);
    }
    return out;
  }

  friend bool operator==(const Polynomial& p, const Polynomial& q) {
    return p.num_vars_ == q.num_vars_ && p.terms_ == q.terms_;
  }

  /// Direct monomial evaluation with Neumaier-compensated summation.
  template <class Derived>
  [[nodiscard]] double evaluate(const Eigen::MatrixBase<Derived>& x) const {
    require_same_dim(x.size(), num_vars_, "Polynomial::evaluate");
    double sum = 0.0;
    double comp = 0.0;
    for (const auto& [e, c] : terms_) {
      double term = c;
      for (int k = 0; k < num_vars_; ++k) {
        for (int r = 0; r < e[static_cast<std::size_t>(k)]; ++r) term *= x(k);
      }
      const double t = sum + term;
      comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    return sum + comp;
  }

  double evaluate(std::initializer_list<double> x) const {
    return evaluate(Eigen::Map<const Eigen::VectorXd>(x.begin(), static_cast<Eigen::Index>(x.size())));
  }

  /// Evaluates at each row of `points`.
  [[nodiscard]] Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& points) const {
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) out(i) = evaluate(points.row(i).transpose());
    return out;
  }

 private:
  int num_vars_;
  TermMap terms_;
};

inline Polynomial pow(const Polynomial& p, int k) {
  Polynomial out = Polynomial::constant(p.num_vars(), 1.0);
  for (int i = 0; i < k; ++i) out = out * p;
  return out;
}

/// All exponents in `num_vars` variables with total degree <= max_degree, graded-lex order.
inline std::vector<Exponent> monomial_basis(int num_vars, int max_degree) {
  std::vector<Exponent> out;
  Exponent e(static_cast<std::size_t>(num_vars), 0);
  // Enumerate by degree, then by descending lex within a degree.
  for (int deg = 0; deg <= max_degree; ++deg) {
    std::vector<Exponent> level;
    std::function<void(int, int)> rec = [&](int k, int remaining) {
      if (k == num_vars - 1) {
        e[static_cast<std::size_t>(k)] = remaining;
        level.push_back(e);
        return;
      }
      for (int v = remaining; v >= 0; --v) {
        e[static_cast<std::size_t>(k)] = v;
        rec(k + 1, remaining - v);
      }
    };
    if (num_vars == 0) {
      if (deg == 0) out.push_back({});
      continue;
    }
    rec(0, deg);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

/// Index lookup for a basis produced by monomial_basis.
class MonomialIndex {
 public:
  explicit MonomialIndex(std::vector<Exponent> basis) : basis_(std::move(basis)) {
    for (std::size_t i = 0; i < basis_.size(); ++i) index_.emplace(basis_[i], static_cast<int>(i));
  }
  [[nodiscard]] const std::vector<Exponent>& basis() const { return basis_; }
  [[nodiscard]] std::size_t size() const { return basis_.size(); }
  /// -1 when the exponent is outside the basis.
  [[nodiscard]] int find(const Exponent& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : it->second;
  }

 private:
  std::vector<Exponent> basis_;
  std::map<Exponent, int, GrlexLess> index_;
};

inline double monomial_value(const Exponent& e, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double v = 1.0;
  for (std::size_t k = 0; k < e.size(); ++k)
    for (int r = 0; r < e[k]; ++r) v *= x(static_cast<Eigen::Index>(k));
  return v;
}

/// Polynomial with coefficient vector `coeffs` over `basis`.
inline Polynomial from_coefficients(const std::vector<Exponent>& basis, const Eigen::VectorXd& coeffs) {
  require_same_dim(static_cast<long>(basis.size()), coeffs.size(), "from_coefficients");
  Polynomial p(basis.empty() ? 0 : static_cast<int>(basis.front().size()));
  for (std::size_t i = 0; i < basis.size(); ++i) p.add_term(basis[i], coeffs(static_cast<Eigen::Index>(i)));
  return p;
}

/// Coefficients of p over `basis`; throws if p has a term outside the basis.
inline Eigen::VectorXd to_coefficients(const Polynomial& p, const MonomialIndex& basis) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  for (const auto& [e, c] : p.terms()) {
    const int i = basis.find(e);
    if (i < 0) throw DimensionError("to_coefficients: polynomial has a term outside the basis");
    out(i) = c;
  }
  return out;
}

/// Substitutes x_k = offset_k + scale_k * u_k and returns the polynomial in u.
inline Polynomial substitute_affine(const Polynomial& p, const Eigen::VectorXd& offset, const Eigen::VectorXd& scale) {
  const int n = p.num_vars();
  require_same_dim(offset.size(), n, "substitute_affine");
  require_same_dim(scale.size(), n, "substitute_affine");
  // Powers of each substituted coordinate, built lazily.
  std::vector<std::vector<Polynomial>> powers(static_cast<std::size_t>(n));
  auto power = [&](int k, int e) -> const Polynomial& {
    auto& list = powers[static_cast<std::size_t>(k)];
    if (list.empty()) list.push_back(Polynomial::constant(n, 1.0));
    while (static_cast<int>(list.size()) <= e) {
      Polynomial lin = Polynomial::constant(n, offset(k)) + scale(k) * Polynomial::variable(n, k);
      list.push_back(list.back() * lin);
    }
    return list[static_cast<std::size_t>(e)];
  };
  Polynomial out(n);
  for (const auto& [e, c] : p.terms()) {
    Polynomial term = Polynomial::constant(n, c);
    for (int k = 0; k < n; ++k) {
      if (e[static_cast<std::size_t>(k)] > 0) term = term * power(k, e[static_cast<std::size_t>(k)]);
    }
    out += term;
  }
  return out;
}

/// Multinomial expansion of (a * <anchor, x> + b)^d as a polynomial in x.
inline Polynomial expand_poly_kernel_section(const Eigen::VectorXd& anchor, double a, double b, int d) {
  const int n = static_cast<int>(anchor.size());
  Polynomial lin = Polynomial::constant(n, b);
  for (int k = 0; k < n; ++k) lin += (a * anchor(k)) * Polynomial::variable(n, k);
  return pow(lin, d);
}

// ---------------------------------------------------------------------------
// Text serialization: `coeff * x1^e1 ... xn^en` terms joined by ` + `.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : p.terms()) {
    if (!first) out += " + ";
    first = false;
    out += format_double(c);
    out += " *";
    for (int k = 0; k < p.num_vars(); ++k) {
      out += " x" + std::to_string(k + 1) + "^" + std::to_string(e[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

inline Polynomial parse_polynomial(const std::string& text, int num_vars) {
  Polynomial p(num_vars);
  std::string trimmed = text;
  trimmed.erase(0, trimmed.find_first_not_of(" \t"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r\n") + 1);
  if (trimmed == "0") return p;
  std::size_t pos = 0;
  while (pos <= trimmed.size()) {
    std::size_t next = trimmed.find(" + ", pos);
    const std::string term = trimmed.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    std::istringstream in(term);
    double c = 0;
    std::string star;
    if (!(in >> c >> star) || star != "*") throw ParseError("polynomial: malformed term '" + term + "'");
    Exponent e(static_cast<std::size_t>(num_vars), 0);
    std::string factor;
    while (in >> factor) {
      const auto caret = factor.find('^');
      if (factor.size() < 2 || factor[0] != 'x' || caret == std::string::npos) {
        throw ParseError("polynomial: malformed factor '" + factor + "'");
      }
      const int var = std::stoi(factor.substr(1, caret - 1));
      const int ex = std::stoi(factor.substr(caret + 1));
      if (var < 1 || var > num_vars || ex < 0) throw ParseError("polynomial: bad factor '" + factor + "'");
      e[static_cast<std::size_t>(var - 1)] += ex;
    }
    p.add_term(e, c);
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  return p;
}

// ---------------------------------------------------------------------------

/// {x : g_k(x) >= 0 for all k}, optionally with a bounding box for sampling.
struct SemiAlgebraicSet {
  int ambient_dim = 0;
  std::vector<Polynomial> inequalities;
  std::optional<StateBox> box_hull;
  bool exact_box = false;  // the inequalities describe exactly box_hull

  template <class Derived>
  [[nodiscard]] bool contains(const Eigen::MatrixBase<Derived>& x, double tol = 0.0) const {
    for (const auto& g : inequalities)
      if (g.evaluate(x) < -tol) return false;
    return true;
  }
};

/// One quadratic inequality (x_i - l_i)(u_i - x_i) >= 0 per dimension.
inline SemiAlgebraicSet box_to_semialgebraic(const StateBox& box) {
  box.validate();
  const int n = box.dim();
  SemiAlgebraicSet set;
  set.ambient_dim = n;
  for (int i = 0; i < n; ++i) {
    const Polynomial xi = Polynomial::variable(n, i);
    set.inequalities.push_back((xi - Polynomial::constant(n, box.lower(i))) *
                               (Polynomial::constant(n, box.upper(i)) - xi));
  }
  set.box_hull = box;
  set.exact_box = true;
  return set;
}

}  // namespace ddbc
