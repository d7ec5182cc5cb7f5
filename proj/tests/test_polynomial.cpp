#include <cmath>

#include <gtest/gtest.h>

#include "ddbc/kernels.hpp"
#include "ddbc/polynomial.hpp"
#include "ddbc/rng.hpp"

namespace ddbc {
namespace {

Polynomial random_polynomial(int n, int degree, RandomStream& rng) {
  Polynomial p(n);
  for (const auto& e : monomial_basis(n, degree)) p.add_term(e, 2.0 * rng.uniform() - 1.0);
  return p;
}

Vector random_point(int n, RandomStream& rng) {
  Vector x(n);
  for (int k = 0; k < n; ++k) x(k) = 2.0 * rng.uniform() - 1.0;
  return x;
}

TEST(Polynomial, MultiplyByOneIsIdentity) {
  RandomStream rng(1);
  const Polynomial p = random_polynomial(3, 3, rng);
  EXPECT_EQ(p * Polynomial::constant(3, 1.0), p);
}

TEST(Polynomial, SquareOfBinomial) {
  const Polynomial x = Polynomial::variable(1, 0);
  const Polynomial sq = pow(x + Polynomial::constant(1, 1.0), 2);
  EXPECT_EQ(sq.size(), 3U);
  EXPECT_DOUBLE_EQ(sq.coeff({2}), 1.0);
  EXPECT_DOUBLE_EQ(sq.coeff({1}), 2.0);
  EXPECT_DOUBLE_EQ(sq.coeff({0}), 1.0);
}

TEST(Polynomial, ProductMatchesPointwiseProduct) {
  RandomStream rng(2);
  const Polynomial p = random_polynomial(3, 3, rng);
  const Polynomial q = random_polynomial(3, 3, rng);
  const Polynomial pq = p * q;
  for (int t = 0; t < 50; ++t) {
    const Vector x = random_point(3, rng);
    const double expected = p.evaluate(x) * q.evaluate(x);
    EXPECT_NEAR(pq.evaluate(x), expected, 1e-10 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Polynomial, RingAxiomsPointwise) {
  RandomStream rng(3);
  const Polynomial p = random_polynomial(2, 2, rng);
  const Polynomial q = random_polynomial(2, 3, rng);
  const Polynomial r = random_polynomial(2, 2, rng);
  const Polynomial assoc = (p * q) * r - p * (q * r);
  const Polynomial distrib = p * (q + r) - (p * q + p * r);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_point(2, rng);
    EXPECT_NEAR(assoc.evaluate(x), 0.0, 1e-10);
    EXPECT_NEAR(distrib.evaluate(x), 0.0, 1e-10);
  }
}

TEST(Polynomial, CanonicalFormCancelsExactly) {
  RandomStream rng(4);
  const Polynomial p = random_polynomial(3, 2, rng);
  EXPECT_TRUE((p + p * -1.0).is_zero());
}

TEST(Polynomial, TinyCoefficientsPruned) {
  Polynomial p(1);
  p.add_term({1}, 1e-15);
  EXPECT_TRUE(p.is_zero());
}

TEST(Polynomial, DimensionMismatchThrows) {
  EXPECT_THROW(Polynomial::variable(2, 0) + Polynomial::variable(3, 0), DimensionError);
  EXPECT_THROW(Polynomial::variable(2, 0).evaluate({1.0, 2.0, 3.0}), DimensionError);
}

TEST(Polynomial, EvaluateConstant) { EXPECT_DOUBLE_EQ(Polynomial::constant(3, 4.25).evaluate({1.0, -2.0, 0.5}), 4.25); }

TEST(Polynomial, EvaluateReferenceLaneKeepingBarrier) {
  Polynomial b(3);
  b.add_term({2, 0, 0}, -1.425e-4);
  b.add_term({1, 0, 0}, -0.048);
  b.add_term({0, 0, 0}, 0.562);
  EXPECT_NEAR(b.evaluate({1.5, 0.0, 0.0}), 0.48968, 1e-5);
}

TEST(Polynomial, EvaluateCubeOfBinomial) {
  const Polynomial cube = pow(Polynomial::variable(1, 0) + Polynomial::constant(1, 1.0), 3);
  EXPECT_DOUBLE_EQ(cube.evaluate({2.0}), 27.0);
  EXPECT_EQ(cube.degree(), 3);
}

TEST(Polynomial, EvaluateRowsMatchesEvaluate) {
  RandomStream rng(5);
  const Polynomial p = random_polynomial(3, 4, rng);
  Matrix pts(10, 3);
  for (int i = 0; i < 10; ++i) pts.row(i) = random_point(3, rng).transpose();
  const Vector v = p.evaluate_rows(pts);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(v(i), p.evaluate(pts.row(i)), 1e-13);
}

TEST(Polynomial, TextRoundTripIsExact) {
  RandomStream rng(6);
  const Polynomial p = random_polynomial(3, 3, rng);
  EXPECT_EQ(parse_polynomial(to_string(p), 3), p);
  EXPECT_EQ(parse_polynomial(to_string(Polynomial(2)), 2), Polynomial(2));
}

TEST(Polynomial, MalformedTextRejected) { EXPECT_THROW(parse_polynomial("1.0*x1^2 + oops", 2), ParseError); }

TEST(Polynomial, AffineSubstitutionComposes) {
  RandomStream rng(7);
  const Polynomial p = random_polynomial(2, 3, rng);
  const Vector offset = Eigen::Vector2d(0.5, -1.0);
  const Vector scale = Eigen::Vector2d(2.0, 0.25);
  const Polynomial q = substitute_affine(p, offset, scale);
  for (int t = 0; t < 20; ++t) {
    const Vector u = random_point(2, rng);
    const Vector x = offset + scale.cwiseProduct(u);
    EXPECT_NEAR(q.evaluate(u), p.evaluate(x), 1e-11);
  }
}

TEST(MonomialBasis, GradedLexWithConstantFirst) {
  const auto basis = monomial_basis(2, 2);
  const std::vector<Exponent> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  EXPECT_EQ(basis, expected);
  const auto big = monomial_basis(3, 4);
  EXPECT_EQ(big.size(), 35U);
  for (std::size_t i = 0; i + 1 < big.size(); ++i) EXPECT_TRUE(GrlexLess{}(big[i], big[i + 1]));
}

TEST(MonomialBasis, CoefficientVectorRoundTrip) {
  const auto basis = monomial_basis(3, 2);
  const Vector coeffs = Vector::LinSpaced(static_cast<Eigen::Index>(basis.size()), 1.0, 10.0);
  const Polynomial p = from_coefficients(basis, coeffs);
  EXPECT_EQ(to_coefficients(p, MonomialIndex(basis)), coeffs);
}

TEST(KernelSection, DegreeOneIsAffine) {
  const Vector anchor = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Polynomial p = expand_poly_kernel_section(anchor, 0.3, 0.7, 1);
  EXPECT_EQ(p.degree(), 1);
  EXPECT_DOUBLE_EQ(p.coeff({0, 0, 0}), 0.7);
  EXPECT_DOUBLE_EQ(p.coeff({1, 0, 0}), 0.3);
  EXPECT_DOUBLE_EQ(p.coeff({0, 1, 0}), -0.6);
  EXPECT_DOUBLE_EQ(p.coeff({0, 0, 1}), 0.15);
}

TEST(KernelSection, HandExpandedSquare) {
  const Polynomial p = expand_poly_kernel_section(Eigen::Vector2d(1, 1), 1.0, 0.0, 2);
  Polynomial expected(2);
  expected.add_term({2, 0}, 1.0);
  expected.add_term({1, 1}, 2.0);
  expected.add_term({0, 2}, 1.0);
  EXPECT_EQ(p, expected);
}

TEST(KernelSection, MatchesKernelEvaluation) {
  RandomStream rng(8);
  const Vector anchor = random_point(3, rng);
  const KernelSpec k = PolynomialKernel{0.005, 0.11, 2};
  const Polynomial p = expand_poly_kernel_section(anchor, 0.005, 0.11, 2);
  for (int t = 0; t < 20; ++t) {
    const Vector x = 5.0 * random_point(3, rng);
    EXPECT_NEAR(p.evaluate(x), eval_kernel(k, x, anchor), 1e-10);
  }
}

TEST(BoxSet, UnitIntervalInequality) {
  const SemiAlgebraicSet s = box_to_semialgebraic(StateBox({0.0}, {1.0}));
  ASSERT_EQ(s.inequalities.size(), 1U);
  Polynomial expected(1);
  expected.add_term({2}, -1.0);
  expected.add_term({1}, 1.0);
  EXPECT_EQ(s.inequalities[0], expected);
}

TEST(BoxSet, LaneKeepingInitialSet) {
  const StateBox x0({1.0, -0.5, -0.005}, {2.0, 0.5, 0.005});
  const SemiAlgebraicSet s = box_to_semialgebraic(x0);
  ASSERT_EQ(s.inequalities.size(), 3U);
  for (const auto& g : s.inequalities) EXPECT_GT(g.evaluate({1.5, 0.0, 0.0}), 0.0);
  EXPECT_TRUE(s.contains(x0.center()));
}

TEST(BoxSet, GridInsideAndFacesOutside) {
  const StateBox box({1.0, -7.0, -0.05}, {10.0, 7.0, 0.05});
  const SemiAlgebraicSet s = box_to_semialgebraic(box);
  const Matrix grid = box.grid(6);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) EXPECT_TRUE(s.contains(grid.row(i), 1e-12));
  for (int k = 0; k < 3; ++k) {
    const double width = box.upper(k) - box.lower(k);
    Vector below = box.center();
    below(k) = box.lower(k) - 0.01 * width;
    Vector above = box.center();
    above(k) = box.upper(k) + 0.01 * width;
    EXPECT_LT(s.inequalities[static_cast<std::size_t>(k)].evaluate(below), 0.0);
    EXPECT_LT(s.inequalities[static_cast<std::size_t>(k)].evaluate(above), 0.0);
  }
}

TEST(BoxSet, InvalidBoxRejected) { EXPECT_THROW(StateBox({1.0}, {1.0}), std::invalid_argument); }

}  // namespace
}  // namespace ddbc
