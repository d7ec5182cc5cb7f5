#include <cmath>

#include <gtest/gtest.h>

#include "ddbc/gp_envelope.hpp"

namespace ddbc {
namespace {

const StateBox kLaneBox({1.0, -7.0, -0.05}, {10.0, 7.0, 0.05});
const KernelSpec kLaneKernel = SquaredExponentialKernel{1500.0 * 1500.0, 2.98 * 2.98};

Polynomial lane_barrier() {
  Polynomial b(3);
  b.add_term({2, 0, 0}, -1.425e-4);
  b.add_term({1, 0, 0}, -0.048);
  b.add_term({0, 0, 0}, 0.562);
  b.add_term({0, 2, 0}, 0.1);
  return b;
}

EmpiricalCme lane_cme(Eigen::Index n) {
  return fit_cme(sample_transitions(LaneKeepingParams{}, kLaneBox, n, 4), PolynomialKernel{0.005, 0.11, 2}, 1e-3);
}

TEST(SampleBarrier, SingleGridPointIsCenter) {
  const TrainingSet t = sample_barrier(lane_barrier(), kLaneBox, 1, SamplingScheme::grid);
  ASSERT_EQ(t.points.rows(), 1);
  EXPECT_LT((t.points.row(0).transpose() - kLaneBox.center()).norm(), 1e-15);
}

TEST(SampleBarrier, TargetsAreExactEvaluations) {
  const Polynomial b = lane_barrier();
  for (auto scheme : {SamplingScheme::grid, SamplingScheme::uniform}) {
    const TrainingSet t = sample_barrier(b, kLaneBox, 64, scheme, 3);
    for (Eigen::Index i = 0; i < t.points.rows(); ++i) EXPECT_EQ(t.targets(i), b.evaluate(t.points.row(i)));
  }
}

TEST(SampleBarrier, GridCountWithinRounding) {
  for (long n : {125L, 1000L, 1728L, 2000L}) {
    const TrainingSet t = sample_barrier(lane_barrier(), kLaneBox, n, SamplingScheme::grid);
    const double k = std::cbrt(static_cast<double>(n));
    EXPECT_LE(std::abs(static_cast<double>(t.points.rows()) - n), 3.0 * (k + 0.5) * (k + 0.5)) << n;
    for (Eigen::Index i = 0; i < t.points.rows(); ++i) EXPECT_TRUE(kLaneBox.contains(t.points.row(i), 1e-12));
  }
}

TEST(SampleBarrier, UniformIsSeeded) {
  const TrainingSet a = sample_barrier(lane_barrier(), kLaneBox, 50, SamplingScheme::uniform, 9);
  const TrainingSet b = sample_barrier(lane_barrier(), kLaneBox, 50, SamplingScheme::uniform, 9);
  EXPECT_EQ(a.points, b.points);
}

TEST(FitGp, SingleCenterCoefficient) {
  TrainingSet t{Matrix::Constant(1, 2, 0.5), Vector::Constant(1, 3.0)};
  const GpModel m = fit_gp(t, SquaredExponentialKernel{4.0, 1.0}, 0.5);
  EXPECT_DOUBLE_EQ(m.alpha(0), 3.0 / 4.5);
}

TEST(FitGp, NearInterpolationWithTinyRegularizer) {
  Polynomial b(1);
  b.add_term({3}, 1.0);
  b.add_term({1}, -0.5);
  const TrainingSet t = sample_barrier(b, StateBox({-1.0}, {1.0}), 20, SamplingScheme::grid);
  const GpModel m = fit_gp(t, SquaredExponentialKernel{1.0, 0.01}, 1e-10);
  EXPECT_LE((m.mean_rows(t.points) - t.targets).cwiseAbs().maxCoeff(), 1e-6 * t.targets.cwiseAbs().maxCoeff());
}

TEST(FitGp, ConstantTargetStaysNearConstant) {
  const StateBox box({0.0, 0.0}, {1.0, 1.0});
  const TrainingSet t = sample_barrier(Polynomial::constant(2, 1.0), box, 100, SamplingScheme::grid);
  const GpModel m = fit_gp(t, SquaredExponentialKernel{1.0, 0.05}, 1e-8);
  const Vector v = m.mean_rows(StateBox({0.1, 0.1}, {0.9, 0.9}).grid(17));
  EXPECT_GE(v.minCoeff(), 0.9);
  EXPECT_LE(v.maxCoeff(), 1.1);
}

TEST(FitGp, RejectsPolynomialKernel) {
  const TrainingSet t = sample_barrier(lane_barrier(), kLaneBox, 8, SamplingScheme::grid);
  EXPECT_THROW(fit_gp(t, PolynomialKernel{1.0, 1.0, 2}, 1e-8), std::invalid_argument);
}

TEST(RkhsNorm, SingleUnitCoefficientIsSignalStd) {
  GpModel m;
  m.kernel = kLaneKernel;
  m.centers = Matrix::Constant(1, 3, 0.7);
  m.alpha = Vector::Ones(1);
  EXPECT_NEAR(rkhs_norm(m), 1500.0, 1500.0 * 1e-10);
}

TEST(RkhsNorm, ZeroCoefficientsGiveZero) {
  GpModel m;
  m.kernel = kLaneKernel;
  m.centers = kLaneBox.grid(3);
  m.alpha = Vector::Zero(m.centers.rows());
  EXPECT_EQ(rkhs_norm(m), 0.0);
}

TEST(RkhsNorm, HomogeneousInCoefficients) {
  GpModel m = fit_gp(sample_barrier(lane_barrier(), kLaneBox, 125, SamplingScheme::grid), kLaneKernel,
                     default_gp_regularizer(kLaneKernel));
  const double base = rkhs_norm(m);
  m.alpha *= 2.0;
  EXPECT_NEAR(rkhs_norm(m), 2.0 * base, 1e-12 * base);
}

TEST(RkhsNorm, TwoCodePathsAgree) {
  const GpModel m = fit_gp(sample_barrier(lane_barrier(), StateBox({0.0, -1.0, -0.05}, {2.0, 1.0, 0.05}), 64,
                                          SamplingScheme::uniform, 5),
                           SquaredExponentialKernel{1.0, 0.1}, 1e-3);
  const Matrix k = gram(m.kernel, m.centers);
  const double quad = m.alpha.dot(k * m.alpha);
  EXPECT_NEAR(rkhs_norm(m) * rkhs_norm(m), quad, 1e-10 * quad);
  EXPECT_NEAR(rkhs_norm_from_targets(m) * rkhs_norm_from_targets(m), quad, 1e-10 * quad);
}

// With the lane-keeping hyperparameters the interpolant has huge cancelling
// coefficients; the paths then agree to within the rounding bound
// eps * |alpha|^T |K| |alpha| rather than to a fixed relative tolerance.
TEST(RkhsNorm, TwoCodePathsAgreeWithinRoundingBoundWhenIllConditioned) {
  const GpModel m = fit_gp(sample_barrier(lane_barrier(), kLaneBox, 125, SamplingScheme::grid), kLaneKernel,
                           default_gp_regularizer(kLaneKernel));
  const Matrix k = gram(m.kernel, m.centers);
  const double quad = m.alpha.dot(k * m.alpha);
  const double bound = 1e-15 * m.alpha.cwiseAbs().dot(k.cwiseAbs() * m.alpha.cwiseAbs()) * static_cast<double>(m.size());
  EXPECT_NEAR(rkhs_norm(m) * rkhs_norm(m), quad, bound);
  EXPECT_NEAR(rkhs_norm_from_targets(m), rkhs_norm(m), 1e-6 * rkhs_norm(m));
}

// Dropping a center can only shrink the minimum-norm interpolant.
TEST(RkhsNorm, SubsetOfCentersNeverIncreasesNorm) {
  const KernelSpec k = SquaredExponentialKernel{1.0, 0.3};
  const TrainingSet full = sample_barrier(lane_barrier(), StateBox({0.0, -1.0, -0.05}, {2.0, 1.0, 0.05}), 27,
                                          SamplingScheme::grid);
  const double reg = 1e-9;
  const double full_norm = rkhs_norm(fit_gp(full, k, reg));
  for (Eigen::Index drop = 0; drop < full.points.rows(); drop += 5) {
    TrainingSet sub;
    sub.points.resize(full.points.rows() - 1, 3);
    sub.targets.resize(full.points.rows() - 1);
    for (Eigen::Index i = 0, r = 0; i < full.points.rows(); ++i) {
      if (i == drop) continue;
      sub.points.row(r) = full.points.row(i);
      sub.targets(r++) = full.targets(i);
    }
    EXPECT_LE(rkhs_norm(fit_gp(sub, k, reg)), full_norm * (1 + 1e-6)) << "dropped " << drop;
  }
}

TEST(SupErrors, ConstantBarrierNearlyInterpolated) {
  const StateBox box({0.0}, {1.0});
  const Polynomial b = Polynomial::constant(1, 2.0);
  const TransitionDataset d = sample_transitions(LinearGaussianParams{0.5, 0.05}, box, 50, 1);
  const EmpiricalCme cme = fit_cme(d, PolynomialKernel{1.0, 1.0, 2}, 1e-3);
  const GpModel m = fit_gp(sample_barrier(b, box, 40, SamplingScheme::grid), SquaredExponentialKernel{1.0, 0.1}, 1e-10);
  const SupErrors e = sup_errors(b, m, cme, box, 200);
  EXPECT_LE(e.zeta1_hat, 1e-3 * 2.0);
}

TEST(SupErrors, HolderBoundOnZeta2) {
  const EmpiricalCme cme = lane_cme(300);
  const Polynomial b = lane_barrier();
  const GpModel m = fit_gp(sample_barrier(b, kLaneBox, 125, SamplingScheme::grid), kLaneKernel,
                           default_gp_regularizer(kLaneKernel));
  const int per_axis = 8;
  const SupErrors e = sup_errors(b, m, cme, kLaneBox, per_axis);
  const Matrix grid = kLaneBox.grid(per_axis);
  double bound = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) bound = std::max(bound, cme.weights(grid.row(i).transpose()).lpNorm<1>());
  EXPECT_LE(e.zeta2_hat, kSupInflation * bound * e.max_successor_error * (1 + 1e-9));
  EXPECT_EQ(e.grid_points, 512);
  EXPECT_NEAR(e.grid_spacing(0), 9.0 / 7.0, 1e-15);
}

TEST(SupErrors, Zeta1DecreasesWithTrainingSize) {
  const EmpiricalCme cme = lane_cme(200);
  const Polynomial b = lane_barrier();
  double prev = INFINITY;
  for (long n : {27L, 125L, 1000L}) {
    const GpModel m = fit_gp(sample_barrier(b, kLaneBox, n, SamplingScheme::grid), kLaneKernel,
                             default_gp_regularizer(kLaneKernel));
    const double z = sup_errors(b, m, cme, kLaneBox, 20).zeta1_hat;
    EXPECT_LT(z, prev) << "n = " << n;
    prev = z;
  }
}

TEST(CertifyEnvelope, GenerousCapsPass) {
  const EmpiricalCme cme = lane_cme(200);
  const Polynomial b = lane_barrier();
  const GpModel m = fit_gp(sample_barrier(b, kLaneBox, 125, SamplingScheme::grid), kLaneKernel,
                           default_gp_regularizer(kLaneKernel));
  const EnvelopeReport r = certify_envelope(b, m, cme, kLaneBox, {1e6, 1e6, 1e9}, 10);
  EXPECT_TRUE(r.passed);
  EXPECT_GT(r.norm_margin, 0.0);
}

TEST(CertifyEnvelope, NormCapBelowNormFails) {
  const EmpiricalCme cme = lane_cme(200);
  const Polynomial b = lane_barrier();
  const GpModel m = fit_gp(sample_barrier(b, kLaneBox, 125, SamplingScheme::grid), kLaneKernel,
                           default_gp_regularizer(kLaneKernel));
  const double norm = rkhs_norm(m);
  const EnvelopeReport r = certify_envelope(b, m, cme, kLaneBox, {1e6, 1e6, 0.5 * norm}, 10);
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.norm_margin, 0.0);
  EXPECT_GT(r.zeta1_margin, 0.0);
}

TEST(CertifyEnvelope, PassImpliesPointwiseBoundOnGrid) {
  const EmpiricalCme cme = lane_cme(200);
  const Polynomial b = lane_barrier();
  EnvelopeOptions opts;
  opts.initial_train = 1000;
  opts.max_rounds = 0;
  opts.validation_per_axis = 15;
  const EnvelopeResult res = fit_envelope(b, cme, kLaneBox, kLaneKernel, {0.05, 0.05, 10.0}, opts);
  ASSERT_TRUE(res.report.passed);
  const Matrix grid = kLaneBox.grid(15);
  EXPECT_LE((b.evaluate_rows(grid) - res.model.mean_rows(grid)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(FitEnvelope, RefinesUntilZeta1Met) {
  const EmpiricalCme cme = lane_cme(200);
  const Polynomial b = lane_barrier();
  EnvelopeOptions opts;
  opts.initial_train = 27;
  opts.max_train = 1000;
  opts.validation_per_axis = 15;
  const EnvelopeResult res = fit_envelope(b, cme, kLaneBox, kLaneKernel, {0.01, 1.0, 10.0}, opts);
  EXPECT_GE(res.rounds, 1);
  EXPECT_LE(res.report.n_train, 1000);
}

}  // namespace
}  // namespace ddbc
