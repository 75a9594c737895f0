// Copyright 2026 The sgdlab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sgdlab/dln.h"

#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "sgdlab/errors.h"
#include "sgdlab/mirror.h"

namespace sgdlab {
namespace {

bool BitEqual(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Dataset SmallOver(std::uint64_t seed, int n = 10, int d = 20, int s = 3) {
  RngStream rng(seed, 0);
  return GenSparseRegression(n, d, s, rng);
}

TEST(DlnLossTest, ZeroAtInterpolator) {
  const Dataset ds = SmallOver(1);
  EXPECT_LE(DlnLoss(*ds.beta_star, ds), 1e-28);
}

TEST(DlnLossTest, QuarterNormalization) {
  Mat x(1, 2);
  x << 1.0, 0.0;
  const Dataset ds = MakeDataset(x, Vec::Constant(1, 2.0));
  EXPECT_DOUBLE_EQ(DlnLoss(Vec::Zero(2), ds), 1.0);
}

TEST(DlnLossTest, NormIdentityAndGradient) {
  const Dataset ds = SmallOver(2);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  Vec beta(ds.d());
  for (int i = 0; i < ds.d(); ++i) beta(i) = normal(gen);
  EXPECT_NEAR(4.0 * DlnLoss(beta, ds),
              (ds.xbar * beta - ds.y / std::sqrt(ds.n())).squaredNorm(),
              1e-12);
  const Vec g = DlnLossGradient(beta, ds);
  const double h = 1e-6;
  for (int i = 0; i < ds.d(); ++i) {
    Vec bp = beta, bm = beta;
    bp(i) += h;
    bm(i) -= h;
    const double fd = (DlnLoss(bp, ds) - DlnLoss(bm, ds)) / (2.0 * h);
    EXPECT_NEAR(g(i), fd, 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST(DlnStateTest, SymmetricInitGivesZeroBeta) {
  const DlnState s = DlnState::Init(Vec::Constant(4, 0.1));
  EXPECT_EQ(s.Beta(), Vec::Zero(4));
  EXPECT_EQ(s.r_acc, Vec::Zero(4));
  EXPECT_THROW(DlnState::Init(Vec::Zero(3)), DomainError);
}

TEST(DlnDiscreteStepTest, GdAtInterpolatorIsFixed) {
  Mat x(2, 3);
  x << 1.0, 2.0, 0.0, 0.0, 1.0, 3.0;
  DlnState s;
  s.w_plus = Eigen::Vector3d(2.0, 1.0, 1.0);
  s.w_minus = Eigen::Vector3d(1.0, 2.0, 1.0);
  s.r_acc = Vec::Zero(3);
  const Vec beta = s.Beta();  // (3, -3, 0), exact
  const Dataset ds = MakeDataset(x, x * beta, beta);
  const DlnContext ctx(ds);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kGD;
  cfg.gamma = 0.1;
  DlnStreams streams = DlnStreams::For(0, 0);
  DlnDiscreteStep(s, ctx, cfg, NoiseSchedule::LossScaled(0.0), streams);
  EXPECT_EQ(s.w_plus, Vec(Eigen::Vector3d(2.0, 1.0, 1.0)));
  EXPECT_EQ(s.w_minus, Vec(Eigen::Vector3d(1.0, 2.0, 1.0)));
  EXPECT_EQ(s.loss_integral, 0.0);
}

TEST(DlnDiscreteStepTest, ZeroSigmaNoisySgdIsSgd) {
  const Dataset ds = SmallOver(4, 40, 100, 5);
  const DlnContext ctx(ds);
  OptimizerConfig sgd;
  sgd.kind = OptimizerKind::kSGD;
  sgd.gamma = DefaultStepSize(ds);
  OptimizerConfig noisy = sgd;
  noisy.kind = OptimizerKind::kNoisySGD;
  DlnRunOptions opt;
  opt.max_steps = 3000;
  const Vec alpha = Vec::Constant(ds.d(), 0.1);
  const auto sched = NoiseSchedule::LossScaled(0.0);
  const DlnRunResult a = RunDlnDiscrete(ctx, alpha, sgd, sched, 5, 2, opt);
  const DlnRunResult b = RunDlnDiscrete(ctx, alpha, noisy, sched, 5, 2, opt);
  EXPECT_TRUE(BitEqual(a.final_state.w_plus, b.final_state.w_plus));
  EXPECT_TRUE(BitEqual(a.final_state.w_minus, b.final_state.w_minus));
  EXPECT_EQ(a.trajectory.rows, b.trajectory.rows);
}

TEST(DlnDiscreteStepTest, RejectsDpSgdAndDiverges) {
  const Dataset ds = SmallOver(5);
  const DlnContext ctx(ds);
  DlnState s = DlnState::Init(Vec::Constant(ds.d(), 0.1));
  DlnStreams streams = DlnStreams::For(0, 0);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kDPSGD;
  EXPECT_THROW(
      DlnDiscreteStep(s, ctx, cfg, NoiseSchedule::LossScaled(0.0), streams),
      DomainError);
  cfg.kind = OptimizerKind::kGD;
  cfg.gamma = 1e3;
  DlnRunOptions opt;
  opt.max_steps = 10000;
  EXPECT_THROW(RunDlnDiscrete(ctx, Vec::Constant(ds.d(), 1.0), cfg,
                              NoiseSchedule::LossScaled(0.0), 0, 0, opt),
               DivergenceError);
}

TEST(RunDlnDiscreteTest, TrajectoryIsPaddedAfterConvergence) {
  const Dataset ds = SmallOver(6);
  const DlnContext ctx(ds);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kGD;
  cfg.gamma = DefaultStepSize(ds);
  DlnRunOptions opt;
  opt.max_steps = 100000;
  opt.record_stride = 1000;
  const DlnRunResult res = RunDlnDiscrete(
      ctx, Vec::Constant(ds.d(), 0.5), cfg, NoiseSchedule::LossScaled(0.0), 0,
      0, opt);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(res.steps_run, opt.max_steps);
  ASSERT_EQ(res.trajectory.rows.size(), 101u);
  EXPECT_EQ(res.trajectory.rows.back()[0], opt.max_steps * cfg.gamma);
  EXPECT_LE(res.trajectory.rows.back()[1], 1e-12);
}

TEST(RunDlnDiscreteTest, SameSeedSameRun) {
  const Dataset ds = SmallOver(7);
  const DlnContext ctx(ds);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kNoisySGD;
  cfg.gamma = 0.5 * DefaultStepSize(ds);
  DlnRunOptions opt;
  opt.max_steps = 2000;
  const Vec alpha = Vec::Constant(ds.d(), 0.1);
  const auto sched = NoiseSchedule::LossScaled(0.3);
  const auto a = RunDlnDiscrete(ctx, alpha, cfg, sched, 9, 1, opt);
  const auto b = RunDlnDiscrete(ctx, alpha, cfg, sched, 9, 1, opt);
  const auto c = RunDlnDiscrete(ctx, alpha, cfg, sched, 9, 2, opt);
  EXPECT_TRUE(BitEqual(a.final_state.w_plus, b.final_state.w_plus));
  EXPECT_TRUE(BitEqual(a.final_state.r_acc, b.final_state.r_acc));
  EXPECT_FALSE(BitEqual(a.final_state.w_plus, c.final_state.w_plus));
}

TEST(NoiseScheduleTest, GeneralScheduleBudget) {
  const Mat piece = 0.1 * Mat::Identity(4, 4);  // ||.||_F^2 = 0.04
  const auto ok = NoiseSchedule::General({0.0, 10.0}, {piece});
  EXPECT_NEAR(ok.SquaredNormIntegral(), 0.4, 1e-15);
  EXPECT_EQ(ok.NoiseDim(), 4);
  EXPECT_NE(ok.PieceAt(5.0), nullptr);
  EXPECT_EQ(ok.PieceAt(10.0), nullptr);
  EXPECT_THROW(NoiseSchedule::General({0.0, 30.0}, {piece}), DomainError);
  EXPECT_THROW(NoiseSchedule::General({1.0, 0.5}, {piece}), DomainError);
  EXPECT_THROW(NoiseSchedule::General({0.0}, {piece}), DomainError);
  EXPECT_THROW(NoiseSchedule::LossScaled(-1.0), DomainError);
}

TEST(EffectiveAlphaTest, Cases) {
  const Dataset ds = SmallOver(8);
  const Vec alpha0 = Vec::LinSpaced(ds.d(), 0.1, 0.3);
  EXPECT_EQ(EffectiveAlpha(alpha0, ds, 0.1, 0.5, 0.0), alpha0);
  const Vec gd = ds.xbar.colwise().squaredNorm().transpose();
  const Vec expected =
      (alpha0.array() * (-2.0 * 0.1 * gd.array() * 0.7).exp()).matrix();
  EXPECT_LE((EffectiveAlpha(alpha0, ds, 0.1, 0.0, 0.7) - expected).norm(),
            1e-15);
  const Vec a0 = EffectiveAlpha(alpha0, ds, 0.1, 0.0, 0.7);
  const Vec a1 = EffectiveAlpha(alpha0, ds, 0.1, 0.25, 0.7);
  const Vec a2 = EffectiveAlpha(alpha0, ds, 0.1, 0.5, 0.7);
  EXPECT_TRUE((a1.array() < a0.array()).all());
  EXPECT_TRUE((a2.array() < a1.array()).all());
}

TEST(AccumulateRInfinityTest, Cases) {
  DlnState s = DlnState::Init(Vec::Constant(3, 1.0));
  const Mat complement = Mat::Identity(3, 3);
  AccumulateRInfinity(s, complement, Vec::Ones(3), 0.1, 1.0, 0.0);
  EXPECT_EQ(s.r_acc, Vec::Zero(3));
  AccumulateRInfinity(s, Mat::Zero(3, 3), Vec::Ones(3), 0.1, 1.0, 0.5);
  EXPECT_EQ(s.r_acc, Vec::Zero(3));
  AccumulateRInfinity(s, complement, Vec::Ones(3), 0.04, 4.0, 0.5);
  EXPECT_LE((s.r_acc - 0.2 * Vec::Ones(3)).norm(), 1e-15);
}

TEST(EffectiveInitTest, Cases) {
  EXPECT_EQ(EffectiveInit(Vec::Ones(3), Vec::Zero(3)), Vec::Zero(3));
  EXPECT_NEAR(EffectiveInit(Vec::Ones(1), Vec::Constant(1, 0.25))(0),
              2.0 * std::sinh(1.0), 1e-15);
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0), a(0.05, 2.0);
  Vec alpha(6), r(6);
  for (int i = 0; i < 6; ++i) {
    alpha(i) = a(gen);
    r(i) = u(gen);
  }
  EXPECT_LE((PhiGrad(EffectiveInit(alpha, r), alpha) - r).norm(), 1e-12);
}

TEST(SimulateDlnSdeTest, ZeroStepsIsZeroBeta) {
  const Dataset ds = SmallOver(10);
  const DlnContext ctx(ds);
  DlnSdeOptions opt;
  opt.run.max_steps = 0;
  const auto res = SimulateDlnSde(ctx, Vec::Constant(ds.d(), 0.2),
                                  NoiseSchedule::LossScaled(0.5), 0.01, 0.01,
                                  0, 0, opt);
  EXPECT_EQ(res.final_state.Beta(), Vec::Zero(ds.d()));
  EXPECT_EQ(res.steps_run, 0);
}

void CheckClosedForms(SdeScheme scheme, double h_ratio, double rel_tol) {
  const Dataset ds = SmallOver(11);
  const DlnContext ctx(ds);
  const double gamma = 0.01;
  DlnSdeOptions opt;
  opt.scheme = scheme;
  opt.run.max_steps = 2000;
  opt.run.record_stride = 200;
  opt.run.stop_when_converged = false;
  int checks = 0;
  opt.observer = [&](const DlnState& s, const SdeAccumulators& acc) {
    const Eigen::ArrayXd a2 = acc.log_alpha_sq.array().exp();
    const Vec predicted =
        (2.0 * a2 * (2.0 * (acc.eta + acc.delta).array()).sinh()).matrix();
    const Vec beta = s.Beta();
    EXPECT_LE((beta - predicted).norm(), rel_tol * (beta.norm() + 1e-300))
        << "step " << s.step;
    const Vec product = (s.w_plus.array() * s.w_minus.array()).matrix();
    EXPECT_LE((product - a2.matrix()).norm(), rel_tol * a2.matrix().norm())
        << "step " << s.step;
    ++checks;
  };
  SimulateDlnSde(ctx, Vec::Constant(ds.d(), 0.5),
                 NoiseSchedule::LossScaled(0.5), gamma, gamma * h_ratio, 4, 0,
                 opt);
  EXPECT_EQ(checks, 11);
}

TEST(SimulateDlnSdeTest, LogSchemeClosedFormsHoldToRounding) {
  CheckClosedForms(SdeScheme::kLogEuler, 1.0, 1e-10);
}

TEST(SimulateDlnSdeTest, EulerClosedFormsHoldAtFineStep) {
  CheckClosedForms(SdeScheme::kEulerMaruyama, 0.01, 1e-3);
}

TEST(SimulateDlnSdeTest, RAccumulatorStabilizes) {
  const Dataset ds = SmallOver(12);
  const DlnContext ctx(ds);
  const double gamma = DefaultStepSize(ds);
  DlnSdeOptions opt;
  opt.run.max_steps = 200000;
  opt.run.record_stride = 100;
  Vec r_first;
  opt.observer = [&](const DlnState& s, const SdeAccumulators&) {
    if (r_first.size() == 0 && DlnLoss(s.Beta(), ds) <= 1e-10) {
      r_first = s.r_acc;
    }
  };
  const auto res =
      SimulateDlnSde(ctx, Vec::Constant(ds.d(), 0.1),
                     NoiseSchedule::LossScaled(0.25), gamma, gamma, 1, 0, opt);
  ASSERT_TRUE(res.converged);
  ASSERT_GT(r_first.size(), 0);
  const Vec& r_end = res.final_state.r_acc;
  EXPECT_GT(r_end.norm(), 0.0);
  EXPECT_LE((r_end - r_first).norm(), 0.05 * r_end.norm());
  // r lives in the orthogonal complement of the row space.
  EXPECT_LE((RowSpaceProjector(ds.x) * r_end).norm(), 1e-10 * r_end.norm());
}

TEST(SimulateDlnSdeTest, GeneralScheduleConvergesWithHighProbability) {
  const Dataset ds = SmallOver(13);
  const DlnContext ctx(ds);
  const double gamma = 0.5 * DefaultStepSize(ds);
  const Mat piece = 0.1 * Mat::Identity(ds.d(), ds.d());
  const auto sched = NoiseSchedule::General({0.0, 2.0}, {piece});
  ASSERT_LE(sched.SquaredNormIntegral(), 1.0);
  DlnSdeOptions opt;
  opt.run.max_steps = 100000;
  opt.run.converge_tol = 1e-8;
  opt.run.converge_window = 1;
  int converged = 0;
  for (int seed = 0; seed < 40; ++seed) {
    converged += SimulateDlnSde(ctx, Vec::Constant(ds.d(), 0.1), sched, gamma,
                                gamma, 100 + seed, 0, opt)
                     .converged;
  }
  EXPECT_GE(converged, 38);
}

}  // namespace
}  // namespace sgdlab
