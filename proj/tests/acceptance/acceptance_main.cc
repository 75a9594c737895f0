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

// Acceptance suite. Runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits non-zero if any fails.
// Run records are written under ./acceptance_out for inspection.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "oracles.h"
#include "sgdlab/dln.h"
#include "sgdlab/errors.h"
#include "sgdlab/experiment.h"
#include "sgdlab/format.h"
#include "sgdlab/linalg.h"
#include "sgdlab/lsq.h"
#include "sgdlab/mirror.h"
#include "sgdlab/problems.h"

namespace sgdlab {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // 0 means no stated limit
  std::function<Outcome()> run;
};

const fs::path kOutRoot = "acceptance_out";

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// Collects the named checks of a run record into one outcome.
Outcome FromChecks(const RunRecord& rec,
                   const std::vector<std::string>& names) {
  Outcome out{true, ""};
  for (const auto& name : names) {
    const Check* c = rec.FindCheck(name);
    if (!c) {
      out.passed = false;
      out.detail += name + ": missing; ";
      continue;
    }
    out.passed = out.passed && c->passed;
    out.detail += name + (c->passed ? " ok" : " FAILED") +
                  (c->detail.empty() ? "" : " (" + c->detail + ")") + "; ";
  }
  return out;
}

RunRecord RunAndSave(ExperimentId id) {
  const ExperimentConfig cfg = DefaultConfig(id);
  RunRecord rec = RunExperiment(cfg);
  WriteRunRecord(rec, (kOutRoot / ExperimentName(id)).string());
  return rec;
}

bool BitEqual(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

Dataset BundledInstance() {
  const ExperimentConfig cfg = DefaultConfig(ExperimentId::kFig4);
  RngStream rng = RngStream::For(cfg.data_seed, 0, StreamRole::kData);
  return GenSparseRegression(cfg.n, cfg.d, cfg.s, rng);
}

// Diagnostic only: the distance trend restricted to sigma <= 0.5.
std::string SubgridDiagnostic(const Curve& c, bool increasing) {
  std::vector<double> means, stds;
  std::string text = "means over sigma <= 0.5:";
  for (size_t k = 0; k < c.t.size(); ++k) {
    if (c.t[k] > 0.5) continue;
    means.push_back(c.mean[k]);
    stds.push_back(c.std[k]);
    text += " " + Fmt("%.4g", c.mean[k]);
  }
  const bool holds = TrendHolds(means, stds, increasing);
  return text + (holds ? " (monotone)" : " (not monotone)");
}

// 1. Stationary law of the underparameterized SDE.
Outcome OuCriterion() {
  const RunRecord rec = RunAndSave(ExperimentId::kOuStationary);
  Outcome out = FromChecks(rec, {"s0_mean_within_3se", "s0_cov_within_15pct",
                                 "s0.3_mean_within_3se",
                                 "s0.3_cov_within_15pct"});
  out.detail += "cov errors " +
                Fmt("%.3g", rec.scalars.at("s0.cov_rel_frobenius")) + ", " +
                Fmt("%.3g", rec.scalars.at("s0.3.cov_rel_frobenius")) +
                " against the sigma^2/2 law";
  return out;
}

// 2. Lyapunov solver against its residual and the quadrature integral.
Outcome LyapunovCriterion() {
  std::mt19937_64 gen(20260101);
  double worst_residual = 0.0, worst_quad = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int d = 2 + 2 * k;  // 2..20
    double lo = 0.0, hi = 0.0;
    const Mat b = oracle::RandomSpd(d, 0.5, 4.0, gen, &lo, &hi);
    const Mat dm = oracle::RandomSymmetric(d, gen);
    const Mat w = SolveLyapunov(b, dm);
    worst_residual = std::max(
        worst_residual, (b * w + w * b - 2.0 * dm).norm() / dm.norm());
    const Mat q = oracle::LyapunovQuadrature(b, dm, lo, hi);
    worst_quad = std::max(worst_quad, (w - q).norm() / q.norm());
  }
  const bool ok = worst_residual <= 1e-10 && worst_quad <= 1e-6;
  return {ok, "max residual/||D|| " + Fmt("%.3g", worst_residual) +
                  " (tol 1e-10), max rel. diff to quadrature " +
                  Fmt("%.3g", worst_quad) + " (tol 1e-6)"};
}

// 3. Coupled-trajectory bound in the overparameterized regime.
Outcome Thm1Criterion() {
  const RunRecord rec = RunAndSave(ExperimentId::kThm1Bound);
  return FromChecks(rec,
                    {"s0.5_eta_below_1.1_bound", "s0_eta_identically_zero"});
}

// 4. Ordering of the three optimizers on the sparse instance.
Outcome Fig3Criterion() {
  const RunRecord rec = RunAndSave(ExperimentId::kFig3);
  return FromChecks(rec, {"all_runs_completed",
                          "ordering_noisy_sgd_lt_sgd_lt_gd",
                          "gap_exceeds_pooled_std"});
}

// 5. Distance to the untilted solution grows with sigma; distance bound.
Outcome Fig4Criterion() {
  const ExperimentConfig cfg = DefaultConfig(ExperimentId::kFig4);
  const RunRecord rec = ReproduceFig4(cfg);
  WriteRunRecord(rec, (kOutRoot / ExperimentName(cfg.id)).string());
  Outcome out =
      FromChecks(rec, {"trend_nondecreasing", "distance_bound_all_runs"});
  out.detail += "[" + FromChecks(rec, {"all_runs_converged"}).detail + "] ";
  for (const Curve& c : rec.curves) {
    if (c.name == "dist_vs_sigma") {
      out.detail += "diagnostic, not a criterion: " +
                    SubgridDiagnostic(c, true);
    }
  }
  return out;
}

// 6. Final distance to the sparse ground truth decreases with sigma.
Outcome AppendixCriterion() {
  const RunRecord rec = RunAndSave(ExperimentId::kAppendixAlphaSweep);
  Outcome out =
      FromChecks(rec, {"trend_nonincreasing_a0.1",
                       "trend_nonincreasing_a0.01"});
  for (const Curve& c : rec.curves) {
    if (c.name.rfind("final_dist_vs_sigma", 0) != 0) continue;
    out.detail += "diagnostic, not a criterion, " + c.name + ": " +
                  SubgridDiagnostic(c, false) + "; ";
  }
  return out;
}

// 7. Mirror-map property suite.
Outcome MirrorCriterion() {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> ub(-3.0, 3.0), ua(0.1, 2.0),
      uu(-5.0, 5.0);
  auto random_vec = [&](int d, auto& dist) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = dist(gen);
    return v;
  };
  double fd_err = 0.0, roundtrip = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec alpha = random_vec(6, ua);
    const Vec beta = random_vec(6, ub);
    const Vec g = PhiGrad(beta, alpha);
    for (int i = 0; i < 6; ++i) {
      const double h = 1e-5 * (1.0 + std::abs(beta(i)));
      Vec bp = beta, bm = beta;
      bp(i) += h;
      bm(i) -= h;
      const double fd =
          (oracle::PhiDirect(bp, alpha) - oracle::PhiDirect(bm, alpha)) /
          (2.0 * h);
      fd_err = std::max(fd_err,
                        std::abs(g(i) - fd) / std::max(std::abs(fd), 1e-3));
    }
    const Vec u = random_vec(6, uu);
    roundtrip = std::max(
        roundtrip, (PhiGrad(PhiGradInverse(u, alpha), alpha) - u).norm());
  }
  int bregman_ok = 0;
  for (int k = 0; k < 100; ++k) {
    const Vec alpha = random_vec(5, ua);
    bregman_ok +=
        Bregman(random_vec(5, ub), random_vec(5, ub), alpha) >= 0.0;
  }

  const Dataset ds = BundledInstance();
  const Vec alpha = Vec::Constant(ds.d(), 0.1);
  const Mat complement =
      Mat::Identity(ds.d(), ds.d()) - RowSpaceProjector(ds.x);
  std::uniform_real_distribution<double> small(-0.05, 0.05);
  const Vec tilt = complement * random_vec(ds.d(), small);
  const double kkt = SolveTilted(ds, alpha, tilt).kkt_residual;

  const Vec ls = MinNormSolve(ds.x, ds.y);
  const double large_alpha =
      (SolveTilted(ds, Vec::Constant(ds.d(), 100.0), Vec::Zero(ds.d())).beta -
       ls).norm() / ls.norm();

  // sigma = 0 pipeline: SDE limit against the untilted solution at alpha_inf.
  const DlnContext ctx(ds);
  const double gamma = DefaultStepSize(ds);
  DlnSdeOptions opt;
  const DlnRunResult run = SimulateDlnSde(
      ctx, alpha, NoiseSchedule::LossScaled(0.0), gamma, gamma, 1, 0, opt);
  const Vec alpha_inf =
      EffectiveAlpha(alpha, ds, gamma, 0.0, run.final_state.loss_integral);
  const double pipeline =
      (SolveTilted(ds, alpha_inf, Vec::Zero(ds.d())).beta -
       run.final_state.Beta()).norm();

  const bool ok = fd_err <= 1e-6 && roundtrip <= 1e-12 && bregman_ok == 100 &&
                  kkt <= 1e-6 && large_alpha <= 1e-2 && run.converged &&
                  pipeline <= 1e-4;
  return {ok, "fd rel " + Fmt("%.2g", fd_err) + ", roundtrip " +
                  Fmt("%.2g", roundtrip) + ", bregman >= 0 on " +
                  std::to_string(bregman_ok) + "/100, kkt " +
                  Fmt("%.2g", kkt) + ", alpha=100 vs min-norm " +
                  Fmt("%.2g", large_alpha) + ", sigma=0 pipeline " +
                  Fmt("%.2g", pipeline) +
                  (run.converged ? "" : " (SDE did not converge)")};
}

// 8. Degenerate configurations reduce exactly to simpler optimizers.
Outcome DegenerateCriterion() {
  const Dataset over = BundledInstance();
  RngStream data_rng(5, 0);
  const Dataset under = GenUnderparamRegression(50, 5, 0.5, data_rng);

  // Noisy-SGD with sigma = 0 against SGD, least squares and DLN.
  bool lsq_equal = true;
  {
    OptimizerConfig sgd;
    sgd.kind = OptimizerKind::kSGD;
    // Stable for single-sample steps: gamma ||x_i||^2 <= 1/2.
    sgd.gamma = 0.5 / over.x.rowwise().squaredNorm().maxCoeff();
    OptimizerConfig noisy = sgd;
    noisy.kind = OptimizerKind::kNoisySGD;
    RngStream ra(11, 0), rb(11, 0);
    LsqState a{Vec::Zero(over.d())}, b{Vec::Zero(over.d())};
    for (int k = 0; k < 2000 && lsq_equal; ++k) {
      a = LsqDiscreteStep(a, over, sgd, ra);
      b = LsqDiscreteStep(b, over, noisy, rb);
      lsq_equal = BitEqual(a.theta, b.theta);
    }
  }
  bool dln_equal = true;
  {
    const DlnContext ctx(over);
    OptimizerConfig sgd;
    sgd.kind = OptimizerKind::kSGD;
    sgd.gamma = DefaultStepSize(over);
    OptimizerConfig noisy = sgd;
    noisy.kind = OptimizerKind::kNoisySGD;
    DlnRunOptions opt;
    opt.max_steps = 20000;
    const Vec alpha = Vec::Constant(over.d(), 0.1);
    const auto sched = NoiseSchedule::LossScaled(0.0);
    const auto a = RunDlnDiscrete(ctx, alpha, sgd, sched, 11, 0, opt);
    const auto b = RunDlnDiscrete(ctx, alpha, noisy, sched, 11, 0, opt);
    dln_equal = BitEqual(a.final_state.w_plus, b.final_state.w_plus) &&
                BitEqual(a.final_state.w_minus, b.final_state.w_minus) &&
                a.trajectory.rows == b.trajectory.rows;
  }
  // DP-SGD with C = inf, sigma = 0, B = n against GD.
  bool dp_equal = true;
  {
    OptimizerConfig gd;
    gd.kind = OptimizerKind::kGD;
    gd.gamma = 0.1;
    OptimizerConfig dp = gd;
    dp.kind = OptimizerKind::kDPSGD;
    dp.batch = under.n();
    RngStream ra(12, 0), rb(12, 0);
    LsqState a{Vec::Zero(under.d())}, b{Vec::Zero(under.d())};
    for (int k = 0; k < 2000 && dp_equal; ++k) {
      a = LsqDiscreteStep(a, under, gd, ra);
      b = LsqDiscreteStep(b, under, dp, rb);
      dp_equal = BitEqual(a.theta, b.theta);
    }
  }
  // Clip norm identity.
  std::mt19937_64 gen(13);
  std::normal_distribution<double> normal;
  std::exponential_distribution<double> expo(1.0);
  double clip_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    Vec g(10);
    for (int i = 0; i < 10; ++i) g(i) = normal(gen);
    const double c = expo(gen) * 3.0;
    clip_err = std::max(clip_err,
                        std::abs(Clip(g, c).norm() - std::min(g.norm(), c)));
  }
  const bool ok = lsq_equal && dln_equal && dp_equal && clip_err <= 1e-12;
  return {ok, std::string("noisy(0)==sgd lsq ") + (lsq_equal ? "yes" : "NO") +
                  ", dln " + (dln_equal ? "yes" : "NO") +
                  "; dpsgd(inf,0,n)==gd " + (dp_equal ? "yes" : "NO") +
                  "; clip identity max err " + Fmt("%.2g", clip_err)};
}

// 9. Closed form of the DLN SDE at a fine step (plain Euler-Maruyama).
Outcome AlphaClosedFormCriterion() {
  const Dataset ds = BundledInstance();
  const DlnContext ctx(ds);
  const double gamma = 0.01;
  const double h = gamma / 100.0;
  DlnSdeOptions opt;
  opt.scheme = SdeScheme::kEulerMaruyama;
  opt.run.max_steps = 20000;
  opt.run.record_stride = 2000;
  opt.run.stop_when_converged = false;
  double worst = 0.0;
  int checkpoints = 0;
  opt.observer = [&](const DlnState& s, const SdeAccumulators& acc) {
    if (s.step == 0) return;
    const Eigen::ArrayXd a2 = acc.log_alpha_sq.array().exp();
    const Vec predicted =
        (2.0 * a2 * (2.0 * (acc.eta + acc.delta).array()).sinh()).matrix();
    const Vec beta = s.Beta();
    worst = std::max(worst, (beta - predicted).norm() / beta.norm());
    ++checkpoints;
  };
  SimulateDlnSde(ctx, Vec::Constant(ds.d(), 0.1),
                 NoiseSchedule::LossScaled(0.5), gamma, h, 21, 0, opt);
  const bool ok = checkpoints == 10 && worst <= 1e-3;
  return {ok, std::to_string(checkpoints) + " checkpoints, max rel. error " +
                  Fmt("%.3g", worst) + " (tol 1e-3)"};
}

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 10. Identical configs give byte-identical outputs.
Outcome DeterminismCriterion() {
  const fs::path base = kOutRoot / "determinism";
  fs::remove_all(base);
  int files = 0, differing = 0;
  for (ExperimentId id : {ExperimentId::kThm1Bound, ExperimentId::kFig3}) {
    ExperimentConfig cfg = DefaultConfig(id);
    const std::string name = ExperimentName(id);
    cfg.workers = 1;
    WriteRunRecord(RunExperiment(cfg), (base / name / "a").string());
    cfg.workers = 0;
    WriteRunRecord(RunExperiment(cfg), (base / name / "b").string());
    for (const auto& e : fs::recursive_directory_iterator(base / name / "a")) {
      if (!e.is_regular_file()) continue;
      const fs::path other =
          base / name / "b" / fs::relative(e.path(), base / name / "a");
      ++files;
      if (!fs::exists(other) || ReadAll(e.path()) != ReadAll(other)) {
        ++differing;
      }
    }
  }
  return {files > 0 && differing == 0,
          std::to_string(files) + " files compared across two reruns, " +
              std::to_string(differing) + " differ"};
}

int Main() {
  fs::create_directories(kOutRoot);
  const std::vector<Criterion> criteria = {
      {1, "ou_stationary_law", 60.0, OuCriterion},
      {2, "lyapunov_oracle", 0.0, LyapunovCriterion},
      {3, "thm1_bound", 120.0, Thm1Criterion},
      {4, "fig3_ordering", 300.0, Fig3Criterion},
      {5, "fig4_trend_and_distance_bound", 900.0, Fig4Criterion},
      {6, "appendix_sweeps", 0.0, AppendixCriterion},
      {7, "mirror_properties", 0.0, MirrorCriterion},
      {8, "degenerate_equivalences", 0.0, DegenerateCriterion},
      {9, "alpha_closed_form", 0.0, AlphaClosedFormCriterion},
      {10, "determinism", 0.0, DeterminismCriterion},
  };
  int passed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (c.time_limit_s > 0.0 && secs > c.time_limit_s) {
      out.passed = false;
      out.detail += "; runtime over the " + Fmt("%.0f", c.time_limit_s) +
                    " s limit";
    }
    passed += out.passed;
    std::printf("%s  %2d %-30s %7.1fs  %s\n", out.passed ? "PASS" : "FAIL",
                c.id, c.name.c_str(), secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", passed, criteria.size());
  return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}

}  // namespace
}  // namespace sgdlab

int main() { return sgdlab::Main(); }
