// Copyright 2026 The privrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Optional arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "privrec/convex_projection.h"
#include "privrec/dp_mechanisms.h"
#include "privrec/experiments.h"
#include "privrec/gmm_pipeline.h"
#include "privrec/sbm_model.h"
#include "privrec/sbm_recovery.h"

#ifndef PRIVREC_SOURCE_DIR
#error "PRIVREC_SOURCE_DIR must be defined"
#endif
#ifndef PRIVREC_ESTIMATE_PATH
#error "PRIVREC_ESTIMATE_PATH must be defined"
#endif

namespace privrec {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string ConfigPath(const std::string& name) {
  return std::string(PRIVREC_SOURCE_DIR) + "/configs/" + name;
}

double BinomialSigma(double p, int n) { return std::sqrt(p * (1 - p) / n); }

Outcome MechanismTails() {
  const auto start = Clock::now();
  constexpr int kDraws = 1000000;
  Rng rng(MixSeed(1, 0));
  bool ok = true;
  std::string detail;
  const std::vector<double> ts = {2.0, 4.0, 9.21};
  std::vector<int> above(ts.size(), 0);
  for (int i = 0; i < kDraws; ++i) {
    const double x = *AddLaplace(0.0, 2.0, 1.0, rng);
    for (size_t j = 0; j < ts.size(); ++j) above[j] += std::abs(x) > ts[j];
  }
  for (size_t j = 0; j < ts.size(); ++j) {
    const double p = std::exp(-ts[j] / 2);
    const double f = static_cast<double>(above[j]) / kDraws;
    ok &= std::abs(f - p) <= 3 * BinomialSigma(p, kDraws);
    absl::StrAppendFormat(&detail, "P[|x|>%g]=%.5f (%.5f) ", ts[j], f, p);
  }
  const TruncatedLaplaceParams tl{.mu = -1.0, .b = 1.0};
  const double bound = TruncatedLaplaceLowerTail(tl, -3.0);
  int below = 0;
  bool support = true;
  for (int i = 0; i < kDraws; ++i) {
    const double x = *SampleTruncatedLaplace(tl, rng);
    support &= x <= 0.0;
    below += x < -3.0;
  }
  const double f = static_cast<double>(below) / kDraws;
  ok &= support && f <= bound + 3 * BinomialSigma(bound, kDraws);
  const double secs = Seconds(start);
  ok &= secs < 10.0;
  absl::StrAppendFormat(&detail, "tLap P[x<-3]=%.5f <= %.5f, %.1fs", f, bound,
                        secs);
  return {ok, detail};
}

Outcome ExactExpMechAudit() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (double eps : {0.5, 1.0, 2.0}) {
    AuditRunConfig cfg;
    cfg.mechanism = AuditMechanismId::kExpMechExact;
    cfg.options.epsilon_claimed = eps;
    cfg.n = 8;
    cfg.seed = 2;
    absl::StatusOr<AuditResult> r = RunAudit(cfg);
    if (!r.ok()) return {false, std::string(r.status().message())};
    ok &= r->exact && r->epsilon_hat <= eps + 1e-9 && !r->violation;
    absl::StrAppendFormat(&detail, "eps=%g: max log-ratio %.6f; ", eps,
                          r->epsilon_hat);
  }
  const double secs = Seconds(start);
  ok &= secs < 5.0;
  absl::StrAppendFormat(&detail, "28 toggles, %.2fs", secs);
  return {ok, detail};
}

SymmetricMatrix RandomSymmetric(int n, double scale, Rng& rng) {
  return SymmetricMatrix::Symmetrized(
      Eigen::MatrixXd::NullaryExpr(n, n, [&] { return scale * rng.Normal(); }));
}

Eigen::MatrixXd ProjectedGradientOracle(const Eigen::MatrixXd& y, Rng& rng) {
  const int n = static_cast<int>(y.rows());
  const auto normalize = [n](Eigen::MatrixXd& m) {
    for (int i = 0; i < n; ++i) m.row(i) /= m.row(i).norm() * std::sqrt(n);
  };
  Eigen::MatrixXd v =
      Eigen::MatrixXd::NullaryExpr(n, n, [&] { return rng.Normal(); });
  normalize(v);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(y);
  const double eta = 1.0 / (4 * (es.eigenvalues().cwiseAbs().maxCoeff() + 3));
  for (int it = 0; it < 1000000; ++it) {
    Eigen::MatrixXd next = v + 4 * eta * (y - v * v.transpose()) * v;
    normalize(next);
    const double step = (next - v).norm();
    v = std::move(next);
    if (step < 1e-13) break;
  }
  return v * v.transpose();
}

Outcome ProjectionCorrectness() {
  const ProjectionOptions tight{.tol = 1e-10, .max_iters = 100000};
  Rng rng(MixSeed(3, 0));
  double worst_grid = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const SymmetricMatrix y = RandomSymmetric(2, 0.8, rng);
    const Eigen::MatrixXd x = ProjectToK(y, tight)->result.dense();
    double best_t = 0, best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 1000000; ++k) {
      const double t = -0.5 + k * 1e-6;
      const double f = (y(0, 1) - t) * (y(0, 1) - t);
      if (f < best) best = f, best_t = t;
    }
    worst_grid = std::max({worst_grid, std::abs(x(0, 1) - best_t),
                           std::abs(x(0, 0) - 0.5), std::abs(x(1, 1) - 0.5)});
  }
  double worst_oracle = 0;
  for (int n : {10, 50}) {
    const SymmetricMatrix y = RandomSymmetric(n, 1.0 / n, rng);
    const Eigen::MatrixXd oracle = ProjectedGradientOracle(y.dense(), rng);
    const Eigen::MatrixXd x = ProjectToK(y, tight)->result.dense();
    worst_oracle = std::max(worst_oracle, (x - oracle).norm() / oracle.norm());
  }
  double worst_expansion = -1e300, worst_pythagoras = -1e300;
  for (int probe = 0; probe < 100; ++probe) {
    const SymmetricMatrix a = RandomSymmetric(12, 0.3, rng);
    const SymmetricMatrix b = RandomSymmetric(12, 0.3, rng);
    const Eigen::MatrixXd pa = ProjectToK(a, tight)->result.dense();
    const Eigen::MatrixXd pb = ProjectToK(b, tight)->result.dense();
    worst_expansion =
        std::max(worst_expansion, (pa - pb).norm() - (a - b).FrobeniusNorm());
    worst_pythagoras = std::max(
        worst_pythagoras, (a.dense() - pa).squaredNorm() +
                              (pa - pb).squaredNorm() -
                              (a.dense() - pb).squaredNorm());
  }
  const bool ok = worst_grid <= 1e-6 && worst_oracle <= 1e-5 &&
                  worst_expansion <= 1e-7 && worst_pythagoras <= 1e-7;
  return {ok, absl::StrFormat("n=2 grid gap %.2e, oracle rel %.2e, "
                              "expansion %.2e, pythagoras %.2e",
                              worst_grid, worst_oracle, worst_expansion,
                              worst_pythagoras)};
}

Outcome Sensitivity() {
  const auto start = Clock::now();
  Rng rng(MixSeed(4, 0));
  const int n = 100;
  const double d = 20, gamma = 0.8;
  const Graph g = *SampleSbm(
      {.n = n, .d = d, .gamma = gamma, .x = LabelVector::Balanced(n)}, rng);
  absl::StatusOr<SensitivityProbeResult> r =
      SensitivityProbe(g, d, gamma, 50, rng);
  if (!r.ok()) return {false, std::string(r.status().message())};
  const double secs = Seconds(start);
  return {r->max_sq_distance <= 0.015 && secs < 120.0,
          absl::StrFormat("max ||q(Y)-q(Y')||^2 = %.5f over 50 toggles, %.1fs",
                          r->max_sq_distance, secs)};
}

absl::StatusOr<SweepResult> Sweep(const std::string& config) {
  absl::StatusOr<SweepConfig> cfg = LoadSweepConfig(ConfigPath(config));
  if (!cfg.ok()) return cfg.status();
  return RunSweep(*cfg);
}

Outcome WeakRecoveryErrors() {
  const auto start = Clock::now();
  absl::StatusOr<SweepResult> np = Sweep("weak_nonprivate.json");
  if (!np.ok()) return {false, std::string(np.status().message())};
  absl::StatusOr<SweepResult> p = Sweep("weak_private.json");
  if (!p.ok()) return {false, std::string(p.status().message())};
  const double e_np = np->summaries[0].mean_err;
  const double e_p = p->summaries[0].mean_err;
  const double secs = Seconds(start);
  return {e_np <= 0.15 && e_p <= 0.35 && secs < 300.0,
          absl::StrFormat("mean err non-private %.3f (<= 0.15), private %.3f "
                          "(<= 0.35), %.0fs",
                          e_np, e_p, secs)};
}

Outcome ExactRecoveryRate() {
  const auto start = Clock::now();
  absl::StatusOr<SweepResult> r = Sweep("exact_recovery.json");
  if (!r.ok()) return {false, std::string(r.status().message())};
  const CellSummary& s = r->summaries[0];
  const double secs = Seconds(start);
  return {s.exact_successes >= 20 && secs < 600.0,
          absl::StrFormat("err = 0 in %d/%d trials (>= 20), mean err %.3f, "
                          "%.0fs",
                          s.exact_successes, s.trials, s.mean_err, secs)};
}

Outcome ErrTriangle() {
  Rng rng(MixSeed(7, 0));
  int violations = 0;
  for (int t = 0; t < 100000; ++t) {
    const int n = 3 + static_cast<int>(rng.UniformIndex(62));
    const LabelVector a = LabelVector::Random(n, rng);
    const LabelVector b = LabelVector::Random(n, rng);
    const LabelVector c = LabelVector::Random(n, rng);
    violations += *Err(a, c) > *Err(a, b) + *Err(b, c) + 1e-15;
  }
  return {violations == 0,
          absl::StrFormat("%d violations in 100000 triples", violations)};
}

Outcome HistogramGuarantee() {
  const HistogramConfig cfg{.offset = 0.0,
                            .bin_width = 1.0,
                            .alpha = 0.1,
                            .beta = 0.05,
                            .budget = {.epsilon = 1, .delta = 1e-6}};
  const int64_t n = HistogramMinSamples(cfg);
  int good = 0;
  for (int run = 0; run < 200; ++run) {
    Rng rng(MixSeed(8, run));
    std::vector<Eigen::VectorXd> points;
    for (int64_t i = 0; i < n; ++i) {
      points.push_back(
          Eigen::VectorXd::NullaryExpr(3, [&] { return rng.Normal(); }));
    }
    const Histogram noisy = *HistogramLearner(points, cfg, rng);
    const Histogram truth = TrueHistogram(points, 0.0, 1.0);
    double worst = 0;
    for (const auto& [bin, f] : truth) {
      worst = std::max(worst,
                       std::abs(f - (noisy.contains(bin) ? noisy.at(bin) : 0)));
    }
    for (const auto& [bin, g] : noisy) {
      if (!truth.contains(bin)) worst = std::max(worst, g);
    }
    good += worst <= cfg.alpha;
  }
  return {good >= 190, absl::StrFormat("max error <= alpha in %d/200 runs "
                                       "(n = %d)",
                                       good, n)};
}

Outcome GmmPipeline() {
  const auto start = Clock::now();
  absl::StatusOr<SweepConfig> cfg = LoadSweepConfig(ConfigPath("gmm_desk.json"));
  if (!cfg.ok()) return {false, std::string(cfg.status().message())};
  absl::StatusOr<SweepResult> r = RunSweep(*cfg);
  if (!r.ok()) return {false, std::string(r.status().message())};
  int good = 0;
  for (const TrialRecord& row : r->rows) {
    good += row.status == TrialStatus::kOk && row.err <= 0.5;
  }
  const PrivacyBudget b{.epsilon = cfg->grid.epsilon[0],
                        .delta = cfg->grid.delta[0]};
  absl::StatusOr<ResolvedScales> scales =
      ResolveScales(PipelineScaleProfile::Paper(), cfg->grid.n[0],
                    cfg->grid.k[0], cfg->grid.delta_sep[0], b);
  if (!scales.ok()) return {false, std::string(scales.status().message())};
  const BudgetReport report =
      PipelineBudgetReport(b, cfg->grid.k[0], *scales, true);
  const bool budget_ok =
      std::abs(report.paper_total.epsilon - 5 * b.epsilon) <= 1e-12 &&
      std::abs(report.paper_total.delta - 5 * b.delta) <= 1e-18;
  const double secs = Seconds(start);
  return {good >= 20 && budget_ok && secs < 600.0,
          absl::StrFormat("matched error <= 0.5 in %d/%d runs (>= 20); paper "
                          "total (%g, %g); %.0fs",
                          good, static_cast<int>(r->rows.size()),
                          report.paper_total.epsilon, report.paper_total.delta,
                          secs)};
}

Outcome LowerBoundGolden() {
  absl::StatusOr<LowerBoundValue> v = LowerBoundCurve(
      {.zeta = 0.01, .eta = 0.01, .gamma = 0.5, .d = 100, .n = 10000});
  if (!v.ok()) return {false, std::string(v.status().message())};
  const double golden = 0.015475812471495756;
  return {std::abs(v->epsilon - golden) <= 1e-12,
          absl::StrFormat("epsilon %.17g vs %.17g", v->epsilon, golden)};
}

std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome CliReruns() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() /
                       absl::StrCat("privrec_acceptance_", ::getpid());
  fs::create_directories(dir);
  const std::string exe = PRIVREC_ESTIMATE_PATH;
  const std::string smoke = ConfigPath("smoke/");
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"weak", "sbm-weak --config " + smoke + "weak.json"},
      {"weak_np", "sbm-weak --non-private --config " + smoke + "weak.json"},
      {"exact", "sbm-exact --config " + smoke + "exact.json"},
      {"expmech", "sbm-expmech --config " + smoke + "expmech.json"},
      {"gmm", "gmm --config " + smoke + "gmm.json"},
      {"lower", "lower-bound --zeta 0.01 --eta 0.01 --gamma 0.5 --d 100 "
                "--n 10000"},
      {"audit", "audit --mechanism laplace-count --eps 1 --trials 20000"},
  };
  int identical = 0;
  std::string mismatched;
  for (const auto& [name, args] : commands) {
    std::string outputs[2];
    bool ran = true;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path stdout_path = dir / absl::StrCat(name, rep, ".out");
      const fs::path csv_path = dir / absl::StrCat(name, rep, ".csv");
      std::string cmd = exe + " " + args;
      if (name != "lower" && name != "audit") {
        cmd += " --out " + csv_path.string();
      }
      cmd += " > " + stdout_path.string();
      ran &= std::system(cmd.c_str()) == 0;
      outputs[rep] = ReadAll(stdout_path) + ReadAll(csv_path);
    }
    if (ran && !outputs[0].empty() && outputs[0] == outputs[1]) {
      ++identical;
    } else {
      mismatched += " " + name;
    }
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(commands.size()),
          absl::StrFormat("%d/%d subcommand runs byte-identical%s", identical,
                          static_cast<int>(commands.size()),
                          mismatched.empty() ? "" : "; differ:" + mismatched)};
}

}  // namespace
}  // namespace privrec

int main(int argc, char** argv) {
  using privrec::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria =
      {
          {"mechanism tails", privrec::MechanismTails},
          {"exact expmech audit", privrec::ExactExpMechAudit},
          {"projection correctness", privrec::ProjectionCorrectness},
          {"projection sensitivity", privrec::Sensitivity},
          {"weak recovery error", privrec::WeakRecoveryErrors},
          {"exact recovery rate", privrec::ExactRecoveryRate},
          {"err triangle inequality", privrec::ErrTriangle},
          {"histogram guarantee", privrec::HistogramGuarantee},
          {"gmm pipeline", privrec::GmmPipeline},
          {"lower-bound golden value", privrec::LowerBoundGolden},
          {"cli reruns", privrec::CliReruns},
      };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const Outcome o = criteria[i].second();
    std::printf("%s criterion %2d %-26s %s\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
