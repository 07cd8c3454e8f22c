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

// Seeded Monte Carlo sweeps, the lower-bound reference curve and the
// empirical privacy auditor.
//
// Seeds: cell c of a sweep with master seed s uses MixSeed(s, c); trial t of
// that cell uses MixSeed(MixSeed(s, c), t). Rows are written in (cell, trial)
// order whatever the thread count.

#ifndef PRIVREC_EXPERIMENTS_H_
#define PRIVREC_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "privrec/convex_projection.h"
#include "privrec/gmm_pipeline.h"
#include "privrec/rng.h"
#include "privrec/sbm_model.h"

namespace privrec {

enum class ExperimentKind { kSbmWeak, kSbmExact, kSbmExpMech, kGmm };

std::string ExperimentKindName(ExperimentKind kind);
absl::StatusOr<ExperimentKind> ParseExperimentKind(const std::string& name);

// Axes of the parameter grid. Each kind reads only its own axes:
//   sbm-weak:    n, d, gamma, epsilon, delta
//   sbm-exact:   n, alpha, beta, epsilon, delta
//   sbm-expmech: n, d, gamma, epsilon
//   gmm:         n, k, dim, delta_sep, epsilon, delta
// In non-private sbm-weak runs epsilon and delta are ignored.
struct SweepGrid {
  std::vector<int> n;
  std::vector<double> d;
  std::vector<double> gamma;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> epsilon;
  std::vector<double> delta;
  std::vector<int> k;
  std::vector<int> dim;
  std::vector<double> delta_sep;
};

struct SweepConfig {
  ExperimentKind kind = ExperimentKind::kSbmWeak;
  SweepGrid grid;
  int trials = 1;
  uint64_t seed = 0;
  std::string output;  // CSV path; empty means the caller picks a stream
  int threads = 1;
  // Adds a wall-clock column. Off by default so that output stays a pure
  // function of (config, seed).
  bool record_wall_time = false;

  // sbm-weak
  bool non_private = false;
  bool balance = false;
  // sbm-exact
  bool balance_rough = false;
  // sbm-weak and sbm-exact
  ProjectionOptions projection;
  // sbm-expmech
  bool boost = false;
  // gmm
  PipelineScaleProfile profile = PipelineScaleProfile::Desk();
  MembershipOptions membership;

  absl::Status Validate() const;
};

// Unknown keys are errors. "profile" is either a preset name or an object
// accepted by ProfileFromJson.
absl::StatusOr<SweepConfig> SweepConfigFromJson(const nlohmann::json& j);
absl::StatusOr<SweepConfig> LoadSweepConfig(const std::string& path);
nlohmann::json ToJson(const SweepConfig& cfg);

inline constexpr int kSweepCsvVersion = 1;

// One grid point, as (axis name, value) in column order.
using SweepCell = std::vector<std::pair<std::string, double>>;

// Cartesian product of the axes the kind reads, first axis slowest.
absl::StatusOr<std::vector<SweepCell>> ExpandGrid(const SweepConfig& cfg);

enum class TrialStatus { kOk, kRejected, kNotConverged };

struct TrialRecord {
  int cell = 0;
  int trial = 0;
  uint64_t seed = 0;
  TrialStatus status = TrialStatus::kOk;
  // err(labels, truth) for SBM kinds; matched-center error for accepted gmm
  // runs, NaN otherwise.
  double err = 0.0;
  std::string reject_stage;
  PrivacyBudget budget;  // composed cost of the run; zero when non-private
  double wall_seconds = 0.0;
};

struct CellSummary {
  int cell = 0;
  SweepCell params;
  int trials = 0;
  int ok = 0;
  int rejected = 0;
  int not_converged = 0;
  double mean_err = 0.0;  // over ok trials
  double max_err = 0.0;
  int exact_successes = 0;  // ok trials with err == 0
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<TrialRecord> rows;  // (cell, trial) order
  std::vector<CellSummary> summaries;
  int not_converged = 0;
};

// Runs one trial; exposed for tests.
absl::StatusOr<TrialRecord> RunTrial(const SweepConfig& cfg,
                                     const SweepCell& cell, int cell_index,
                                     int trial);

absl::StatusOr<SweepResult> RunSweep(const SweepConfig& cfg);

// Header "csv_version,kind,cell,trial,seed,<axes>,status,err,reject_stage,
// budget_epsilon,budget_delta[,wall_seconds]".
absl::Status WriteSweepCsv(const SweepConfig& cfg, const SweepResult& result,
                           std::ostream& out);

nlohmann::json SweepSummaryJson(const SweepConfig& cfg,
                                const SweepResult& result);

// Shortest round-trip decimal form.
std::string FormatDouble(double v);

struct LowerBoundQuery {
  double zeta = 0.01;
  double eta = 0.01;
  double gamma = 0.5;
  double d = 100.0;
  int n = 10000;

  absl::Status Validate() const;
};

// Reference curve with the hidden constant set to 1: the epsilon solving
//   e^{2 eps} - 1 = log(1/(8 e zeta))/(gamma d) + log(1/eta)/(zeta n gamma d).
// This is a normalization of an asymptotic statement, not a certified bound.
struct LowerBoundValue {
  double epsilon = 0.0;
  double rhs = 0.0;
  double constant = 1.0;
  std::string label = "REFERENCE";
};

absl::StatusOr<LowerBoundValue> LowerBoundCurve(const LowerBoundQuery& q);
nlohmann::json ToJson(const LowerBoundQuery& q, const LowerBoundValue& v);

// A randomized algorithm on graphs with discrete outputs.
using DiscreteMechanism = std::function<absl::StatusOr<int64_t>(const Graph&,
                                                                Rng&)>;

struct AuditOptions {
  double epsilon_claimed = 1.0;
  double delta = 0.0;
  int64_t trials = 10000;
  // Family-wise normal quantile. Each of the 2 * cells one-sided intervals
  // uses sqrt(z^2 + 2 log(2 cells)).
  double z = 3.0;
};

struct AuditResult {
  // max over cells and both directions of log((p - delta) / p') with
  // add-one smoothed frequencies p, p'.
  double epsilon_hat = 0.0;
  // The same maximum with p replaced by its Wilson lower bound and p' by its
  // Wilson upper bound (raw frequencies, no smoothing).
  double epsilon_lower = 0.0;
  double slack = 0.0;  // epsilon_hat - epsilon_lower
  double epsilon_claimed = 0.0;
  bool violation = false;  // epsilon_lower > epsilon_claimed
  bool exact = false;
  int64_t trials = 0;
  int cells = 0;
};

nlohmann::json ToJson(const AuditResult& r);

// Runs `mechanism` `trials` times on each graph. Fails when the trial count
// is too small for any cell to ever exceed epsilon_claimed at the requested
// confidence (trials <= z^2 e^eps).
absl::StatusOr<AuditResult> AuditAdjacentPair(const DiscreteMechanism& mechanism,
                                              const Graph& g,
                                              const Graph& g_adjacent,
                                              const AuditOptions& options,
                                              Rng& rng);

// Exact audit for a mechanism whose log-pmf over a finite output set is
// known: max |log p(o) - log p'(o)| over outputs and over every adjacent
// pair supplied.
struct ExactAuditInput {
  std::vector<double> log_pmf;
  std::vector<std::vector<double>> adjacent_log_pmfs;
};
absl::StatusOr<AuditResult> AuditExact(const ExactAuditInput& input,
                                       double epsilon_claimed);

enum class AuditMechanismId {
  kConstant,
  kEdgeCount,     // non-private: releases |E|
  kLaplaceCount,  // |E| + Lap(1/eps), rounded to bins of width 1/(2 eps)
  kExpMechExact,  // exact Gibbs pmfs, all n(n-1)/2 toggles
};

absl::StatusOr<AuditMechanismId> ParseAuditMechanism(const std::string& id);
std::string AuditMechanismName(AuditMechanismId id);

struct AuditRunConfig {
  AuditMechanismId mechanism = AuditMechanismId::kConstant;
  AuditOptions options;
  // Audited graph: SBM(n, d, gamma) on balanced labels; its neighbor toggles
  // the pair (0, 1).
  int n = 8;
  double d = 4.0;
  double gamma = 0.5;
  uint64_t seed = 0;
};

absl::StatusOr<AuditResult> RunAudit(const AuditRunConfig& cfg);

}  // namespace privrec

#endif  // PRIVREC_EXPERIMENTS_H_
