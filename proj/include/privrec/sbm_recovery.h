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

// Community recovery under edge differential privacy:
//   * weak recovery: project Y(G) onto K, add symmetric Gaussian noise, round
//     the leading eigenvector;
//   * majority voting: Laplace-noised neighbor votes against a rough estimate;
//   * exact recovery: split the graph, weak recovery on one half, vote on the
//     other;
//   * exponential-mechanism recovery: sample labels from the Gibbs law with
//     log-weights (eps / 2 Delta) <x, Y(G) x>, exactly for n <= 20.

#ifndef PRIVREC_SBM_RECOVERY_H_
#define PRIVREC_SBM_RECOVERY_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "privrec/convex_projection.h"
#include "privrec/dp_mechanisms.h"
#include "privrec/rng.h"
#include "privrec/sbm_model.h"

namespace privrec {

struct WeakRecoveryConfig {
  double d = 0.0;
  double gamma = 0.0;
  // std::nullopt selects the non-private baseline: the noise matrix is
  // exactly zero.
  std::optional<PrivacyBudget> budget;
  // The solver tolerance should sit well below the noise scale (tol <=
  // sigma / 100).
  ProjectionOptions projection;
  // Flip the fewest smallest-|v_i| entries so that the output is balanced.
  bool balance = false;

  absl::Status Validate() const;
};

// Per-entry standard deviation of the symmetric noise matrix:
// sqrt(24 / (n gamma d) * log(2 / delta) / eps^2).
absl::StatusOr<double> WeakRecoveryNoiseSigma(int n, double d, double gamma,
                                              const PrivacyBudget& budget);

// Symmetric n x n Gaussian matrix: upper triangle (diagonal included) drawn
// i.i.d. N(0, sigma^2) and mirrored.
SymmetricMatrix SampleSymmetricGaussian(int n, double sigma, Rng& rng);

// Flips the minimum number of entries, choosing those with the smallest
// |scores_i|, so that the labels sum to zero (n even) or to +-1 (n odd).
LabelVector BalanceLabels(const LabelVector& labels,
                          const Eigen::VectorXd& scores);

struct WeakRecoveryResult {
  LabelVector labels;
  bool is_private = false;
  double noise_sigma = 0.0;
  PrivacyBudget budget;
  ProjectionReport projection;
  double leading_eigenvalue = 0.0;
};

// Fails with the projection's diagnostics if the solver does not converge.
absl::StatusOr<WeakRecoveryResult> WeakRecovery(const Graph& g,
                                                const WeakRecoveryConfig& cfg,
                                                Rng& rng);

struct VoteRecord {
  int same = 0;       // S_v: neighbors with the same rough label
  int different = 0;  // D_v: neighbors with the other rough label
  int z = 0;          // S_v - D_v
  double noise = 0.0;
  int decision = 1;
};

struct MajorityVoteOptions {
  // Replaces the Laplace draws by exact zeros. Test hook only.
  bool zero_noise = false;
};

struct MajorityVoteResult {
  LabelVector labels;
  std::vector<VoteRecord> votes;
};

// x_v = sign(Z_v + Lap(2/eps)) * rough_v with sign(0) := +1.
absl::StatusOr<MajorityVoteResult> PrivateMajorityVote(
    const Graph& g, const LabelVector& rough, double epsilon, Rng& rng,
    const MajorityVoteOptions& options = {});

// Sufficient conditions under which exact recovery is guaranteed. The
// privacy-side condition alpha - beta >= C (log(2/delta)/(eps^2 log n) + 1/eps)
// carries an unspecified constant; it is evaluated with `constant`.
struct ExactRecoveryAdmissibility {
  double sqrt_gap = 0.0;  // sqrt(alpha) - sqrt(beta)
  bool sqrt_gap_ok = false;  // sqrt_gap >= 16
  double privacy_requirement = 0.0;
  bool privacy_ok = false;
  double constant = 1.0;
};

ExactRecoveryAdmissibility CheckExactRecoveryAdmissibility(
    double alpha, double beta, int n, const PrivacyBudget& budget,
    double constant = 1.0);

struct ExactRecoveryOptions {
  ProjectionOptions projection;
  bool balance_rough = false;
};

struct ExactRecoveryResult {
  LabelVector labels;
  LabelVector rough;
  std::vector<VoteRecord> votes;
  WeakRecoveryResult weak;
  // Per stage and total (sum) privacy cost.
  PrivacyBudget weak_budget;
  PrivacyBudget vote_budget;
  PrivacyBudget total_budget;
  std::optional<ExactRecoveryAdmissibility> admissibility;
};

// Splits g with p = 1/2, runs WeakRecovery on the first half (with degree
// scale d/2, the expected degree of a half) under `budget` and then
// PrivateMajorityVote on the second half with `budget.epsilon`.
absl::StatusOr<ExactRecoveryResult> ExactRecovery(
    const Graph& g, double d, double gamma, const PrivacyBudget& budget,
    Rng& rng, const ExactRecoveryOptions& options = {});

// (alpha, beta) form: converts to (d, gamma) and attaches the admissibility
// report.
absl::StatusOr<ExactRecoveryResult> ExactRecoveryAlphaBeta(
    const Graph& g, double alpha, double beta, const PrivacyBudget& budget,
    Rng& rng, const ExactRecoveryOptions& options = {});

enum class ExpMechMode { kExact, kMetropolis };

struct ExpMechConfig {
  double epsilon = 1.0;
  ExpMechMode mode = ExpMechMode::kExact;
  int64_t chain_steps = 0;  // metropolis only
  // Split the graph, sample on the first half and boost with majority voting
  // on the second.
  bool boost = false;

  absl::Status Validate(int n) const;
};

inline constexpr int kMaxExactStates = 20;

// s_G(x) = <x, Y x>.
double GibbsScore(const SymmetricMatrix& y, const LabelVector& x);

// Natural-log pmf over all 2^n labelings. Index bit i set means x_i = -1.
// Log-weights are (eps / (2 Delta)) s(x) with Delta = 2 / (gamma d),
// normalized by log-sum-exp.
absl::StatusOr<std::vector<double>> ExactGibbsLogPmf(const Graph& g, double d,
                                                     double gamma,
                                                     double epsilon);

LabelVector LabelsFromIndex(uint64_t index, int n);
uint64_t IndexFromLabels(const LabelVector& x);

struct ExpMechResult {
  LabelVector labels;
  LabelVector sampled;  // the exponential-mechanism draw before boosting
  bool is_private = true;  // false for metropolis mode
  std::string sampler;
  PrivacyBudget total_budget;
};

absl::StatusOr<ExpMechResult> ExpMechRecovery(const Graph& g, double d,
                                              double gamma,
                                              const ExpMechConfig& cfg,
                                              Rng& rng);

// Preconditions of the exponential-mechanism utility guarantee at error rate
// zeta; reported, not asserted.
struct ExpMechAdmissibility {
  bool gamma_sqrt_d_ok = false;  // gamma sqrt(d) >= 12800
  bool zeta_lower_ok = false;    // zeta >= 2 exp(-gamma^2 d / 512)
  bool epsilon_ok = false;       // eps >= 64 log(2/zeta) / (gamma d)
  bool small_error_branch_ok = false;  // zeta <= exp(-640)
};

ExpMechAdmissibility CheckExpMechAdmissibility(double d, double gamma,
                                               double epsilon, double zeta);

nlohmann::json ToJson(const LabelVector& labels, const PrivacyBudget& budget,
                      const nlohmann::json& diagnostics);

}  // namespace privrec

#endif  // PRIVREC_SBM_RECOVERY_H_
