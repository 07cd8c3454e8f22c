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

// Private center recovery for uniform mixtures of identity-covariance
// Gaussians.
//
// Stages: membership matrix W -> soft threshold phi -> truncated-Laplace norm
// gate -> local means nu -> subsample S + Gaussian noise -> JL projection and
// private histogram -> noisy per-bin averages.
//
// The membership matrix is the minimizer of
//   ||W||_F^2 - c_J <J, W> - lambda_sim sum_ij W_ij s_ij
// over {W PSD, 0 <= W_ij <= 1, row sums <= n/k}. This is a degree-2 convex
// relaxation; the similarity term s_ij reads the data directly and is off
// (lambda_sim = 0) unless a caller opts in for a utility demo.

#ifndef PRIVREC_GMM_PIPELINE_H_
#define PRIVREC_GMM_PIPELINE_H_

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "privrec/dp_mechanisms.h"
#include "privrec/rng.h"

namespace privrec {

struct MixtureDataset {
  Eigen::MatrixXd points;  // n x d, one point per row
  std::vector<int> truth;  // component per point; empty when unknown
  Eigen::MatrixXd means;   // k x d; empty when unknown
  double delta_sep = 0.0;

  int n() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  absl::Status Validate() const;
};

// Means sit at pairwise distance >= delta_sep: (delta_sep / sqrt 2) e_l when
// d >= k, otherwise a greedy max-min choice from the lattice delta_sep Z^d.
absl::StatusOr<Eigen::MatrixXd> PlaceMeans(int k, int d, double delta_sep);

absl::StatusOr<MixtureDataset> SampleMixture(int k, int d, double delta_sep,
                                             int n, Rng& rng);

// CSV: header "x0,...,x{d-1}[,label]" then one point per row. A file without
// a header is read as coordinates only.
absl::Status WriteMixtureCsv(const MixtureDataset& ds, std::ostream& out);
absl::StatusOr<MixtureDataset> ReadMixtureCsv(std::istream& in,
                                              double delta_sep);

// Every exponent and constant the pipeline hard-codes. Unset optionals fall
// back to the paper's formula.
struct PipelineScaleProfile {
  std::string name = "paper";
  double subsample_exponent = 0.01;       // |S| = max(1, ceil(n^c))
  std::optional<int> subsample_size;      // |S| = min(n, value)
  double gate_scale_exponent = 1.6;
  double gate_reject_exponent = 1.7;
  double gate_slack_exponent = 0.1;
  double nu_noise_exponent = 0.18;
  std::optional<int> jl_dim;              // default ceil(100 log n)
  std::optional<double> bin_width_sep_fraction;  // b = value * delta_sep
  std::optional<double> hist_alpha;       // default k^-10
  std::optional<double> hist_beta;        // default n^-10
  std::optional<double> hist_eps_factor;  // default 10 k^50 / n^0.01
  // false: variance 32 k^-120 log(2kn/delta) / eps^2.
  // true: Gaussian mechanism at (eps*/k, delta*/k) with sensitivity
  //       2 sqrt(d*) b (2k / |S|).
  bool calibrated_final_noise = false;
  std::optional<double> objective_coeff;  // default 1e10 k^300
  // Test hook: zero noise in the nu and final release stages.
  bool zero_noise = false;

  static PipelineScaleProfile Paper();
  static PipelineScaleProfile Desk();

  absl::Status Validate() const;
};

nlohmann::json ToJson(const PipelineScaleProfile& profile);

// Starts from the preset named by "name" ("paper" or "desk") and applies the
// remaining keys as overrides.
absl::StatusOr<PipelineScaleProfile> ProfileFromJson(const nlohmann::json& j);

// Profile values evaluated at a concrete (n, k, delta_sep, budget).
struct ResolvedScales {
  int n = 0;
  int k = 0;
  int subsample_size = 0;
  double gate_scale = 0.0;
  double gate_reject = 0.0;
  double gate_slack = 0.0;
  double nu_noise_variance = 0.0;
  int jl_dim = 0;
  double bin_width = 0.0;
  double hist_alpha = 0.0;
  double hist_beta = 0.0;
  double eps_star = 0.0;
  double delta_star = 0.0;
  double release_sensitivity = 0.0;
  double final_noise_sigma = 0.0;
  double objective_coeff = 0.0;
  bool zero_noise = false;
};

nlohmann::json ToJson(const ResolvedScales& scales);

absl::StatusOr<ResolvedScales> ResolveScales(
    const PipelineScaleProfile& profile, int n, int k, double delta_sep,
    const PrivacyBudget& budget);

struct MembershipOptions {
  double similarity_weight = 0.0;  // lambda_sim
  std::optional<double> similarity_scale;  // sigma_s; default delta_sep / 2
  double step = 0.5;
  double tol = 1e-6;  // on ||W_{t+1} - W_t||_F
  int max_iters = 100;
  double projection_tol = 1e-4;
  int projection_max_iters = 2000;
};

struct MembershipResult {
  Eigen::MatrixXd w;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;
  double box_violation = 0.0;
  double row_sum_violation = 0.0;
  double psd_violation = 0.0;
  int projection_iterations = 0;  // of the last projection
  double projection_distance_bound = 0.0;
};

nlohmann::json ToJson(const MembershipResult& result);

struct MembershipProjection {
  Eigen::MatrixXd w;
  int iterations = 0;
  bool converged = false;
  // Certified upper bound on ||w - P_C(m)||_F from a dual point.
  double distance_bound = 0.0;
};

// Euclidean projection of a symmetric matrix onto
// {W PSD, 0 <= W_ij <= 1, row sums <= row_bound}. The box and row-sum part is
// solved exactly through its row multipliers; if that point is not PSD, ADMM
// splits off the PSD cone and stops once its primal and dual residuals are
// below `tol` relative to ||x|| and ||m||. The output is always feasible: a
// final blend with the identity removes any remaining negative eigenvalue.
absl::StatusOr<MembershipProjection> ProjectMembershipSet(
    const Eigen::MatrixXd& m, double row_bound, double tol, int max_iters);

// Similarity scores s_ij = exp(-||y_i - y_j||^2 / (2 sigma_s^2)).
Eigen::MatrixXd SimilarityMatrix(const Eigen::MatrixXd& points,
                                 double sigma_s);

// Projected gradient on the objective above. A run that exhausts max_iters
// returns converged = false with the last iterate.
absl::StatusOr<MembershipResult> ComputeMembership(
    const MixtureDataset& ds, int k, double objective_coeff,
    const MembershipOptions& options);

// 0 below 0.8, 1 above 0.9, linear between; input clamped to [0, 1] first.
double SoftThreshold(double x);
Eigen::MatrixXd SoftThreshold(const Eigen::MatrixXd& w);

struct GateResult {
  bool accepted = false;
  double tau = 0.0;
  double phi_l1 = 0.0;     // ||phi(W)||_1
  double threshold = 0.0;  // (n^2/k)(1 - n^-slack - k^-100) + tau
  bool tau_out_of_range = false;
};

nlohmann::json ToJson(const GateResult& gate);

// tau ~ tLap(-s (1 + log(1/delta)/eps), s/eps) with s = n^gate_scale;
// rejects if |tau| >= n^gate_reject or ||phi(W)||_1 <= threshold.
absl::StatusOr<GateResult> NormGate(const Eigen::MatrixXd& w, int k,
                                    const PrivacyBudget& budget,
                                    const ResolvedScales& scales, Rng& rng);

// Row i: sum_j phi(W_ij) y_j / ||phi(W_i)||_1, or zero for an all-zero row.
absl::StatusOr<Eigen::MatrixXd> LocalMeans(const Eigen::MatrixXd& w,
                                           const Eigen::MatrixXd& points);

struct Subsample {
  std::vector<int> indices;  // ascending
  Eigen::MatrixXd nubars;    // |S| x d
};

// Uniform |S|-subset of rows without replacement, then i.i.d.
// N(0, scales.nu_noise_variance) per coordinate.
absl::StatusOr<Subsample> PrivatizeSubsample(const Eigen::MatrixXd& nus,
                                             const ResolvedScales& scales,
                                             Rng& rng);

struct ReleaseResult {
  bool accepted = false;
  std::string reason;
  Eigen::MatrixXd centers;  // k x d, filled only when accepted
  std::vector<BinIndex> bins;
  std::vector<int> bin_counts;
  std::vector<double> bin_frequencies;
  double offset = 0.0;
};

// d_star x d matrix with i.i.d. N(0, 1/d_star) entries, filled row by row.
Eigen::MatrixXd SampleJlMatrix(int d_star, int d, Rng& rng);

// JL projection, private histogram, top-k bins, small-bin rejection and noisy
// per-bin averages of the unprojected rows.
absl::StatusOr<ReleaseResult> ClusterAndRelease(const Eigen::MatrixXd& nubars,
                                                int k,
                                                const ResolvedScales& scales,
                                                Rng& rng);

struct BudgetStage {
  std::string stage;
  PrivacyBudget budget;
  int count = 1;
};

struct BudgetReport {
  std::vector<BudgetStage> stages;
  // Plain sum of the stages.
  PrivacyBudget composed;
  // Gate (eps, delta) + privatized tail (3 eps, 3 delta) + failure slack
  // (eps, delta); equals (5 eps, 5 delta).
  PrivacyBudget paper_total;
  bool paper_profile = false;
};

nlohmann::json ToJson(const BudgetReport& report);

BudgetReport PipelineBudgetReport(const PrivacyBudget& budget, int k,
                                  const ResolvedScales& scales,
                                  bool paper_profile);

struct GmmPipelineConfig {
  int k = 2;
  PrivacyBudget budget{.epsilon = 1.0, .delta = 1e-6};
  PipelineScaleProfile profile;
  MembershipOptions membership;

  absl::Status Validate() const;
};

struct GmmPipelineResult {
  bool accepted = false;
  std::string reject_stage;  // "gate" or "release"
  std::string reason;
  Eigen::MatrixXd centers;
  ResolvedScales scales;
  MembershipResult membership;
  GateResult gate;
  std::vector<int> subsample;
  BudgetReport budget_report;
  bool uses_data_similarity = false;
};

absl::StatusOr<GmmPipelineResult> RunGmmPipeline(const MixtureDataset& ds,
                                                 const GmmPipelineConfig& cfg,
                                                 Rng& rng);

// {status, centers, budget_report, profile, diagnostics}.
nlohmann::json ToJson(const GmmPipelineResult& result,
                      const PipelineScaleProfile& profile);

// min over matchings pi of max_l ||centers_l - means_pi(l)||; k <= 9.
absl::StatusOr<double> MatchedCenterError(const Eigen::MatrixXd& centers,
                                          const Eigen::MatrixXd& means);

}  // namespace privrec

#endif  // PRIVREC_GMM_PIPELINE_H_
