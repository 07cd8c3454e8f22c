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

#include "privrec/sbm_recovery.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privrec {

absl::Status WeakRecoveryConfig::Validate() const {
  if (!(d > 0.0) || !(gamma > 0.0)) {
    return absl::InvalidArgumentError("need gamma * d > 0");
  }
  if (budget.has_value()) {
    if (absl::Status s = budget->Validate(); !s.ok()) return s;
    if (!(budget->epsilon > 0.0) || !(budget->delta > 0.0)) {
      return absl::InvalidArgumentError(
          "private weak recovery needs epsilon > 0 and delta > 0");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> WeakRecoveryNoiseSigma(int n, double d, double gamma,
                                              const PrivacyBudget& budget) {
  if (n < 1 || !(d > 0.0) || !(gamma > 0.0)) {
    return absl::InvalidArgumentError("need n >= 1 and gamma * d > 0");
  }
  if (!(budget.epsilon > 0.0) || !(budget.delta > 0.0)) {
    return absl::InvalidArgumentError("need epsilon > 0 and delta > 0");
  }
  const double variance = 24.0 / (n * gamma * d) *
                          std::log(2.0 / budget.delta) /
                          (budget.epsilon * budget.epsilon);
  return std::sqrt(variance);
}

SymmetricMatrix SampleSymmetricGaussian(int n, double sigma, Rng& rng) {
  SymmetricMatrix w(n);
  if (sigma == 0.0) return w;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) w.Set(i, j, sigma * rng.Normal());
  }
  return w;
}

LabelVector BalanceLabels(const LabelVector& labels,
                          const Eigen::VectorXd& scores) {
  const int n = labels.size();
  const int sum = std::accumulate(labels.entries().begin(),
                                  labels.entries().end(), 0);
  const int flips = std::abs(sum) / 2;
  if (flips == 0) return labels;
  const int majority = sum > 0 ? 1 : -1;
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i) {
    if (labels[i] == majority) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return std::abs(scores[a]) < std::abs(scores[b]);
  });
  std::vector<int> entries = labels.entries();
  for (int k = 0; k < flips; ++k) entries[candidates[k]] = -majority;
  return *LabelVector::Create(std::move(entries));
}

absl::StatusOr<WeakRecoveryResult> WeakRecovery(const Graph& g,
                                                const WeakRecoveryConfig& cfg,
                                                Rng& rng) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (g.n() < 2) return absl::InvalidArgumentError("graph needs n >= 2");
  const int n = g.n();
  absl::StatusOr<ProjectionReport> projection =
      ProjectToK(CenterRescale(g, cfg.d, cfg.gamma), cfg.projection);
  if (!projection.ok()) return projection.status();
  if (!projection->converged) {
    return absl::AbortedError(absl::StrCat(
        "projection did not converge after ", projection->iterations,
        " iterations (duality gap ", projection->duality_gap, ")"));
  }

  WeakRecoveryResult result;
  SymmetricMatrix noisy = projection->result;
  if (cfg.budget.has_value()) {
    absl::StatusOr<double> sigma =
        WeakRecoveryNoiseSigma(n, cfg.d, cfg.gamma, *cfg.budget);
    if (!sigma.ok()) return sigma.status();
    noisy = noisy + SampleSymmetricGaussian(n, *sigma, rng);
    result.is_private = true;
    result.noise_sigma = *sigma;
    result.budget = *cfg.budget;
  }
  absl::StatusOr<Eigenpair> leading = LeadingEigenpair(noisy);
  if (!leading.ok()) return leading.status();
  result.labels = SignVector(leading->vector);
  if (cfg.balance) result.labels = BalanceLabels(result.labels, leading->vector);
  result.leading_eigenvalue = leading->value;
  result.projection = *std::move(projection);
  return result;
}

absl::StatusOr<MajorityVoteResult> PrivateMajorityVote(
    const Graph& g, const LabelVector& rough, double epsilon, Rng& rng,
    const MajorityVoteOptions& options) {
  if (rough.size() != g.n()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "rough estimate has length ", rough.size(), ", graph has ", g.n()));
  }
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  const int n = g.n();
  MajorityVoteResult result;
  result.votes.resize(n);
  for (const auto& [u, v] : g.edges()) {
    if (rough[u] == rough[v]) {
      ++result.votes[u].same;
      ++result.votes[v].same;
    } else {
      ++result.votes[u].different;
      ++result.votes[v].different;
    }
  }
  std::vector<int> labels(n);
  for (int v = 0; v < n; ++v) {
    VoteRecord& record = result.votes[v];
    record.z = record.same - record.different;
    if (!options.zero_noise) {
      absl::StatusOr<double> noise =
          SampleLaplace({.mu = 0.0, .b = 2.0 / epsilon}, rng);
      if (!noise.ok()) return noise.status();
      record.noise = *noise;
    }
    const double vote = record.z + record.noise;
    record.decision = (vote >= 0 ? 1 : -1) * rough[v];
    labels[v] = record.decision;
  }
  result.labels = *LabelVector::Create(std::move(labels));
  return result;
}

ExactRecoveryAdmissibility CheckExactRecoveryAdmissibility(
    double alpha, double beta, int n, const PrivacyBudget& budget,
    double constant) {
  ExactRecoveryAdmissibility report;
  report.constant = constant;
  report.sqrt_gap = std::sqrt(alpha) - std::sqrt(beta);
  report.sqrt_gap_ok = report.sqrt_gap >= 16.0;
  const double eps = budget.epsilon;
  report.privacy_requirement =
      constant * (std::log(2.0 / budget.delta) /
                      (eps * eps * std::log(static_cast<double>(n))) +
                  1.0 / eps);
  report.privacy_ok = alpha - beta >= report.privacy_requirement;
  return report;
}

absl::StatusOr<ExactRecoveryResult> ExactRecovery(
    const Graph& g, double d, double gamma, const PrivacyBudget& budget,
    Rng& rng, const ExactRecoveryOptions& options) {
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  auto [first, second] = SplitGraph(g, 0.5, rng);
  WeakRecoveryConfig weak_cfg{.d = 0.5 * d,
                              .gamma = gamma,
                              .budget = budget,
                              .projection = options.projection,
                              .balance = options.balance_rough};
  absl::StatusOr<WeakRecoveryResult> weak = WeakRecovery(first, weak_cfg, rng);
  if (!weak.ok()) return weak.status();
  absl::StatusOr<MajorityVoteResult> vote =
      PrivateMajorityVote(second, weak->labels, budget.epsilon, rng);
  if (!vote.ok()) return vote.status();

  ExactRecoveryResult result;
  result.labels = vote->labels;
  result.rough = weak->labels;
  result.votes = std::move(vote->votes);
  result.weak_budget = budget;
  result.vote_budget = {.epsilon = budget.epsilon, .delta = 0.0};
  const PrivacyBudget stages[] = {result.weak_budget, result.vote_budget};
  result.total_budget = Compose(stages);
  result.weak = *std::move(weak);
  return result;
}

absl::StatusOr<ExactRecoveryResult> ExactRecoveryAlphaBeta(
    const Graph& g, double alpha, double beta, const PrivacyBudget& budget,
    Rng& rng, const ExactRecoveryOptions& options) {
  absl::StatusOr<DegreeBias> params = FromAlphaBeta(alpha, beta, g.n());
  if (!params.ok()) return params.status();
  absl::StatusOr<ExactRecoveryResult> result =
      ExactRecovery(g, params->d, params->gamma, budget, rng, options);
  if (!result.ok()) return result.status();
  result->admissibility =
      CheckExactRecoveryAdmissibility(alpha, beta, g.n(), budget);
  return result;
}

absl::Status ExpMechConfig::Validate(int n) const {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  if (mode == ExpMechMode::kExact && n > kMaxExactStates) {
    return absl::InvalidArgumentError(absl::StrCat(
        "exact enumeration is limited to n <= ", kMaxExactStates, ", got ", n));
  }
  if (mode == ExpMechMode::kMetropolis && chain_steps < 1) {
    return absl::InvalidArgumentError("metropolis mode needs chain_steps >= 1");
  }
  return absl::OkStatus();
}

double GibbsScore(const SymmetricMatrix& y, const LabelVector& x) {
  Eigen::VectorXd v(x.size());
  for (int i = 0; i < x.size(); ++i) v[i] = x[i];
  return v.dot(y.dense() * v);
}

LabelVector LabelsFromIndex(uint64_t index, int n) {
  std::vector<int> entries(n);
  for (int i = 0; i < n; ++i) entries[i] = (index >> i) & 1 ? -1 : 1;
  return *LabelVector::Create(std::move(entries));
}

uint64_t IndexFromLabels(const LabelVector& x) {
  uint64_t index = 0;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < 0) index |= uint64_t{1} << i;
  }
  return index;
}

namespace {

// eps / (2 Delta) with Delta = 2 / (gamma d).
double GibbsInverseTemperature(double d, double gamma, double epsilon) {
  const double sensitivity = 2.0 / (gamma * d);
  return epsilon / (2.0 * sensitivity);
}

// Scores of all 2^n labelings, visited in Gray-code order so that each step
// flips one coordinate and costs O(n).
std::vector<double> AllScores(const SymmetricMatrix& y) {
  const int n = static_cast<int>(y.dim());
  const uint64_t states = uint64_t{1} << n;
  std::vector<double> scores(states);
  const Eigen::MatrixXd& m = y.dense();
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd h = m * x;  // h = Y x
  double score = x.dot(h);
  uint64_t gray = 0;
  scores[0] = score;
  for (uint64_t step = 1; step < states; ++step) {
    const int k = std::countr_zero(step);
    // Flipping x_k changes <x, Yx> by -4 x_k (h_k - Y_kk x_k).
    score += -4.0 * x[k] * (h[k] - m(k, k) * x[k]);
    h -= 2.0 * x[k] * m.col(k);
    x[k] = -x[k];
    gray ^= uint64_t{1} << k;
    scores[gray] = score;
  }
  return scores;
}

LabelVector SampleFromLogPmf(const std::vector<double>& log_pmf, int n,
                             Rng& rng) {
  const double u = rng.Uniform();
  double cumulative = 0.0;
  uint64_t chosen = log_pmf.size() - 1;
  for (uint64_t i = 0; i < log_pmf.size(); ++i) {
    cumulative += std::exp(log_pmf[i]);
    if (u < cumulative) {
      chosen = i;
      break;
    }
  }
  return LabelsFromIndex(chosen, n);
}

LabelVector MetropolisSample(const SymmetricMatrix& y, double beta,
                             int64_t steps, Rng& rng) {
  const int n = static_cast<int>(y.dim());
  const Eigen::MatrixXd& m = y.dense();
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.Bernoulli(0.5) ? 1.0 : -1.0;
  Eigen::VectorXd h = m * x;
  for (int64_t s = 0; s < steps; ++s) {
    const int k = static_cast<int>(rng.UniformIndex(n));
    const double delta = -4.0 * x[k] * (h[k] - m(k, k) * x[k]);
    const double log_accept = beta * delta;
    if (log_accept >= 0.0 || rng.Uniform() < std::exp(log_accept)) {
      h -= 2.0 * x[k] * m.col(k);
      x[k] = -x[k];
    }
  }
  return SignVector(x);
}

}  // namespace

absl::StatusOr<std::vector<double>> ExactGibbsLogPmf(const Graph& g, double d,
                                                     double gamma,
                                                     double epsilon) {
  if (g.n() < 1 || g.n() > kMaxExactStates) {
    return absl::InvalidArgumentError(absl::StrCat(
        "exact enumeration needs 1 <= n <= ", kMaxExactStates));
  }
  if (!(d > 0.0) || !(gamma > 0.0) || !(epsilon >= 0.0)) {
    return absl::InvalidArgumentError("need gamma * d > 0 and epsilon >= 0");
  }
  const double beta = GibbsInverseTemperature(d, gamma, epsilon);
  std::vector<double> log_pmf = AllScores(CenterRescale(g, d, gamma));
  double top = -std::numeric_limits<double>::infinity();
  for (double& s : log_pmf) {
    s *= beta;
    top = std::max(top, s);
  }
  double total = 0.0;
  for (double s : log_pmf) total += std::exp(s - top);
  const double log_norm = top + std::log(total);
  for (double& s : log_pmf) s -= log_norm;
  return log_pmf;
}

absl::StatusOr<ExpMechResult> ExpMechRecovery(const Graph& g, double d,
                                              double gamma,
                                              const ExpMechConfig& cfg,
                                              Rng& rng) {
  if (absl::Status s = cfg.Validate(g.n()); !s.ok()) return s;
  if (!(d > 0.0) || !(gamma > 0.0)) {
    return absl::InvalidArgumentError("need gamma * d > 0");
  }
  Graph sample_graph = g;
  Graph vote_graph;
  double sample_d = d;
  if (cfg.boost) {
    auto [first, second] = SplitGraph(g, 0.5, rng);
    sample_graph = std::move(first);
    vote_graph = std::move(second);
    sample_d = 0.5 * d;
  }

  ExpMechResult result;
  if (cfg.mode == ExpMechMode::kExact) {
    absl::StatusOr<std::vector<double>> log_pmf =
        ExactGibbsLogPmf(sample_graph, sample_d, gamma, cfg.epsilon);
    if (!log_pmf.ok()) return log_pmf.status();
    result.sampled = SampleFromLogPmf(*log_pmf, g.n(), rng);
    result.sampler = "exact-enumeration";
  } else {
    const double beta = GibbsInverseTemperature(sample_d, gamma, cfg.epsilon);
    result.sampled =
        MetropolisSample(CenterRescale(sample_graph, sample_d, gamma), beta,
                         cfg.chain_steps, rng);
    result.sampler = "metropolis (not covered by the privacy guarantee)";
    result.is_private = false;
  }
  std::vector<PrivacyBudget> stages = {{.epsilon = cfg.epsilon, .delta = 0.0}};
  result.labels = result.sampled;
  if (cfg.boost) {
    absl::StatusOr<MajorityVoteResult> vote =
        PrivateMajorityVote(vote_graph, result.sampled, cfg.epsilon, rng);
    if (!vote.ok()) return vote.status();
    result.labels = vote->labels;
    stages.push_back({.epsilon = cfg.epsilon, .delta = 0.0});
  }
  result.total_budget = Compose(stages);
  return result;
}

ExpMechAdmissibility CheckExpMechAdmissibility(double d, double gamma,
                                               double epsilon, double zeta) {
  ExpMechAdmissibility report;
  report.gamma_sqrt_d_ok = gamma * std::sqrt(d) >= 12800.0;
  report.zeta_lower_ok = zeta >= 2.0 * std::exp(-gamma * gamma * d / 512.0);
  report.epsilon_ok = epsilon >= 64.0 * std::log(2.0 / zeta) / (gamma * d);
  report.small_error_branch_ok = zeta <= std::exp(-640.0);
  return report;
}

nlohmann::json ToJson(const LabelVector& labels, const PrivacyBudget& budget,
                      const nlohmann::json& diagnostics) {
  return {{"labels", labels.entries()},
          {"budget", ToJson(budget)},
          {"diagnostics", diagnostics}};
}

}  // namespace privrec
