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

// Noise distributions, mechanisms, sum-composition accounting and the
// sparse high-dimensional histogram learner.

#ifndef PRIVREC_DP_MECHANISMS_H_
#define PRIVREC_DP_MECHANISMS_H_

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"
#include "privrec/rng.h"

namespace privrec {

// An (epsilon, delta) pair. Composition is plain summation with delta
// saturating at 1.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  absl::Status Validate() const;

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;
};

PrivacyBudget Compose(std::span<const PrivacyBudget> budgets);

nlohmann::json ToJson(const PrivacyBudget& budget);

struct LaplaceParams {
  double mu = 0.0;
  double b = 1.0;  // scale

  absl::Status Validate() const;
};

// Laplace(mu, b) conditioned on the value being <= 0. Requires mu < 0.
struct TruncatedLaplaceParams {
  double mu = -1.0;
  double b = 1.0;

  absl::Status Validate() const;
};

absl::StatusOr<double> SampleLaplace(const LaplaceParams& params, Rng& rng);

// Returns value + Lap(0, l1_sensitivity / epsilon). A zero sensitivity
// returns `value` unchanged without consuming randomness.
absl::StatusOr<double> AddLaplace(double value, double l1_sensitivity,
                                  double epsilon, Rng& rng);

// Inverse-CDF sampler for the truncated Laplace distribution. Every sample
// is <= 0.
absl::StatusOr<double> SampleTruncatedLaplace(
    const TruncatedLaplaceParams& params, Rng& rng);

// Parameters of the truncated Laplace mechanism for a function with the given
// l1 sensitivity: tLap(-s(1 + log(1/delta)/eps), s/eps).
absl::StatusOr<TruncatedLaplaceParams> TruncatedLaplaceMechanismParams(
    double l1_sensitivity, const PrivacyBudget& budget);

// P[x < y] for x ~ tLap(mu, b) and y < mu, in closed form:
// e^{(y - mu)/b} / (2 - e^{mu/b}).
double TruncatedLaplaceLowerTail(const TruncatedLaplaceParams& params,
                                 double y);

// Standard deviation of the Gaussian mechanism,
// sigma^2 = l2^2 * 2 log(2/delta) / eps^2. Requires delta > 0.
absl::StatusOr<double> GaussianNoiseScale(double l2_sensitivity,
                                          const PrivacyBudget& budget);

// Grid of half-open cells [q + (i-1) b, q + i b) along every axis.
struct HistogramConfig {
  double offset = 0.0;     // q, in [0, bin_width)
  double bin_width = 1.0;  // b
  double alpha = 0.1;      // accuracy target
  double beta = 0.05;      // failure probability
  PrivacyBudget budget;

  absl::Status Validate() const;
};

using BinIndex = std::vector<int64_t>;
using Histogram = std::map<BinIndex, double>;

// Index tuple of the cell containing `point`; the axis index i satisfies
// q + (i-1) b <= x < q + i b.
BinIndex BinOf(const Eigen::VectorXd& point, double offset, double bin_width);

// Exact (non-private) bin frequencies.
Histogram TrueHistogram(std::span<const Eigen::VectorXd> points, double offset,
                        double bin_width);

// Smallest n for which the accuracy guarantee (max error <= alpha with
// probability >= 1 - beta) is claimed: ceil(8/(eps alpha) log(2/(delta beta))).
int64_t HistogramMinSamples(const HistogramConfig& cfg);

// Private histogram: nonzero true frequencies receive Lap(0, 2/(n eps));
// results at or below 3 log(2/delta)/(eps n) are zeroed and dropped. Only
// nonzero entries are materialized.
absl::StatusOr<Histogram> HistogramLearner(
    std::span<const Eigen::VectorXd> points, const HistogramConfig& cfg,
    Rng& rng);

// [{"bin_indices": [...], "frequency": f}, ...] in bin order.
nlohmann::json HistogramToJson(const Histogram& histogram);

}  // namespace privrec

#endif  // PRIVREC_DP_MECHANISMS_H_
