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

#include "privrec/dp_mechanisms.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace privrec {

absl::Status PrivacyBudget::Validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and nonnegative, got ", epsilon));
  }
  if (!(delta >= 0.0 && delta <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1], got ", delta));
  }
  return absl::OkStatus();
}

PrivacyBudget Compose(std::span<const PrivacyBudget> budgets) {
  PrivacyBudget total;
  for (const PrivacyBudget& b : budgets) {
    total.epsilon += b.epsilon;
    total.delta += b.delta;
  }
  total.delta = std::min(1.0, total.delta);
  return total;
}

nlohmann::json ToJson(const PrivacyBudget& budget) {
  return {{"eps", budget.epsilon}, {"delta", budget.delta}};
}

absl::Status LaplaceParams::Validate() const {
  if (!(b > 0.0) || !std::isfinite(b) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("Laplace scale must be positive, got b=", b));
  }
  return absl::OkStatus();
}

absl::Status TruncatedLaplaceParams::Validate() const {
  if (!(mu < 0.0) || !std::isfinite(mu)) {
    return absl::InvalidArgumentError(
        absl::StrCat("truncated Laplace location must be negative, got ", mu));
  }
  if (!(b > 0.0) || !std::isfinite(b)) {
    return absl::InvalidArgumentError(
        absl::StrCat("truncated Laplace scale must be positive, got ", b));
  }
  return absl::OkStatus();
}

absl::StatusOr<double> SampleLaplace(const LaplaceParams& params, Rng& rng) {
  if (absl::Status s = params.Validate(); !s.ok()) return s;
  // u in (-1/2, 1/2); x = mu - b sgn(u) log(1 - 2|u|).
  const double u = rng.UniformOpen() - 0.5;
  const double magnitude = -params.b * std::log1p(-2.0 * std::abs(u));
  return u < 0 ? params.mu - magnitude : params.mu + magnitude;
}

absl::StatusOr<double> AddLaplace(double value, double l1_sensitivity,
                                  double epsilon, Rng& rng) {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", epsilon));
  }
  if (!(l1_sensitivity >= 0.0)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "l1 sensitivity must be nonnegative, got ", l1_sensitivity));
  }
  if (l1_sensitivity == 0.0) return value;
  absl::StatusOr<double> noise =
      SampleLaplace({.mu = 0.0, .b = l1_sensitivity / epsilon}, rng);
  if (!noise.ok()) return noise.status();
  return value + *noise;
}

absl::StatusOr<double> SampleTruncatedLaplace(
    const TruncatedLaplaceParams& params, Rng& rng) {
  if (absl::Status s = params.Validate(); !s.ok()) return s;
  const double mu = params.mu;
  const double b = params.b;
  // Untruncated CDF F; the truncated law has CDF F(x)/F(0) on (-inf, 0].
  const double mass_below_zero = 1.0 - 0.5 * std::exp(mu / b);
  const double p = rng.UniformOpen() * mass_below_zero;
  double x;
  if (p < 0.5) {
    x = mu + b * std::log(2.0 * p);
  } else {
    x = mu - b * std::log(2.0 * (1.0 - p));
  }
  return std::min(x, 0.0);
}

absl::StatusOr<TruncatedLaplaceParams> TruncatedLaplaceMechanismParams(
    double l1_sensitivity, const PrivacyBudget& budget) {
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (!(budget.epsilon > 0.0) || !(budget.delta > 0.0)) {
    return absl::InvalidArgumentError(
        "truncated Laplace mechanism needs epsilon > 0 and delta > 0");
  }
  if (!(l1_sensitivity > 0.0)) {
    return absl::InvalidArgumentError("l1 sensitivity must be positive");
  }
  TruncatedLaplaceParams params{
      .mu = -l1_sensitivity *
            (1.0 + std::log(1.0 / budget.delta) / budget.epsilon),
      .b = l1_sensitivity / budget.epsilon};
  return params;
}

double TruncatedLaplaceLowerTail(const TruncatedLaplaceParams& params,
                                 double y) {
  return std::exp((y - params.mu) / params.b) /
         (2.0 - std::exp(params.mu / params.b));
}

absl::StatusOr<double> GaussianNoiseScale(double l2_sensitivity,
                                          const PrivacyBudget& budget) {
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (!(budget.epsilon > 0.0)) {
    return absl::InvalidArgumentError("Gaussian mechanism needs epsilon > 0");
  }
  if (!(budget.delta > 0.0)) {
    return absl::InvalidArgumentError(
        "Gaussian mechanism needs delta > 0 (approximate DP only)");
  }
  if (!(l2_sensitivity >= 0.0)) {
    return absl::InvalidArgumentError("l2 sensitivity must be nonnegative");
  }
  return l2_sensitivity * std::sqrt(2.0 * std::log(2.0 / budget.delta)) /
         budget.epsilon;
}

absl::Status HistogramConfig::Validate() const {
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (!(budget.epsilon > 0.0) || !(budget.delta > 0.0)) {
    return absl::InvalidArgumentError(
        "histogram learner needs epsilon > 0 and delta > 0");
  }
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    return absl::InvalidArgumentError("bin width must be positive");
  }
  if (!(offset >= 0.0 && offset < bin_width)) {
    return absl::InvalidArgumentError(
        absl::StrCat("offset must lie in [0, bin_width), got ", offset));
  }
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0)) {
    return absl::InvalidArgumentError("alpha and beta must lie in (0, 1)");
  }
  return absl::OkStatus();
}

BinIndex BinOf(const Eigen::VectorXd& point, double offset, double bin_width) {
  BinIndex index(point.size());
  for (Eigen::Index j = 0; j < point.size(); ++j) {
    index[j] =
        static_cast<int64_t>(std::floor((point[j] - offset) / bin_width)) + 1;
  }
  return index;
}

Histogram TrueHistogram(std::span<const Eigen::VectorXd> points, double offset,
                        double bin_width) {
  Histogram counts;
  if (points.empty()) return counts;
  const double unit = 1.0 / static_cast<double>(points.size());
  for (const Eigen::VectorXd& p : points) {
    counts[BinOf(p, offset, bin_width)] += unit;
  }
  return counts;
}

int64_t HistogramMinSamples(const HistogramConfig& cfg) {
  const double eps = cfg.budget.epsilon;
  const double delta = cfg.budget.delta;
  return static_cast<int64_t>(std::ceil(8.0 / (eps * cfg.alpha) *
                                        std::log(2.0 / (delta * cfg.beta))));
}

absl::StatusOr<Histogram> HistogramLearner(
    std::span<const Eigen::VectorXd> points, const HistogramConfig& cfg,
    Rng& rng) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  Histogram result;
  if (points.empty()) return result;
  for (const Eigen::VectorXd& p : points) {
    if (!p.allFinite()) {
      return absl::InvalidArgumentError("histogram input must be finite");
    }
  }
  const double n = static_cast<double>(points.size());
  const double eps = cfg.budget.epsilon;
  const double noise_scale = 2.0 / (n * eps);
  const double floor_value = 3.0 * std::log(2.0 / cfg.budget.delta) / (eps * n);
  // Only bins with a nonzero true count are touched; the rest stay zero.
  for (const auto& [bin, frequency] :
       TrueHistogram(points, cfg.offset, cfg.bin_width)) {
    absl::StatusOr<double> noisy =
        SampleLaplace({.mu = frequency, .b = noise_scale}, rng);
    if (!noisy.ok()) return noisy.status();
    if (*noisy > floor_value) result.emplace(bin, *noisy);
  }
  return result;
}

nlohmann::json HistogramToJson(const Histogram& histogram) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [bin, frequency] : histogram) {
    records.push_back({{"bin_indices", bin}, {"frequency", frequency}});
  }
  return records;
}

}  // namespace privrec
