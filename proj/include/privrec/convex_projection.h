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

// Orthogonal projection onto K = {X PSD, X_ii = 1/n} and the spectral
// helpers used to round its output.

#ifndef PRIVREC_CONVEX_PROJECTION_H_
#define PRIVREC_CONVEX_PROJECTION_H_

#include <vector>

#include <Eigen/Dense>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "privrec/rng.h"
#include "privrec/sbm_model.h"
#include "privrec/symmetric_matrix.h"

namespace privrec {

struct ProjectionOptions {
  double tol = 1e-7;
  int max_iters = 5000;
  // Keep the per-iteration dual objective in ProjectionReport.
  bool record_history = false;
};

struct ProjectionReport {
  SymmetricMatrix result;
  int iterations = 0;
  bool converged = false;
  // ||Y - result||_F^2.
  double final_objective = 0.0;
  // Certified upper bound on final_objective - min_{X in K} ||Y - X||_F^2.
  double duality_gap = 0.0;
  double diag_violation = 0.0;  // max |X_ii - 1/n|
  double psd_violation = 0.0;   // max(0, -lambda_min(X))
  // Value of the function Dykstra's iteration descends, one entry per
  // iteration; nonincreasing.
  std::vector<double> objective_history;
};

nlohmann::json ToJson(const ProjectionReport& report);

// Projects the PSD part of `m`: V max(Lambda, 0) V^T.
SymmetricMatrix ProjectPsd(const SymmetricMatrix& m);

// argmin_{X in K} ||Y - X||_F^2 via Dykstra's alternating projections between
// the PSD cone and the affine set {diag = 1/n}. A run that exhausts
// max_iters returns converged = false with its best feasible iterate; only
// malformed input is an error.
absl::StatusOr<ProjectionReport> ProjectToK(const SymmetricMatrix& y,
                                            const ProjectionOptions& options);

struct Eigenpair {
  double value = 0.0;
  Eigen::VectorXd vector;  // unit norm, first nonzero coordinate positive
};

// Eigenpair of the algebraically largest eigenvalue. Ties are resolved by the
// eigensolver's index order. Fails if the residual ||Mv - lambda v|| exceeds
// tol * ||M||.
absl::StatusOr<Eigenpair> LeadingEigenpair(const SymmetricMatrix& m,
                                           double tol = 1e-9);

struct SensitivityProbeResult {
  double max_sq_distance = 0.0;
  // Per trial: ||q(Y) - q(Y')||_F^2 and ||Y - Y'||_F^2.
  std::vector<double> sq_distances;
  std::vector<double> input_sq_distances;
};

// Projects Y(g) and Y(g') for `trials` random single-edge toggles g' of g and
// records the squared Frobenius distance between the projections.
absl::StatusOr<SensitivityProbeResult> SensitivityProbe(
    const Graph& g, double d, double gamma, int trials, Rng& rng,
    const ProjectionOptions& options = {});

}  // namespace privrec

#endif  // PRIVREC_CONVEX_PROJECTION_H_
