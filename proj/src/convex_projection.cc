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

#include "privrec/convex_projection.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace privrec {
namespace {

constexpr size_t kAndersonMemory = 8;

// V max(Lambda, 0) V^T, built from the nonnegative part of the spectrum only.
Eigen::MatrixXd PsdPart(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const Eigen::MatrixXd& v = solver.eigenvectors();
  // Eigenvalues are ascending; keep the positive tail.
  Eigen::Index first = 0;
  while (first < lambda.size() && lambda[first] <= 0.0) ++first;
  const Eigen::Index rank = lambda.size() - first;
  if (rank == 0) return Eigen::MatrixXd::Zero(m.rows(), m.cols());
  Eigen::MatrixXd scaled = v.rightCols(rank);
  const Eigen::MatrixXd basis = scaled;
  for (Eigen::Index c = 0; c < rank; ++c) scaled.col(c) *= lambda[first + c];
  Eigen::MatrixXd out = scaled * basis.transpose();
  // Products of the two factors are symmetric only up to rounding.
  return 0.5 * (out + out.transpose());
}

// Congruence D X D mapping a PSD matrix to one with diagonal exactly
// `target`. Rows with a vanishing diagonal are zero in a PSD matrix; they are
// replaced by target * e_i e_i^T, which keeps the result PSD.
Eigen::MatrixXd RescaleDiagonal(const Eigen::MatrixXd& x, double target) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    scale[i] = x(i, i) > 1e-14 * target ? std::sqrt(target / x(i, i)) : 0.0;
  }
  Eigen::MatrixXd out = scale.asDiagonal() * x * scale.asDiagonal();
  out.diagonal().setConstant(target);
  return out;
}

double MinEigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

}  // namespace

nlohmann::json ToJson(const ProjectionReport& report) {
  return {{"iterations", report.iterations},
          {"converged", report.converged},
          {"final_objective", report.final_objective},
          {"duality_gap", report.duality_gap},
          {"diag_violation", report.diag_violation},
          {"psd_violation", report.psd_violation}};
}

SymmetricMatrix ProjectPsd(const SymmetricMatrix& m) {
  return *SymmetricMatrix::FromDense(PsdPart(m.dense()));
}

absl::StatusOr<ProjectionReport> ProjectToK(const SymmetricMatrix& y,
                                            const ProjectionOptions& options) {
  const Eigen::Index n = y.dim();
  if (n == 0) return absl::InvalidArgumentError("empty matrix");
  if (!y.dense().allFinite()) {
    return absl::InvalidArgumentError("input has non-finite entries");
  }
  if (!(options.tol > 0.0) || options.max_iters < 1) {
    return absl::InvalidArgumentError("need tol > 0 and max_iters >= 1");
  }
  const double target = 1.0 / static_cast<double>(n);
  const Eigen::MatrixXd& input = y.dense();
  const double input_sq_norm = input.squaredNorm();
  const double gap_tol = options.tol * std::max(1.0, std::sqrt(input_sq_norm));

  // With an affine second set, Dykstra's correction for that set vanishes and
  // the iteration is R <- R + Diag(1/n - diag((R)_+)), X = (R)_+. This is unit
  // step gradient descent on the dual function
  //   phi(u) = 1/2 ||(Y + Diag u)_+||^2 - (1/n) sum(u),
  // whose gradient is 1-Lipschitz, so the plain step never increases phi and
  // ||Y||^2 - 2 phi(u) lower-bounds the squared distance from Y to K.
  // Anderson extrapolation over the last few dual iterates is tried first and
  // kept only when it does not increase phi.
  struct DualPoint {
    Eigen::VectorXd u;
    Eigen::MatrixXd psd;
    double phi = 0.0;
    Eigen::VectorXd residual;  // 1/n - diag(psd) == -grad phi
  };
  auto evaluate = [&](Eigen::VectorXd u) {
    Eigen::MatrixXd shifted = input;
    shifted.diagonal() += u;
    DualPoint p;
    p.psd = PsdPart(shifted);
    p.phi = 0.5 * p.psd.squaredNorm() - target * u.sum();
    p.residual = Eigen::VectorXd::Constant(n, target) - p.psd.diagonal();
    p.u = std::move(u);
    return p;
  };

  ProjectionReport report;
  double best_gap = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best;
  double best_objective = 0.0;

  std::vector<Eigen::VectorXd> du_history;
  std::vector<Eigen::VectorXd> dg_history;
  DualPoint current = evaluate(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd previous = input;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    if (iter > 1) {
      DualPoint next;
      bool accepted = false;
      if (!du_history.empty()) {
        const Eigen::Index m = static_cast<Eigen::Index>(du_history.size());
        Eigen::MatrixXd dg(n, m);
        Eigen::MatrixXd du(n, m);
        for (Eigen::Index c = 0; c < m; ++c) {
          dg.col(c) = dg_history[c];
          du.col(c) = du_history[c];
        }
        const Eigen::VectorXd coeff =
            dg.completeOrthogonalDecomposition().solve(current.residual);
        Eigen::VectorXd candidate =
            current.u + current.residual - (du + dg) * coeff;
        if (candidate.allFinite()) {
          next = evaluate(std::move(candidate));
          accepted = next.phi <= current.phi;
        }
      }
      if (!accepted) {
        du_history.clear();
        dg_history.clear();
        next = evaluate(current.u + current.residual);
      }
      du_history.push_back(next.u - current.u);
      dg_history.push_back(next.residual - current.residual);
      if (du_history.size() > kAndersonMemory) {
        du_history.erase(du_history.begin());
        dg_history.erase(dg_history.begin());
      }
      previous = std::move(current.psd);
      current = std::move(next);
    }
    if (options.record_history) report.objective_history.push_back(current.phi);
    const double change = (current.psd - previous).norm();

    Eigen::MatrixXd feasible = RescaleDiagonal(current.psd, target);
    const double objective = (input - feasible).squaredNorm();
    const double gap =
        std::max(0.0, objective - (input_sq_norm - 2.0 * current.phi));
    report.iterations = iter;
    if (change <= options.tol && gap <= gap_tol) {
      report.converged = true;
      best = std::move(feasible);
      best_gap = gap;
      best_objective = objective;
      break;
    }
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(feasible);
      best_objective = objective;
    }
  }

  report.result = *SymmetricMatrix::FromDense(0.5 * (best + best.transpose()));
  report.final_objective = best_objective;
  report.duality_gap = best_gap;
  double diag_violation = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    diag_violation =
        std::max(diag_violation, std::abs(report.result(i, i) - target));
  }
  report.diag_violation = diag_violation;
  report.psd_violation = std::max(0.0, -MinEigenvalue(report.result.dense()));
  return report;
}

absl::StatusOr<Eigenpair> LeadingEigenpair(const SymmetricMatrix& m,
                                           double tol) {
  if (m.dim() == 0) return absl::InvalidArgumentError("empty matrix");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.dense());
  if (solver.info() != Eigen::Success) {
    return absl::InternalError("eigensolver failed to converge");
  }
  const Eigen::Index last = m.dim() - 1;
  Eigenpair pair{.value = solver.eigenvalues()[last],
                 .vector = solver.eigenvectors().col(last)};
  pair.vector.normalize();
  for (Eigen::Index i = 0; i < pair.vector.size(); ++i) {
    if (std::abs(pair.vector[i]) > 1e-12) {
      if (pair.vector[i] < 0) pair.vector = -pair.vector;
      break;
    }
  }
  const double residual =
      (m.dense() * pair.vector - pair.value * pair.vector).norm();
  const double scale = std::max(m.FrobeniusNorm(), 1e-300);
  if (residual > tol * scale) {
    return absl::InternalError(
        absl::StrCat("eigenpair residual ", residual, " exceeds tolerance"));
  }
  return pair;
}

absl::StatusOr<SensitivityProbeResult> SensitivityProbe(
    const Graph& g, double d, double gamma, int trials, Rng& rng,
    const ProjectionOptions& options) {
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (g.n() < 2) return absl::InvalidArgumentError("graph needs n >= 2");
  const SymmetricMatrix y = CenterRescale(g, d, gamma);
  absl::StatusOr<ProjectionReport> base = ProjectToK(y, options);
  if (!base.ok()) return base.status();
  if (!base->converged) {
    return absl::InternalError("projection of the base graph did not converge");
  }
  SensitivityProbeResult result;
  for (int t = 0; t < trials; ++t) {
    const int i = static_cast<int>(rng.UniformIndex(g.n()));
    int j = static_cast<int>(rng.UniformIndex(g.n() - 1));
    if (j >= i) ++j;
    const SymmetricMatrix y_adj = CenterRescale(g.Toggled(i, j), d, gamma);
    absl::StatusOr<ProjectionReport> adj = ProjectToK(y_adj, options);
    if (!adj.ok()) return adj.status();
    if (!adj->converged) {
      return absl::InternalError("projection of a neighbor did not converge");
    }
    const double dist = (base->result - adj->result).dense().squaredNorm();
    result.sq_distances.push_back(dist);
    result.input_sq_distances.push_back((y - y_adj).dense().squaredNorm());
    result.max_sq_distance = std::max(result.max_sq_distance, dist);
  }
  return result;
}

}  // namespace privrec
