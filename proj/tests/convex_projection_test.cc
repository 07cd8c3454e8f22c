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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace privrec {
namespace {

constexpr ProjectionOptions kTight{.tol = 1e-10, .max_iters = 100000};

SymmetricMatrix RandomSymmetric(int n, double scale, Rng& rng) {
  const Eigen::MatrixXd a =
      Eigen::MatrixXd::NullaryExpr(n, n, [&] { return scale * rng.Normal(); });
  return SymmetricMatrix::Symmetrized(a);
}

Eigen::MatrixXd Project(const SymmetricMatrix& y,
                        const ProjectionOptions& options = kTight) {
  absl::StatusOr<ProjectionReport> r = ProjectToK(y, options);
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r->converged);
  return r->result.dense();
}

// X = V V^T with rows of V of norm 1/sqrt(n) parameterizes K when V is n x n.
// Projected gradient on ||Y - V V^T||_F^2 followed by row renormalization.
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

TEST(ProjectPsdTest, ClipsNegativeEigenvalues) {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  const Eigen::MatrixXd p = ProjectPsd(*SymmetricMatrix::FromDense(m)).dense();
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5, 0.5, 0.5, 0.5;
  EXPECT_LT((p - expected).norm(), 1e-14);
}

TEST(ProjectToKTest, FixedPoints) {
  for (int n : {1, 3, 8}) {
    const SymmetricMatrix eye = SymmetricMatrix::Identity(n) * (1.0 / n);
    EXPECT_LT((Project(eye) - eye.dense()).norm(), 1e-12);
    const SymmetricMatrix ones = *SymmetricMatrix::FromDense(
        Eigen::MatrixXd::Constant(n, n, 1.0 / n));
    EXPECT_LT((Project(ones) - ones.dense()).norm(), 1e-10);
  }
}

TEST(ProjectToKTest, RejectsEmpty) {
  EXPECT_FALSE(ProjectToK(SymmetricMatrix(0), {}).ok());
}

TEST(ProjectToKTest, TwoByTwoMatchesGridSearch) {
  // K at n = 2 is {[[1/2, t], [t, 1/2]] : |t| <= 1/2}.
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const SymmetricMatrix y = RandomSymmetric(2, 0.8, rng);
    const Eigen::MatrixXd x = Project(y);
    double best_t = 0, best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 1000000; ++k) {
      const double t = -0.5 + k * 1e-6;
      const double f = 2 * (y(0, 1) - t) * (y(0, 1) - t);
      if (f < best) best = f, best_t = t;
    }
    EXPECT_NEAR(x(0, 0), 0.5, 1e-6);
    EXPECT_NEAR(x(1, 1), 0.5, 1e-6);
    EXPECT_NEAR(x(0, 1), best_t, 1e-6);
  }
}

TEST(ProjectToKTest, MatchesProjectedGradientOracle) {
  Rng rng(42);
  for (int n : {10, 50}) {
    for (int trial = 0; trial < 2; ++trial) {
      const SymmetricMatrix y = RandomSymmetric(n, 1.0 / n, rng);
      const Eigen::MatrixXd oracle = ProjectedGradientOracle(y.dense(), rng);
      const Eigen::MatrixXd x = Project(y);
      EXPECT_LE((x - oracle).norm(), 1e-5 * oracle.norm()) << n;
    }
  }
}

TEST(ProjectToKTest, OutputIsFeasible) {
  Rng rng(43);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + static_cast<int>(rng.UniformIndex(30));
    const SymmetricMatrix y = RandomSymmetric(n, 0.5, rng);
    const ProjectionReport r = *ProjectToK(y, ProjectionOptions{});
    ASSERT_TRUE(r.converged);
    EXPECT_LE(r.diag_violation, 1e-7);
    EXPECT_LE(r.psd_violation, 1e-7);
    EXPECT_GE(r.duality_gap, 0.0);
    EXPECT_NEAR(r.final_objective, (y - r.result).dense().squaredNorm(),
                1e-9 * (1 + r.final_objective));
  }
}

TEST(ProjectToKTest, NonexpansiveAndPythagorean) {
  Rng rng(44);
  const int n = 12;
  for (int probe = 0; probe < 100; ++probe) {
    const SymmetricMatrix a = RandomSymmetric(n, 0.3, rng);
    const SymmetricMatrix b = RandomSymmetric(n, 0.3, rng);
    const Eigen::MatrixXd pa = Project(a);
    const Eigen::MatrixXd pb = Project(b);
    EXPECT_LE((pa - pb).norm(), (a - b).FrobeniusNorm() + 1e-7);
    // Pythagorean: ||a - z||^2 >= ||a - P(a)||^2 + ||P(a) - z||^2 for z in K.
    const Eigen::MatrixXd z = pb;
    const double lhs = (a.dense() - z).squaredNorm();
    const double rhs =
        (a.dense() - pa).squaredNorm() + (pa - z).squaredNorm();
    EXPECT_GE(lhs, rhs - 1e-7);
  }
}

TEST(ProjectToKTest, Idempotent) {
  Rng rng(45);
  const Eigen::MatrixXd x = Project(RandomSymmetric(20, 0.2, rng));
  const Eigen::MatrixXd xx = Project(SymmetricMatrix::Symmetrized(x));
  EXPECT_LT((x - xx).norm(), 1e-7);
}

TEST(ProjectToKTest, HistoryIsMonotone) {
  Rng rng(46);
  ProjectionOptions opts;
  opts.record_history = true;
  const ProjectionReport r = *ProjectToK(RandomSymmetric(30, 0.1, rng), opts);
  ASSERT_FALSE(r.objective_history.empty());
  EXPECT_EQ(static_cast<int>(r.objective_history.size()), r.iterations);
  for (size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] + 1e-12);
  }
}

TEST(ProjectToKTest, ReportsNonConvergence) {
  Rng rng(47);
  const ProjectionReport r = *ProjectToK(RandomSymmetric(40, 0.3, rng),
                                         {.tol = 1e-14, .max_iters = 2});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
  EXPECT_EQ(r.result.dim(), 40);
}

TEST(ProjectToKTest, JsonHasFields) {
  Rng rng(48);
  const nlohmann::json j =
      ToJson(*ProjectToK(RandomSymmetric(4, 0.3, rng), ProjectionOptions{}));
  for (const char* key : {"iterations", "converged", "final_objective",
                          "duality_gap", "diag_violation", "psd_violation"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(LeadingEigenpairTest, MatchesGeneralSolver) {
  Rng rng(49);
  for (int trial = 0; trial < 20; ++trial) {
    const SymmetricMatrix m = RandomSymmetric(15, 1.0, rng);
    const Eigenpair p = *LeadingEigenpair(m);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.dense());
    const double top = es.eigenvalues().real().maxCoeff();
    EXPECT_NEAR(p.value, top, 1e-10);
    EXPECT_NEAR(p.vector.norm(), 1.0, 1e-12);
    EXPECT_LT((m.dense() * p.vector - p.value * p.vector).norm(), 1e-9);
    for (int i = 0; i < p.vector.size(); ++i) {
      if (std::abs(p.vector[i]) > 1e-12) {
        EXPECT_GT(p.vector[i], 0.0);
        break;
      }
    }
  }
}

TEST(LeadingEigenpairTest, PlantedOuterProduct) {
  Eigen::VectorXd x(4);
  x << 1, -1, 1, -1;
  const SymmetricMatrix m =
      *SymmetricMatrix::FromDense(x * x.transpose() / 4.0);
  const Eigenpair p = *LeadingEigenpair(m);
  EXPECT_NEAR(p.value, 1.0, 1e-12);
  EXPECT_LT((p.vector - x / 2.0).norm(), 1e-12);
}

TEST(SensitivityProbeTest, SmallGraph) {
  Rng rng(50);
  const int n = 40;
  const double d = 8, gamma = 0.8;
  const Graph g = *SampleSbm(
      {.n = n, .d = d, .gamma = gamma, .x = LabelVector::Balanced(n)}, rng);
  const SensitivityProbeResult r = *SensitivityProbe(g, d, gamma, 5, rng);
  ASSERT_EQ(r.sq_distances.size(), 5u);
  const double input = 2.0 / ((gamma * d) * (gamma * d));
  for (size_t t = 0; t < r.sq_distances.size(); ++t) {
    EXPECT_NEAR(r.input_sq_distances[t], input, 1e-12);
    EXPECT_LE(r.sq_distances[t], input + 1e-6);
    EXPECT_LE(r.sq_distances[t], r.max_sq_distance);
  }
  EXPECT_FALSE(SensitivityProbe(g, d, gamma, 0, rng).ok());
}

}  // namespace
}  // namespace privrec
