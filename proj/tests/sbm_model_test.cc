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

#include "privrec/sbm_model.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"

namespace privrec {
namespace {

LabelVector Labels(std::vector<int> v) { return *LabelVector::Create(v); }

TEST(LabelVectorTest, CreateRejectsZero) {
  EXPECT_FALSE(LabelVector::Create({1, 0, -1}).ok());
  EXPECT_FALSE(LabelVector::Create({2}).ok());
  EXPECT_TRUE(LabelVector::Create({}).ok());
}

TEST(LabelVectorTest, Balanced) {
  const LabelVector x = LabelVector::Balanced(5);
  EXPECT_EQ(x.entries(), (std::vector<int>{1, 1, -1, -1, -1}));
  EXPECT_TRUE(LabelVector::Balanced(6).IsBalanced());
  EXPECT_FALSE(LabelVector::Balanced(5).IsBalanced());
}

TEST(ErrTest, Examples) {
  const LabelVector a = Labels({1, 1, -1, -1});
  EXPECT_EQ(*Err(a, a), 0.0);
  EXPECT_EQ(*Err(a, a.Negated()), 0.0);
  EXPECT_EQ(*Err(a, a.WithFlipped(2)), 0.25);
  EXPECT_EQ(*Err(a, Labels({1, -1, 1, -1})), 0.5);
  EXPECT_FALSE(Err(a, Labels({1, 1})).ok());
}

TEST(ErrTest, PropertiesOnRandomLabels) {
  Rng rng(21);
  for (int t = 0; t < 2000; ++t) {
    const int n = 1 + static_cast<int>(rng.UniformIndex(40));
    const LabelVector a = LabelVector::Random(n, rng);
    const LabelVector b = LabelVector::Random(n, rng);
    const double e = *Err(a, b);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 0.5);
    EXPECT_EQ(e, *Err(b, a));
    EXPECT_EQ(e, *Err(a, b.Negated()));
    EXPECT_EQ(*Err(a, a), 0.0);
  }
}

TEST(ErrTest, TriangleInequality) {
  Rng rng(22);
  for (int t = 0; t < 20000; ++t) {
    const int n = 3 + static_cast<int>(rng.UniformIndex(62));
    const LabelVector a = LabelVector::Random(n, rng);
    const LabelVector b = LabelVector::Random(n, rng);
    const LabelVector c = LabelVector::Random(n, rng);
    ASSERT_LE(*Err(a, c), *Err(a, b) + *Err(b, c) + 1e-15);
  }
}

TEST(SignVectorTest, ZeroMapsToPlus) {
  Eigen::VectorXd v(4);
  v << -2.0, 0.0, 3.0, -0.0;
  EXPECT_EQ(SignVector(v).entries(), (std::vector<int>{-1, 1, 1, 1}));
}

TEST(GraphTest, CreateValidates) {
  EXPECT_FALSE(Graph::Create(3, {{0, 0}}).ok());
  EXPECT_FALSE(Graph::Create(3, {{0, 3}}).ok());
  EXPECT_FALSE(Graph::Create(3, {{0, 1}, {1, 0}}).ok());
  absl::StatusOr<Graph> g = Graph::Create(4, {{2, 1}, {0, 3}, {0, 1}});
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(g->edges(), (std::vector<Edge>{{0, 1}, {0, 3}, {1, 2}}));
  EXPECT_TRUE(g->HasEdge(2, 1));
  EXPECT_FALSE(g->HasEdge(2, 3));
  EXPECT_EQ(g->Degrees(), (std::vector<int>{2, 2, 1, 1}));
}

TEST(GraphTest, ToggleIsInvolutionAtDistanceOne) {
  const Graph g = *Graph::Create(5, {{0, 1}, {2, 4}});
  const Graph h = g.Toggled(3, 1);
  EXPECT_EQ(g.HammingDistance(h), 1);
  EXPECT_TRUE(h.HasEdge(1, 3));
  EXPECT_EQ(h.Toggled(1, 3), g);
  EXPECT_EQ(g.Toggled(0, 1).num_edges(), 1);
}

TEST(EdgeNeighborsTest, CountAndDistance) {
  const Graph g = *Graph::Create(6, {{0, 1}, {1, 2}, {4, 5}});
  const std::vector<Graph> nbrs = EdgeNeighbors(g);
  ASSERT_EQ(nbrs.size(), 15u);
  for (const Graph& h : nbrs) EXPECT_EQ(g.HammingDistance(h), 1);
  EXPECT_EQ(nbrs[0], g.Toggled(0, 1));
  EXPECT_EQ(nbrs[14], g.Toggled(4, 5));
}

TEST(SbmParamsTest, RejectsBadParameters) {
  Rng rng(1);
  const LabelVector x = LabelVector::Balanced(10);
  EXPECT_FALSE(SampleSbm({.n = 10, .d = 6, .gamma = 0.8, .x = x}, rng).ok());
  EXPECT_FALSE(SampleSbm({.n = 10, .d = 2, .gamma = 0.0, .x = x}, rng).ok());
  EXPECT_FALSE(SampleSbm({.n = 10, .d = 2, .gamma = 1.5, .x = x}, rng).ok());
  EXPECT_FALSE(SampleSbm({.n = 10, .d = -1, .gamma = 0.5, .x = x}, rng).ok());
  EXPECT_FALSE(SampleSbm({.n = 12, .d = 2, .gamma = 0.5, .x = x}, rng).ok());
  EXPECT_TRUE(SampleSbm({.n = 10, .d = 5, .gamma = 1.0, .x = x}, rng).ok());
}

TEST(SbmTest, EdgeFrequencies) {
  const int n = 200;
  const double d = 20, gamma = 0.5;
  const LabelVector x = LabelVector::Balanced(n);
  Rng rng(23);
  double same = 0, diff = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const Graph g = *SampleSbm({.n = n, .d = d, .gamma = gamma, .x = x}, rng);
    for (const auto& [i, j] : g.edges()) (x[i] == x[j] ? same : diff) += 1;
  }
  const double pairs_same = reps * 2.0 * (n / 2) * (n / 2 - 1) / 2;
  const double pairs_diff = reps * (n / 2.0) * (n / 2);
  const double p_same = (1 + gamma) * d / n, p_diff = (1 - gamma) * d / n;
  EXPECT_NEAR(same / pairs_same, p_same,
              4 * std::sqrt(p_same * (1 - p_same) / pairs_same));
  EXPECT_NEAR(diff / pairs_diff, p_diff,
              4 * std::sqrt(p_diff * (1 - p_diff) / pairs_diff));
}

TEST(SbmTest, DeterministicGivenSeed) {
  const SbmParams p{.n = 50, .d = 5, .gamma = 0.5,
                    .x = LabelVector::Balanced(50)};
  Rng a(9), b(9);
  EXPECT_EQ(*SampleSbm(p, a), *SampleSbm(p, b));
}

TEST(FromAlphaBetaTest, Examples) {
  const DegreeBias db = *FromAlphaBeta(60, 4, 400);
  EXPECT_NEAR(db.d, 32 * std::log(400.0), 1e-12);
  EXPECT_NEAR(db.gamma, 56.0 / 64.0, 1e-15);
  EXPECT_FALSE(FromAlphaBeta(4, 60, 400).ok());
  EXPECT_FALSE(FromAlphaBeta(5, 0, 400).ok());
  EXPECT_FALSE(FromAlphaBeta(300, 4, 100).ok());
  // Round trip to probabilities.
  const double log_n = std::log(400.0);
  EXPECT_NEAR((1 + db.gamma) * db.d / 400, 60 * log_n / 400, 1e-15);
  EXPECT_NEAR((1 - db.gamma) * db.d / 400, 4 * log_n / 400, 1e-15);
}

TEST(CenterRescaleTest, Examples) {
  const Graph g = *Graph::Create(4, {{0, 1}});
  const SymmetricMatrix y = CenterRescale(g, 2.0, 0.5);
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(y(0, 1), (1.0 - 0.5) / 1.0);
  EXPECT_DOUBLE_EQ(y(2, 3), -0.5);
  EXPECT_EQ(y.dense(), y.dense().transpose());
}

TEST(CenterRescaleTest, ExpectationIsOuterProduct) {
  const int n = 30;
  const double d = 6, gamma = 0.7;
  Rng rng(24);
  const LabelVector x = LabelVector::Random(n, rng);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const Graph g = *SampleSbm({.n = n, .d = d, .gamma = gamma, .x = x}, rng);
    mean += CenterRescale(g, d, gamma).dense();
  }
  mean /= reps;
  // E[Y_ij] = x_i x_j / n off the diagonal.
  double worst = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      worst = std::max(worst, std::abs(mean(i, j) - x[i] * x[j] / double(n)));
    }
  }
  // Per-entry sd is about sqrt(p) / (gamma d sqrt(reps)) = 0.005.
  EXPECT_LT(worst, 0.03);
}

TEST(SplitGraphTest, PartitionsEdges) {
  Rng rng(25);
  const Graph g =
      *SampleSbm({.n = 300, .d = 30, .gamma = 0.5,
                  .x = LabelVector::Balanced(300)},
                 rng);
  const auto [a, b] = SplitGraph(g, 0.3, rng);
  EXPECT_EQ(a.num_edges() + b.num_edges(), g.num_edges());
  for (const auto& [i, j] : a.edges()) {
    EXPECT_TRUE(g.HasEdge(i, j));
    EXPECT_FALSE(b.HasEdge(i, j));
  }
  for (const auto& [i, j] : b.edges()) EXPECT_TRUE(g.HasEdge(i, j));
  const double frac = static_cast<double>(a.num_edges()) / g.num_edges();
  EXPECT_NEAR(frac, 0.3, 4 * std::sqrt(0.21 / g.num_edges()));
}

TEST(GraphIoTest, RoundTrip) {
  const Graph g = *Graph::Create(5, {{0, 4}, {1, 2}, {3, 4}});
  std::stringstream ss;
  ASSERT_TRUE(WriteGraph(g, ss).ok());
  EXPECT_EQ(ss.str(), "5 3\n0 4\n1 2\n3 4\n");
  absl::StatusOr<Graph> back = ReadGraph(ss);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, g);
}

TEST(GraphIoTest, RejectsMalformed) {
  std::stringstream bad1("3 2\n0 1\n");
  EXPECT_FALSE(ReadGraph(bad1).ok());
  std::stringstream bad2("3 1\n0 5\n");
  EXPECT_FALSE(ReadGraph(bad2).ok());
}

TEST(LabelIoTest, RoundTrip) {
  const LabelVector x = Labels({1, -1, -1, 1});
  std::stringstream ss;
  ASSERT_TRUE(WriteLabels(x, ss).ok());
  absl::StatusOr<LabelVector> back = ReadLabels(ss);
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, x);
  std::stringstream bad("1\n0\n");
  EXPECT_FALSE(ReadLabels(bad).ok());
}

}  // namespace
}  // namespace privrec
