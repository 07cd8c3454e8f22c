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

// Two-community stochastic block model: labels, graphs under edge adjacency,
// sampling, the centered and rescaled adjacency matrix, and the label error.

#ifndef PRIVREC_SBM_MODEL_H_
#define PRIVREC_SBM_MODEL_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "privrec/rng.h"
#include "privrec/symmetric_matrix.h"

namespace privrec {

// Vector in {-1, +1}^n.
class LabelVector {
 public:
  LabelVector() = default;

  static absl::StatusOr<LabelVector> Create(std::vector<int> entries);

  // Entries 0..n/2-1 are +1 and the rest -1.
  static LabelVector Balanced(int n);

  // Independent uniform signs.
  static LabelVector Random(int n, Rng& rng);

  int size() const { return static_cast<int>(entries_.size()); }
  int operator[](int i) const { return entries_[i]; }
  const std::vector<int>& entries() const { return entries_; }

  LabelVector Negated() const;
  LabelVector WithFlipped(int i) const;
  bool IsBalanced() const;

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  explicit LabelVector(std::vector<int> entries)
      : entries_(std::move(entries)) {}

  std::vector<int> entries_;
};

// sign(v) with sign(0) := +1.
LabelVector SignVector(const Eigen::VectorXd& v);

// (1/n) min(Ham(a, b), Ham(a, -b)), in [0, 1/2].
absl::StatusOr<double> Err(const LabelVector& a, const LabelVector& b);

using Edge = std::pair<int, int>;  // always first < second

// Undirected simple graph on vertices 0..n-1. Immutable once built.
class Graph {
 public:
  Graph() = default;

  // Empty graph on n vertices.
  explicit Graph(int n) : n_(n) {}

  // Accepts pairs in either orientation; rejects self-loops, duplicates and
  // out-of-range endpoints.
  static absl::StatusOr<Graph> Create(int n, std::vector<Edge> edges);

  int n() const { return n_; }
  int64_t num_edges() const { return static_cast<int64_t>(edges_.size()); }

  // Sorted lexicographically.
  const std::vector<Edge>& edges() const { return edges_; }

  bool HasEdge(int i, int j) const;

  // The adjacent graph obtained by adding or removing edge {i, j}.
  Graph Toggled(int i, int j) const;

  int64_t HammingDistance(const Graph& other) const;

  // Degree of every vertex.
  std::vector<int> Degrees() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

 private:
  uint64_t Key(int i, int j) const {
    return static_cast<uint64_t>(i) * static_cast<uint64_t>(n_) +
           static_cast<uint64_t>(j);
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::unordered_set<uint64_t> keys_;
};

// Every graph at Hamming distance one from g, i.e. n(n-1)/2 graphs, in
// lexicographic order of the toggled pair.
std::vector<Graph> EdgeNeighbors(const Graph& g);

struct SbmParams {
  int n = 0;
  double d = 0.0;      // average degree scale
  double gamma = 0.0;  // bias in (0, 1]
  LabelVector x;       // planted labels; need not be balanced

  absl::Status Validate() const;
};

// Conversion between the (alpha, beta) log-degree parameterization, where the
// intra/inter edge probabilities are alpha log(n)/n and beta log(n)/n, and
// (d, gamma).
struct DegreeBias {
  double d = 0.0;
  double gamma = 0.0;
};
absl::StatusOr<DegreeBias> FromAlphaBeta(double alpha, double beta, int n);

// Pair {i, j} is an edge independently with probability
// (1 + gamma x_i x_j) d / n.
absl::StatusOr<Graph> SampleSbm(const SbmParams& params, Rng& rng);

// Y(G) = (A(G) - (d/n) J) / (gamma d) off the diagonal; the diagonal is 0.
SymmetricMatrix CenterRescale(const Graph& g, double d, double gamma);

// Each edge goes to the first graph with probability p, else to the second.
std::pair<Graph, Graph> SplitGraph(const Graph& g, double p, Rng& rng);

// Text edge list: "n m" then m lines "i j" with i < j, LF endings.
absl::Status WriteGraph(const Graph& g, std::ostream& out);
absl::StatusOr<Graph> ReadGraph(std::istream& in);

// One +1 / -1 per line.
absl::Status WriteLabels(const LabelVector& labels, std::ostream& out);
absl::StatusOr<LabelVector> ReadLabels(std::istream& in);

}  // namespace privrec

#endif  // PRIVREC_SBM_MODEL_H_
