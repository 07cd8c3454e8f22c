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

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "absl/strings/str_cat.h"

namespace privrec {

absl::StatusOr<LabelVector> LabelVector::Create(std::vector<int> entries) {
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i] != 1 && entries[i] != -1) {
      return absl::InvalidArgumentError(
          absl::StrCat("label ", i, " is ", entries[i], ", expected +1 or -1"));
    }
  }
  return LabelVector(std::move(entries));
}

LabelVector LabelVector::Balanced(int n) {
  std::vector<int> entries(n, -1);
  std::fill(entries.begin(), entries.begin() + n / 2, 1);
  return LabelVector(std::move(entries));
}

LabelVector LabelVector::Random(int n, Rng& rng) {
  std::vector<int> entries(n);
  for (int& e : entries) e = rng.Bernoulli(0.5) ? 1 : -1;
  return LabelVector(std::move(entries));
}

LabelVector LabelVector::Negated() const {
  std::vector<int> entries = entries_;
  for (int& e : entries) e = -e;
  return LabelVector(std::move(entries));
}

LabelVector LabelVector::WithFlipped(int i) const {
  std::vector<int> entries = entries_;
  entries[i] = -entries[i];
  return LabelVector(std::move(entries));
}

bool LabelVector::IsBalanced() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0) == 0;
}

LabelVector SignVector(const Eigen::VectorXd& v) {
  std::vector<int> entries(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) entries[i] = v[i] >= 0 ? 1 : -1;
  return *LabelVector::Create(std::move(entries));
}

absl::StatusOr<double> Err(const LabelVector& a, const LabelVector& b) {
  if (a.size() != b.size()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "label vectors differ in length: ", a.size(), " vs ", b.size()));
  }
  if (a.size() == 0) return 0.0;
  int disagree = 0;
  for (int i = 0; i < a.size(); ++i) disagree += a[i] != b[i];
  const int best = std::min(disagree, a.size() - disagree);
  return static_cast<double>(best) / a.size();
}

absl::StatusOr<Graph> Graph::Create(int n, std::vector<Edge> edges) {
  if (n < 0) return absl::InvalidArgumentError("negative vertex count");
  Graph g(n);
  for (Edge& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
    if (e.first == e.second) {
      return absl::InvalidArgumentError(
          absl::StrCat("self-loop at vertex ", e.first));
    }
    if (e.first < 0 || e.second >= n) {
      return absl::InvalidArgumentError(absl::StrCat(
          "edge {", e.first, ", ", e.second, "} out of range for n=", n));
    }
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    return absl::InvalidArgumentError("duplicate edge");
  }
  g.keys_.reserve(edges.size());
  for (const Edge& e : edges) g.keys_.insert(g.Key(e.first, e.second));
  g.edges_ = std::move(edges);
  return g;
}

bool Graph::HasEdge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return keys_.contains(Key(i, j));
}

Graph Graph::Toggled(int i, int j) const {
  if (i > j) std::swap(i, j);
  Graph g = *this;
  const Edge e{i, j};
  auto it = std::lower_bound(g.edges_.begin(), g.edges_.end(), e);
  if (it != g.edges_.end() && *it == e) {
    g.edges_.erase(it);
    g.keys_.erase(Key(i, j));
  } else {
    g.edges_.insert(it, e);
    g.keys_.insert(Key(i, j));
  }
  return g;
}

int64_t Graph::HammingDistance(const Graph& other) const {
  std::vector<Edge> diff;
  std::set_symmetric_difference(edges_.begin(), edges_.end(),
                                other.edges_.begin(), other.edges_.end(),
                                std::back_inserter(diff));
  return static_cast<int64_t>(diff.size());
}

std::vector<int> Graph::Degrees() const {
  std::vector<int> degree(n_, 0);
  for (const auto& [i, j] : edges_) {
    ++degree[i];
    ++degree[j];
  }
  return degree;
}

std::vector<Graph> EdgeNeighbors(const Graph& g) {
  std::vector<Graph> out;
  out.reserve(static_cast<size_t>(g.n()) * (g.n() - 1) / 2);
  for (int i = 0; i < g.n(); ++i) {
    for (int j = i + 1; j < g.n(); ++j) out.push_back(g.Toggled(i, j));
  }
  return out;
}

absl::Status SbmParams::Validate() const {
  if (n < 2) return absl::InvalidArgumentError("SBM needs n >= 2");
  if (x.size() != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("label vector has length ", x.size(), ", expected ", n));
  }
  if (!(d > 0.0)) return absl::InvalidArgumentError("d must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("gamma must lie in (0, 1], got ", gamma));
  }
  const double p_hi = (1.0 + gamma) * d / n;
  if (p_hi > 1.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "edge probability (1 + gamma) d / n = ", p_hi, " exceeds 1"));
  }
  return absl::OkStatus();
}

absl::StatusOr<DegreeBias> FromAlphaBeta(double alpha, double beta, int n) {
  if (!(alpha > beta) || !(beta > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("need alpha > beta > 0, got alpha=", alpha,
                     " beta=", beta));
  }
  if (n < 2) return absl::InvalidArgumentError("need n >= 2");
  const double log_n = std::log(static_cast<double>(n));
  if (alpha * log_n / n > 1.0) {
    return absl::InvalidArgumentError(
        "intra-community edge probability alpha log(n) / n exceeds 1");
  }
  return DegreeBias{.d = 0.5 * (alpha + beta) * log_n,
                    .gamma = (alpha - beta) / (alpha + beta)};
}

absl::StatusOr<Graph> SampleSbm(const SbmParams& params, Rng& rng) {
  if (absl::Status s = params.Validate(); !s.ok()) return s;
  const int n = params.n;
  const double p_same = (1.0 + params.gamma) * params.d / n;
  const double p_diff = (1.0 - params.gamma) * params.d / n;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = params.x[i] == params.x[j] ? p_same : p_diff;
      if (rng.Uniform() < p) edges.emplace_back(i, j);
    }
  }
  return Graph::Create(n, std::move(edges));
}

SymmetricMatrix CenterRescale(const Graph& g, double d, double gamma) {
  const int n = g.n();
  const double scale = 1.0 / (gamma * d);
  const double off = -scale * d / n;  // == -1 / (gamma n)
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(n, n, off);
  y.diagonal().setZero();
  const double on = scale * (1.0 - d / n);
  for (const auto& [i, j] : g.edges()) {
    y(i, j) = on;
    y(j, i) = on;
  }
  return *SymmetricMatrix::FromDense(y);
}

std::pair<Graph, Graph> SplitGraph(const Graph& g, double p, Rng& rng) {
  std::vector<Edge> first;
  std::vector<Edge> second;
  for (const Edge& e : g.edges()) {
    if (rng.Uniform() < p) {
      first.push_back(e);
    } else {
      second.push_back(e);
    }
  }
  return {*Graph::Create(g.n(), std::move(first)),
          *Graph::Create(g.n(), std::move(second))};
}

absl::Status WriteGraph(const Graph& g, std::ostream& out) {
  out << g.n() << ' ' << g.num_edges() << '\n';
  for (const auto& [i, j] : g.edges()) out << i << ' ' << j << '\n';
  if (!out) return absl::InternalError("failed writing graph");
  return absl::OkStatus();
}

absl::StatusOr<Graph> ReadGraph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    return absl::InvalidArgumentError("graph file is empty");
  }
  std::istringstream header(line);
  int64_t n = -1;
  int64_t m = -1;
  if (!(header >> n >> m) || n < 0 || m < 0) {
    return absl::InvalidArgumentError("malformed header, expected \"n m\"");
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  for (int64_t k = 0; k < m; ++k) {
    if (!std::getline(in, line)) {
      return absl::InvalidArgumentError(
          absl::StrCat("expected ", m, " edges, found ", k));
    }
    std::istringstream row(line);
    int i = -1;
    int j = -1;
    if (!(row >> i >> j)) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed edge line ", k + 2));
    }
    if (i >= j) {
      return absl::InvalidArgumentError(
          absl::StrCat("edge line ", k + 2, " must satisfy i < j"));
    }
    edges.emplace_back(i, j);
  }
  return Graph::Create(static_cast<int>(n), std::move(edges));
}

absl::Status WriteLabels(const LabelVector& labels, std::ostream& out) {
  for (int v : labels.entries()) out << v << '\n';
  if (!out) return absl::InternalError("failed writing labels");
  return absl::OkStatus();
}

absl::StatusOr<LabelVector> ReadLabels(std::istream& in) {
  std::vector<int> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int v = 0;
    if (!(row >> v)) {
      return absl::InvalidArgumentError(
          absl::StrCat("malformed label line ", entries.size() + 1));
    }
    entries.push_back(v);
  }
  return LabelVector::Create(std::move(entries));
}

}  // namespace privrec
