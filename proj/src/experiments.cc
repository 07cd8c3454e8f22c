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

#include "privrec/experiments.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "privrec/sbm_recovery.h"

namespace privrec {
namespace {

constexpr double kExactAuditTolerance = 1e-9;

absl::Status NonEmpty(const char* axis, size_t size) {
  if (size == 0) {
    return absl::InvalidArgumentError(absl::StrCat("grid axis \"", axis,
                                                   "\" is empty"));
  }
  return absl::OkStatus();
}

template <typename T>
absl::Status AllPositive(const char* axis, const std::vector<T>& values) {
  for (const T& v : values) {
    if (!(v > 0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("grid axis \"", axis, "\" needs positive values"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckDeltas(const std::vector<double>& deltas) {
  for (double d : deltas) {
    if (!(d > 0.0 && d < 1.0)) {
      return absl::InvalidArgumentError("grid delta values must lie in (0, 1)");
    }
  }
  return absl::OkStatus();
}

std::string StatusName(TrialStatus s) {
  switch (s) {
    case TrialStatus::kOk:
      return "ok";
    case TrialStatus::kRejected:
      return "rejected";
    case TrialStatus::kNotConverged:
      return "not_converged";
  }
  return "unknown";
}

double Param(const SweepCell& cell, const std::string& name) {
  for (const auto& [key, value] : cell) {
    if (key == name) return value;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

template <typename T>
std::vector<double> AsDoubles(const std::vector<T>& v) {
  return std::vector<double>(v.begin(), v.end());
}

// Accepts a scalar as a one-element axis.
template <typename T>
void ReadVector(const nlohmann::json& j, std::vector<T>& out) {
  if (j.is_array()) {
    out = j.get<std::vector<T>>();
  } else {
    out = {j.get<T>()};
  }
}

absl::StatusOr<SweepGrid> GridFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("grid not object");
  SweepGrid g;
  for (const auto& [key, value] : j.items()) {
    if (key == "n") {
      ReadVector(value, g.n);
    } else if (key == "d") {
      ReadVector(value, g.d);
    } else if (key == "gamma") {
      ReadVector(value, g.gamma);
    } else if (key == "alpha") {
      ReadVector(value, g.alpha);
    } else if (key == "beta") {
      ReadVector(value, g.beta);
    } else if (key == "epsilon") {
      ReadVector(value, g.epsilon);
    } else if (key == "delta") {
      ReadVector(value, g.delta);
    } else if (key == "k") {
      ReadVector(value, g.k);
    } else if (key == "dim") {
      ReadVector(value, g.dim);
    } else if (key == "delta_sep") {
      ReadVector(value, g.delta_sep);
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown grid axis \"", key, "\""));
    }
  }
  return g;
}

absl::StatusOr<MembershipOptions> MembershipFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("membership not object");
  MembershipOptions m;
  for (const auto& [key, value] : j.items()) {
    if (key == "similarity_weight") {
      m.similarity_weight = value.get<double>();
    } else if (key == "similarity_scale") {
      m.similarity_scale = value.get<double>();
    } else if (key == "step") {
      m.step = value.get<double>();
    } else if (key == "tol") {
      m.tol = value.get<double>();
    } else if (key == "max_iters") {
      m.max_iters = value.get<int>();
    } else if (key == "projection_tol") {
      m.projection_tol = value.get<double>();
    } else if (key == "projection_max_iters") {
      m.projection_max_iters = value.get<int>();
    } else {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown membership key \"", key, "\""));
    }
  }
  return m;
}

nlohmann::json ToJson(const MembershipOptions& m) {
  nlohmann::json j = {{"similarity_weight", m.similarity_weight},
                      {"step", m.step},
                      {"tol", m.tol},
                      {"max_iters", m.max_iters},
                      {"projection_tol", m.projection_tol},
                      {"projection_max_iters", m.projection_max_iters}};
  if (m.similarity_scale) j["similarity_scale"] = *m.similarity_scale;
  return j;
}

// Wilson score interval for c successes out of t at normal quantile z.
std::pair<double, double> Wilson(int64_t c, int64_t t, double z) {
  const double n = static_cast<double>(t);
  const double p = static_cast<double>(c) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double LogRatio(double num, double den) {
  if (!(num > 0.0) || !(den > 0.0)) {
    return -std::numeric_limits<double>::infinity();
  }
  return std::log(num / den);
}

}  // namespace

std::string ExperimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSbmWeak:
      return "sbm-weak";
    case ExperimentKind::kSbmExact:
      return "sbm-exact";
    case ExperimentKind::kSbmExpMech:
      return "sbm-expmech";
    case ExperimentKind::kGmm:
      return "gmm";
  }
  return "unknown";
}

absl::StatusOr<ExperimentKind> ParseExperimentKind(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::kSbmWeak, ExperimentKind::kSbmExact,
        ExperimentKind::kSbmExpMech, ExperimentKind::kGmm}) {
    if (ExperimentKindName(k) == name) return k;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown experiment kind \"", name, "\""));
}

absl::Status SweepConfig::Validate() const {
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (threads < 1) return absl::InvalidArgumentError("threads must be >= 1");
  const SweepGrid& g = grid;
  if (absl::Status s = NonEmpty("n", g.n.size()); !s.ok()) return s;
  for (int n : g.n) {
    if (n < 2) return absl::InvalidArgumentError("grid n values must be >= 2");
  }
  auto private_axes = [&]() -> absl::Status {
    if (absl::Status s = NonEmpty("epsilon", g.epsilon.size()); !s.ok()) {
      return s;
    }
    if (absl::Status s = AllPositive("epsilon", g.epsilon); !s.ok()) return s;
    if (absl::Status s = NonEmpty("delta", g.delta.size()); !s.ok()) return s;
    return CheckDeltas(g.delta);
  };
  auto degree_axes = [&]() -> absl::Status {
    if (absl::Status s = NonEmpty("d", g.d.size()); !s.ok()) return s;
    if (absl::Status s = AllPositive("d", g.d); !s.ok()) return s;
    if (absl::Status s = NonEmpty("gamma", g.gamma.size()); !s.ok()) return s;
    for (double gamma : g.gamma) {
      if (!(gamma > 0.0 && gamma <= 1.0)) {
        return absl::InvalidArgumentError("grid gamma values must lie in (0, 1]");
      }
    }
    return absl::OkStatus();
  };
  switch (kind) {
    case ExperimentKind::kSbmWeak:
      if (absl::Status s = degree_axes(); !s.ok()) return s;
      if (!non_private) return private_axes();
      return absl::OkStatus();
    case ExperimentKind::kSbmExact:
      if (absl::Status s = NonEmpty("alpha", g.alpha.size()); !s.ok()) return s;
      if (absl::Status s = NonEmpty("beta", g.beta.size()); !s.ok()) return s;
      if (absl::Status s = AllPositive("alpha", g.alpha); !s.ok()) return s;
      if (absl::Status s = AllPositive("beta", g.beta); !s.ok()) return s;
      return private_axes();
    case ExperimentKind::kSbmExpMech:
      if (absl::Status s = degree_axes(); !s.ok()) return s;
      for (int n : g.n) {
        if (n > kMaxExactStates) {
          return absl::InvalidArgumentError(absl::StrCat(
              "sbm-expmech enumerates 2^n states; need n <= ",
              kMaxExactStates));
        }
      }
      if (absl::Status s = NonEmpty("epsilon", g.epsilon.size()); !s.ok()) {
        return s;
      }
      return AllPositive("epsilon", g.epsilon);
    case ExperimentKind::kGmm:
      if (absl::Status s = NonEmpty("k", g.k.size()); !s.ok()) return s;
      if (absl::Status s = AllPositive("k", g.k); !s.ok()) return s;
      if (absl::Status s = NonEmpty("dim", g.dim.size()); !s.ok()) return s;
      if (absl::Status s = AllPositive("dim", g.dim); !s.ok()) return s;
      if (absl::Status s = NonEmpty("delta_sep", g.delta_sep.size());
          !s.ok()) {
        return s;
      }
      if (absl::Status s = AllPositive("delta_sep", g.delta_sep); !s.ok()) {
        return s;
      }
      if (absl::Status s = profile.Validate(); !s.ok()) return s;
      return private_axes();
  }
  return absl::InvalidArgumentError("unknown experiment kind");
}

absl::StatusOr<SweepConfig> SweepConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("config not object");
  SweepConfig cfg;
  try {
    if (!j.contains("kind")) return absl::InvalidArgumentError("missing kind");
    absl::StatusOr<ExperimentKind> kind =
        ParseExperimentKind(j.at("kind").get<std::string>());
    if (!kind.ok()) return kind.status();
    cfg.kind = *kind;
    for (const auto& [key, value] : j.items()) {
      if (key == "kind") {
      } else if (key == "grid") {
        absl::StatusOr<SweepGrid> grid = GridFromJson(value);
        if (!grid.ok()) return grid.status();
        cfg.grid = *std::move(grid);
      } else if (key == "trials") {
        cfg.trials = value.get<int>();
      } else if (key == "seed") {
        cfg.seed = value.get<uint64_t>();
      } else if (key == "output") {
        cfg.output = value.get<std::string>();
      } else if (key == "threads") {
        cfg.threads = value.get<int>();
      } else if (key == "record_wall_time") {
        cfg.record_wall_time = value.get<bool>();
      } else if (key == "non_private") {
        cfg.non_private = value.get<bool>();
      } else if (key == "balance") {
        cfg.balance = value.get<bool>();
      } else if (key == "balance_rough") {
        cfg.balance_rough = value.get<bool>();
      } else if (key == "projection") {
        if (!value.is_object()) {
          return absl::InvalidArgumentError("projection not object");
        }
        for (const auto& [pk, pv] : value.items()) {
          if (pk == "tol") {
            cfg.projection.tol = pv.get<double>();
          } else if (pk == "max_iters") {
            cfg.projection.max_iters = pv.get<int>();
          } else {
            return absl::InvalidArgumentError(
                absl::StrCat("unknown projection key \"", pk, "\""));
          }
        }
      } else if (key == "boost") {
        cfg.boost = value.get<bool>();
      } else if (key == "profile") {
        nlohmann::json profile = value;
        if (value.is_string()) profile = {{"name", value}};
        absl::StatusOr<PipelineScaleProfile> p = ProfileFromJson(profile);
        if (!p.ok()) return p.status();
        cfg.profile = *std::move(p);
      } else if (key == "membership") {
        absl::StatusOr<MembershipOptions> m = MembershipFromJson(value);
        if (!m.ok()) return m.status();
        cfg.membership = *m;
      } else {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown config key \"", key, "\""));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad config value: ", e.what()));
  }
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  return cfg;
}

absl::StatusOr<SweepConfig> LoadSweepConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return absl::InvalidArgumentError(absl::StrCat("cannot open ", path));
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat(path, ": invalid JSON: ", e.what()));
  }
  return SweepConfigFromJson(j);
}

nlohmann::json ToJson(const SweepConfig& cfg) {
  const SweepGrid& g = cfg.grid;
  nlohmann::json grid = nlohmann::json::object();
  auto put = [&grid](const char* name, const auto& values) {
    if (!values.empty()) grid[name] = values;
  };
  put("n", g.n);
  put("d", g.d);
  put("gamma", g.gamma);
  put("alpha", g.alpha);
  put("beta", g.beta);
  put("epsilon", g.epsilon);
  put("delta", g.delta);
  put("k", g.k);
  put("dim", g.dim);
  put("delta_sep", g.delta_sep);
  nlohmann::json j = {{"kind", ExperimentKindName(cfg.kind)},
                      {"grid", grid},
                      {"trials", cfg.trials},
                      {"seed", cfg.seed},
                      {"record_wall_time", cfg.record_wall_time}};
  switch (cfg.kind) {
    case ExperimentKind::kSbmWeak:
      j["non_private"] = cfg.non_private;
      j["balance"] = cfg.balance;
      j["projection"] = {{"tol", cfg.projection.tol},
                         {"max_iters", cfg.projection.max_iters}};
      break;
    case ExperimentKind::kSbmExact:
      j["balance_rough"] = cfg.balance_rough;
      j["projection"] = {{"tol", cfg.projection.tol},
                         {"max_iters", cfg.projection.max_iters}};
      break;
    case ExperimentKind::kSbmExpMech:
      j["boost"] = cfg.boost;
      break;
    case ExperimentKind::kGmm:
      j["profile"] = ToJson(cfg.profile);
      j["membership"] = ToJson(cfg.membership);
      break;
  }
  return j;
}

absl::StatusOr<std::vector<SweepCell>> ExpandGrid(const SweepConfig& cfg) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  const SweepGrid& g = cfg.grid;
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  switch (cfg.kind) {
    case ExperimentKind::kSbmWeak:
      axes = {{"n", AsDoubles(g.n)}, {"d", g.d}, {"gamma", g.gamma}};
      if (!cfg.non_private) {
        axes.push_back({"epsilon", g.epsilon});
        axes.push_back({"delta", g.delta});
      }
      break;
    case ExperimentKind::kSbmExact:
      axes = {{"n", AsDoubles(g.n)},
              {"alpha", g.alpha},
              {"beta", g.beta},
              {"epsilon", g.epsilon},
              {"delta", g.delta}};
      break;
    case ExperimentKind::kSbmExpMech:
      axes = {{"n", AsDoubles(g.n)},
              {"d", g.d},
              {"gamma", g.gamma},
              {"epsilon", g.epsilon}};
      break;
    case ExperimentKind::kGmm:
      axes = {{"n", AsDoubles(g.n)},     {"k", AsDoubles(g.k)},
              {"dim", AsDoubles(g.dim)}, {"delta_sep", g.delta_sep},
              {"epsilon", g.epsilon},    {"delta", g.delta}};
      break;
  }
  std::vector<SweepCell> cells;
  std::vector<size_t> index(axes.size(), 0);
  while (true) {
    SweepCell cell;
    for (size_t a = 0; a < axes.size(); ++a) {
      cell.emplace_back(axes[a].first, axes[a].second[index[a]]);
    }
    cells.push_back(std::move(cell));
    // Odometer with the last axis fastest.
    size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++index[a] < axes[a].second.size()) break;
      index[a] = 0;
      if (a == 0) return cells;
    }
    if (axes.empty()) return cells;
  }
}

absl::StatusOr<TrialRecord> RunTrial(const SweepConfig& cfg,
                                     const SweepCell& cell, int cell_index,
                                     int trial) {
  TrialRecord rec;
  rec.cell = cell_index;
  rec.trial = trial;
  rec.seed = MixSeed(MixSeed(cfg.seed, static_cast<uint64_t>(cell_index)),
                     static_cast<uint64_t>(trial));
  Rng rng(rec.seed);
  const auto start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(Param(cell, "n"));
  const PrivacyBudget budget{.epsilon = Param(cell, "epsilon"),
                             .delta = Param(cell, "delta")};

  auto mark_not_converged = [&rec](const absl::Status& s) {
    if (!absl::IsAborted(s)) return false;
    rec.status = TrialStatus::kNotConverged;
    rec.err = std::numeric_limits<double>::quiet_NaN();
    return true;
  };

  switch (cfg.kind) {
    case ExperimentKind::kSbmWeak: {
      const LabelVector x = LabelVector::Balanced(n);
      const double d = Param(cell, "d");
      const double gamma = Param(cell, "gamma");
      absl::StatusOr<Graph> g =
          SampleSbm({.n = n, .d = d, .gamma = gamma, .x = x}, rng);
      if (!g.ok()) return g.status();
      WeakRecoveryConfig wc{.d = d,
                            .gamma = gamma,
                            .budget = std::nullopt,
                            .projection = cfg.projection,
                            .balance = cfg.balance};
      if (!cfg.non_private) wc.budget = budget;
      absl::StatusOr<WeakRecoveryResult> r = WeakRecovery(*g, wc, rng);
      if (!r.ok()) {
        if (mark_not_converged(r.status())) break;
        return r.status();
      }
      absl::StatusOr<double> err = Err(r->labels, x);
      if (!err.ok()) return err.status();
      rec.err = *err;
      if (!cfg.non_private) rec.budget = budget;
      break;
    }
    case ExperimentKind::kSbmExact: {
      const LabelVector x = LabelVector::Balanced(n);
      const double alpha = Param(cell, "alpha");
      const double beta = Param(cell, "beta");
      absl::StatusOr<DegreeBias> db = FromAlphaBeta(alpha, beta, n);
      if (!db.ok()) return db.status();
      absl::StatusOr<Graph> g =
          SampleSbm({.n = n, .d = db->d, .gamma = db->gamma, .x = x}, rng);
      if (!g.ok()) return g.status();
      absl::StatusOr<ExactRecoveryResult> r = ExactRecoveryAlphaBeta(
          *g, alpha, beta, budget, rng,
          {.projection = cfg.projection, .balance_rough = cfg.balance_rough});
      if (!r.ok()) {
        if (mark_not_converged(r.status())) break;
        return r.status();
      }
      absl::StatusOr<double> err = Err(r->labels, x);
      if (!err.ok()) return err.status();
      rec.err = *err;
      rec.budget = r->total_budget;
      break;
    }
    case ExperimentKind::kSbmExpMech: {
      const LabelVector x = LabelVector::Balanced(n);
      const double d = Param(cell, "d");
      const double gamma = Param(cell, "gamma");
      absl::StatusOr<Graph> g =
          SampleSbm({.n = n, .d = d, .gamma = gamma, .x = x}, rng);
      if (!g.ok()) return g.status();
      ExpMechConfig ec{.epsilon = Param(cell, "epsilon"),
                       .mode = ExpMechMode::kExact,
                       .boost = cfg.boost};
      absl::StatusOr<ExpMechResult> r = ExpMechRecovery(*g, d, gamma, ec, rng);
      if (!r.ok()) return r.status();
      absl::StatusOr<double> err = Err(r->labels, x);
      if (!err.ok()) return err.status();
      rec.err = *err;
      rec.budget = r->total_budget;
      break;
    }
    case ExperimentKind::kGmm: {
      const int k = static_cast<int>(Param(cell, "k"));
      const int dim = static_cast<int>(Param(cell, "dim"));
      absl::StatusOr<MixtureDataset> ds =
          SampleMixture(k, dim, Param(cell, "delta_sep"), n, rng);
      if (!ds.ok()) return ds.status();
      GmmPipelineConfig gc{.k = k,
                           .budget = budget,
                           .profile = cfg.profile,
                           .membership = cfg.membership};
      absl::StatusOr<GmmPipelineResult> r = RunGmmPipeline(*ds, gc, rng);
      if (!r.ok()) {
        if (mark_not_converged(r.status())) break;
        return r.status();
      }
      rec.budget = r->budget_report.composed;
      if (r->accepted) {
        absl::StatusOr<double> err = MatchedCenterError(r->centers, ds->means);
        if (!err.ok()) return err.status();
        rec.err = *err;
      } else {
        rec.status = TrialStatus::kRejected;
        rec.reject_stage = r->reject_stage;
        rec.err = std::numeric_limits<double>::quiet_NaN();
      }
      break;
    }
  }
  if (cfg.record_wall_time) {
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  }
  return rec;
}

absl::StatusOr<SweepResult> RunSweep(const SweepConfig& cfg) {
  absl::StatusOr<std::vector<SweepCell>> cells = ExpandGrid(cfg);
  if (!cells.ok()) return cells.status();
  SweepResult result;
  result.cells = *std::move(cells);
  const size_t tasks = result.cells.size() * static_cast<size_t>(cfg.trials);
  std::vector<absl::StatusOr<TrialRecord>> slots(
      tasks, absl::UnknownError("trial not run"));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next++; i < tasks; i = next++) {
      const int cell = static_cast<int>(i / cfg.trials);
      const int trial = static_cast<int>(i % cfg.trials);
      slots[i] = RunTrial(cfg, result.cells[cell], cell, trial);
    }
  };
  const int threads =
      static_cast<int>(std::min<size_t>(cfg.threads, std::max<size_t>(tasks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  result.rows.reserve(tasks);
  for (auto& slot : slots) {
    if (!slot.ok()) return slot.status();
    result.rows.push_back(*std::move(slot));
  }
  for (size_t c = 0; c < result.cells.size(); ++c) {
    CellSummary s;
    s.cell = static_cast<int>(c);
    s.params = result.cells[c];
    double sum = 0.0;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialRecord& r = result.rows[c * cfg.trials + t];
      ++s.trials;
      switch (r.status) {
        case TrialStatus::kOk:
          ++s.ok;
          sum += r.err;
          s.max_err = std::max(s.max_err, r.err);
          if (r.err == 0.0) ++s.exact_successes;
          break;
        case TrialStatus::kRejected:
          ++s.rejected;
          break;
        case TrialStatus::kNotConverged:
          ++s.not_converged;
          break;
      }
    }
    s.mean_err = s.ok > 0 ? sum / s.ok : std::numeric_limits<double>::quiet_NaN();
    result.not_converged += s.not_converged;
    result.summaries.push_back(std::move(s));
  }
  return result;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

absl::Status WriteSweepCsv(const SweepConfig& cfg, const SweepResult& result,
                           std::ostream& out) {
  std::vector<std::string> header = {"csv_version", "kind", "cell", "trial",
                                     "seed"};
  if (!result.cells.empty()) {
    for (const auto& [name, value] : result.cells.front()) {
      header.push_back(name);
    }
  }
  for (const char* c : {"status", "err", "reject_stage", "budget_epsilon",
                        "budget_delta"}) {
    header.push_back(c);
  }
  if (cfg.record_wall_time) header.push_back("wall_seconds");
  out << absl::StrJoin(header, ",") << "\n";
  const std::string kind = ExperimentKindName(cfg.kind);
  for (const TrialRecord& r : result.rows) {
    std::vector<std::string> row = {absl::StrCat(kSweepCsvVersion), kind,
                                    absl::StrCat(r.cell), absl::StrCat(r.trial),
                                    absl::StrCat(r.seed)};
    for (const auto& [name, value] : result.cells[r.cell]) {
      row.push_back(FormatDouble(value));
    }
    row.push_back(StatusName(r.status));
    row.push_back(FormatDouble(r.err));
    row.push_back(r.reject_stage);
    row.push_back(FormatDouble(r.budget.epsilon));
    row.push_back(FormatDouble(r.budget.delta));
    if (cfg.record_wall_time) row.push_back(FormatDouble(r.wall_seconds));
    out << absl::StrJoin(row, ",") << "\n";
  }
  if (!out) return absl::InternalError("failed to write CSV");
  return absl::OkStatus();
}

nlohmann::json SweepSummaryJson(const SweepConfig& cfg,
                                const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary& s : result.summaries) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, value] : s.params) params[name] = value;
    cells.push_back({{"cell", s.cell},
                     {"params", params},
                     {"trials", s.trials},
                     {"ok", s.ok},
                     {"rejected", s.rejected},
                     {"not_converged", s.not_converged},
                     {"mean_err", s.mean_err},
                     {"max_err", s.max_err},
                     {"exact_successes", s.exact_successes}});
  }
  return {{"csv_version", kSweepCsvVersion},
          {"config", ToJson(cfg)},
          {"cells", cells},
          {"not_converged", result.not_converged}};
}

absl::Status LowerBoundQuery::Validate() const {
  if (n < 2) return absl::InvalidArgumentError("need n >= 2");
  if (!(zeta >= 1.0 / n && zeta <= 0.04)) {
    return absl::InvalidArgumentError(
        absl::StrCat("zeta = ", zeta, " outside [1/n, 0.04] = [", 1.0 / n,
                     ", 0.04]"));
  }
  if (!(eta > 0.0 && eta < 1.0)) {
    return absl::InvalidArgumentError("eta must lie in (0, 1)");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    return absl::InvalidArgumentError("gamma must lie in (0, 1]");
  }
  if (!(d > 0.0) || !std::isfinite(d)) {
    return absl::InvalidArgumentError("d must be positive");
  }
  return absl::OkStatus();
}

absl::StatusOr<LowerBoundValue> LowerBoundCurve(const LowerBoundQuery& q) {
  if (absl::Status s = q.Validate(); !s.ok()) return s;
  const double gd = q.gamma * q.d;
  LowerBoundValue v;
  v.rhs = std::log(1.0 / (8.0 * std::numbers::e * q.zeta)) / gd +
          std::log(1.0 / q.eta) / (q.zeta * q.n * gd);
  v.epsilon = 0.5 * std::log1p(v.rhs);
  return v;
}

nlohmann::json ToJson(const LowerBoundQuery& q, const LowerBoundValue& v) {
  return {{"label", v.label},
          {"constant", v.constant},
          {"epsilon", v.epsilon},
          {"rhs", v.rhs},
          {"query",
           {{"zeta", q.zeta},
            {"eta", q.eta},
            {"gamma", q.gamma},
            {"d", q.d},
            {"n", q.n}}}};
}

nlohmann::json ToJson(const AuditResult& r) {
  return {{"epsilon_hat", r.epsilon_hat},
          {"epsilon_lower", r.epsilon_lower},
          {"slack", r.slack},
          {"epsilon_claimed", r.epsilon_claimed},
          {"verdict", r.violation ? "VIOLATION" : "PASS"},
          {"exact", r.exact},
          {"trials", r.trials},
          {"cells", r.cells}};
}

absl::StatusOr<AuditResult> AuditAdjacentPair(const DiscreteMechanism& mechanism,
                                              const Graph& g,
                                              const Graph& g_adjacent,
                                              const AuditOptions& options,
                                              Rng& rng) {
  if (!(options.epsilon_claimed >= 0.0) || !(options.delta >= 0.0) ||
      !(options.delta < 1.0) || !(options.z > 0.0)) {
    return absl::InvalidArgumentError(
        "need epsilon >= 0, 0 <= delta < 1 and z > 0");
  }
  if (g.HammingDistance(g_adjacent) != 1) {
    return absl::InvalidArgumentError("graphs are not adjacent");
  }
  const double needed = options.z * options.z * std::exp(options.epsilon_claimed);
  if (!(static_cast<double>(options.trials) > needed)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "insufficient trials: ", options.trials, " <= z^2 e^eps = ", needed,
        "; no cell could exceed the claimed epsilon"));
  }
  std::map<int64_t, std::pair<int64_t, int64_t>> counts;
  Rng rng_a = rng.Split(0);
  Rng rng_b = rng.Split(1);
  for (int64_t t = 0; t < options.trials; ++t) {
    absl::StatusOr<int64_t> a = mechanism(g, rng_a);
    if (!a.ok()) return a.status();
    ++counts[*a].first;
    absl::StatusOr<int64_t> b = mechanism(g_adjacent, rng_b);
    if (!b.ok()) return b.status();
    ++counts[*b].second;
  }
  AuditResult r;
  r.trials = options.trials;
  r.epsilon_claimed = options.epsilon_claimed;
  r.cells = static_cast<int>(counts.size());
  const double denom = static_cast<double>(options.trials + r.cells);
  // Union bound over cells and both directions: the Gaussian tail bound
  // exp(-z^2/2) is split across 2 * cells intervals.
  const double z_cell =
      std::sqrt(options.z * options.z + 2.0 * std::log(2.0 * r.cells));
  double hat = 0.0;
  double lower = 0.0;
  for (const auto& [cell, c] : counts) {
    const double pa = (c.first + 1.0) / denom;
    const double pb = (c.second + 1.0) / denom;
    hat = std::max({hat, LogRatio(pa - options.delta, pb),
                    LogRatio(pb - options.delta, pa)});
    const auto [la, ua] = Wilson(c.first, options.trials, z_cell);
    const auto [lb, ub] = Wilson(c.second, options.trials, z_cell);
    lower = std::max({lower, LogRatio(la - options.delta, ub),
                      LogRatio(lb - options.delta, ua)});
  }
  r.epsilon_hat = hat;
  r.epsilon_lower = lower;
  r.slack = std::max(0.0, hat - lower);
  r.violation = lower > options.epsilon_claimed;
  return r;
}

absl::StatusOr<AuditResult> AuditExact(const ExactAuditInput& input,
                                       double epsilon_claimed) {
  if (input.log_pmf.empty() || input.adjacent_log_pmfs.empty()) {
    return absl::InvalidArgumentError("need a pmf and at least one neighbor");
  }
  double worst = 0.0;
  for (const std::vector<double>& other : input.adjacent_log_pmfs) {
    if (other.size() != input.log_pmf.size()) {
      return absl::InvalidArgumentError("pmf sizes differ");
    }
    for (size_t o = 0; o < other.size(); ++o) {
      worst = std::max(worst, std::abs(input.log_pmf[o] - other[o]));
    }
  }
  AuditResult r;
  r.exact = true;
  r.epsilon_hat = worst;
  r.epsilon_lower = worst;
  r.epsilon_claimed = epsilon_claimed;
  r.violation = worst > epsilon_claimed + kExactAuditTolerance;
  r.cells = static_cast<int>(input.log_pmf.size());
  return r;
}

absl::StatusOr<AuditMechanismId> ParseAuditMechanism(const std::string& id) {
  for (AuditMechanismId m :
       {AuditMechanismId::kConstant, AuditMechanismId::kEdgeCount,
        AuditMechanismId::kLaplaceCount, AuditMechanismId::kExpMechExact}) {
    if (AuditMechanismName(m) == id) return m;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown mechanism \"", id,
                   "\"; expected constant, edge-count, laplace-count or "
                   "expmech-exact"));
}

std::string AuditMechanismName(AuditMechanismId id) {
  switch (id) {
    case AuditMechanismId::kConstant:
      return "constant";
    case AuditMechanismId::kEdgeCount:
      return "edge-count";
    case AuditMechanismId::kLaplaceCount:
      return "laplace-count";
    case AuditMechanismId::kExpMechExact:
      return "expmech-exact";
  }
  return "unknown";
}

absl::StatusOr<AuditResult> RunAudit(const AuditRunConfig& cfg) {
  Rng rng(cfg.seed);
  absl::StatusOr<Graph> g = SampleSbm(
      {.n = cfg.n, .d = cfg.d, .gamma = cfg.gamma,
       .x = LabelVector::Balanced(cfg.n)},
      rng);
  if (!g.ok()) return g.status();
  const double eps = cfg.options.epsilon_claimed;

  if (cfg.mechanism == AuditMechanismId::kExpMechExact) {
    ExactAuditInput input;
    absl::StatusOr<std::vector<double>> base =
        ExactGibbsLogPmf(*g, cfg.d, cfg.gamma, eps);
    if (!base.ok()) return base.status();
    input.log_pmf = *std::move(base);
    for (const Graph& h : EdgeNeighbors(*g)) {
      absl::StatusOr<std::vector<double>> other =
          ExactGibbsLogPmf(h, cfg.d, cfg.gamma, eps);
      if (!other.ok()) return other.status();
      input.adjacent_log_pmfs.push_back(*std::move(other));
    }
    return AuditExact(input, eps);
  }

  DiscreteMechanism mechanism;
  switch (cfg.mechanism) {
    case AuditMechanismId::kConstant:
      mechanism = [](const Graph&, Rng&) -> absl::StatusOr<int64_t> {
        return 0;
      };
      break;
    case AuditMechanismId::kEdgeCount:
      mechanism = [](const Graph& h, Rng&) -> absl::StatusOr<int64_t> {
        return h.num_edges();
      };
      break;
    case AuditMechanismId::kLaplaceCount:
      if (!(eps > 0.0)) {
        return absl::InvalidArgumentError("laplace-count needs eps > 0");
      }
      mechanism = [eps](const Graph& h, Rng& r) -> absl::StatusOr<int64_t> {
        absl::StatusOr<double> v =
            AddLaplace(static_cast<double>(h.num_edges()), 1.0, eps, r);
        if (!v.ok()) return v.status();
        return static_cast<int64_t>(std::floor(*v * 2.0 * eps));
      };
      break;
    case AuditMechanismId::kExpMechExact:
      break;
  }
  const Graph adjacent = g->Toggled(0, 1);
  return AuditAdjacentPair(mechanism, *g, adjacent, cfg.options, rng);
}

}  // namespace privrec
