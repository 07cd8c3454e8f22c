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

// estimate: command-line front end for sweeps, the lower-bound reference
// curve and the privacy auditor.
//
// Exit codes: 0 success, 1 internal error, 2 config error, 3 non-convergence,
// 4 audit violation.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "json.hpp"
#include "privrec/experiments.h"
#include "privrec/gmm_pipeline.h"

namespace {

using ::privrec::ExperimentKind;

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitViolation = 4;

int ExitCodeFor(const absl::Status& s) {
  if (absl::IsInvalidArgument(s) || absl::IsOutOfRange(s)) return kExitConfig;
  if (absl::IsAborted(s)) return kExitNotConverged;
  return kExitInternal;
}

int Fail(const absl::Status& s) {
  std::cerr << "estimate: " << s << "\n";
  return ExitCodeFor(s);
}

// "paper", "desk", or a path to a JSON profile.
absl::StatusOr<privrec::PipelineScaleProfile> ResolveProfile(
    const std::string& spec) {
  if (spec == "paper" || spec == "desk") {
    return privrec::ProfileFromJson({{"name", spec}});
  }
  std::ifstream in(spec);
  if (!in) {
    return absl::InvalidArgumentError(
        "--profile must be paper, desk or a readable JSON file");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(e.what());
  }
  return privrec::ProfileFromJson(j);
}

struct SweepFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string summary;
  std::optional<std::string> profile;
  bool non_private = false;
  std::optional<int> threads;
};

int RunSweepCommand(ExperimentKind kind, const SweepFlags& flags) {
  absl::StatusOr<privrec::SweepConfig> cfg =
      privrec::LoadSweepConfig(flags.config);
  if (!cfg.ok()) return Fail(cfg.status());
  if (cfg->kind != kind) {
    return Fail(absl::InvalidArgumentError(
        "config kind \"" + privrec::ExperimentKindName(cfg->kind) +
        "\" does not match the subcommand"));
  }
  if (flags.seed) cfg->seed = *flags.seed;
  if (flags.threads) cfg->threads = *flags.threads;
  if (flags.non_private) cfg->non_private = true;
  if (flags.profile) {
    absl::StatusOr<privrec::PipelineScaleProfile> p =
        ResolveProfile(*flags.profile);
    if (!p.ok()) return Fail(p.status());
    cfg->profile = *std::move(p);
  }
  if (!flags.out.empty()) cfg->output = flags.out;
  if (absl::Status s = cfg->Validate(); !s.ok()) return Fail(s);

  absl::StatusOr<privrec::SweepResult> result = privrec::RunSweep(*cfg);
  if (!result.ok()) return Fail(result.status());

  const std::string summary = privrec::SweepSummaryJson(*cfg, *result).dump(2);
  if (cfg->output.empty() || cfg->output == "-") {
    if (absl::Status s = privrec::WriteSweepCsv(*cfg, *result, std::cout);
        !s.ok()) {
      return Fail(s);
    }
  } else {
    std::ofstream csv(cfg->output, std::ios::binary);
    if (!csv) {
      return Fail(
          absl::InvalidArgumentError("cannot write " + cfg->output));
    }
    if (absl::Status s = privrec::WriteSweepCsv(*cfg, *result, csv); !s.ok()) {
      return Fail(s);
    }
    if (flags.summary.empty()) std::cout << summary << "\n";
  }
  if (!flags.summary.empty()) {
    std::ofstream out(flags.summary, std::ios::binary);
    if (!out) {
      return Fail(absl::InvalidArgumentError("cannot write " + flags.summary));
    }
    out << summary << "\n";
  }
  if (result->not_converged > 0) {
    std::cerr << "estimate: " << result->not_converged
              << " trial(s) did not converge\n";
    return kExitNotConverged;
  }
  return 0;
}

void AddSweepCommand(CLI::App& app, const std::string& name,
                     const std::string& description, ExperimentKind kind,
                     SweepFlags& flags, int& exit_code) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->add_option("--config", flags.config, "JSON sweep config")->required();
  sub->add_option("--seed", flags.seed, "master seed (overrides config)");
  sub->add_option("--out", flags.out, "CSV output path; '-' for stdout");
  sub->add_option("--summary", flags.summary,
                  "summary JSON path (default: stdout)");
  sub->add_option("--profile", flags.profile,
                  "scale profile: paper, desk or a JSON file");
  sub->add_option("--threads", flags.threads, "worker threads");
  if (kind == ExperimentKind::kSbmWeak) {
    sub->add_flag("--non-private", flags.non_private,
                  "zero noise baseline (no privacy)");
  }
  sub->callback([kind, &flags, &exit_code]() {
    exit_code = RunSweepCommand(kind, flags);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private community and mixture recovery experiments"};
  app.require_subcommand(1);
  int exit_code = 0;

  SweepFlags weak, exact, expmech, gmm;
  AddSweepCommand(app, "sbm-weak", "private weak recovery sweep",
                  ExperimentKind::kSbmWeak, weak, exit_code);
  AddSweepCommand(app, "sbm-exact", "private exact recovery sweep",
                  ExperimentKind::kSbmExact, exact, exit_code);
  AddSweepCommand(app, "sbm-expmech", "exponential-mechanism recovery sweep",
                  ExperimentKind::kSbmExpMech, expmech, exit_code);
  AddSweepCommand(app, "gmm", "private Gaussian-mixture pipeline sweep",
                  ExperimentKind::kGmm, gmm, exit_code);

  privrec::LowerBoundQuery query;
  CLI::App* lb = app.add_subcommand(
      "lower-bound", "reference lower-bound curve (constant = 1)");
  lb->add_option("--zeta", query.zeta, "target error rate")->required();
  lb->add_option("--eta", query.eta, "failure probability")->required();
  lb->add_option("--gamma", query.gamma, "bias")->required();
  lb->add_option("--d", query.d, "degree scale")->required();
  lb->add_option("--n", query.n, "vertices")->required();
  lb->callback([&]() {
    absl::StatusOr<privrec::LowerBoundValue> v =
        privrec::LowerBoundCurve(query);
    if (!v.ok()) {
      exit_code = Fail(v.status());
      return;
    }
    std::cout << privrec::ToJson(query, *v).dump(2) << "\n";
  });

  privrec::AuditRunConfig audit;
  std::string mechanism;
  CLI::App* au = app.add_subcommand("audit", "empirical privacy audit");
  au->add_option("--mechanism", mechanism,
                 "constant | edge-count | laplace-count | expmech-exact")
      ->required();
  au->add_option("--eps", audit.options.epsilon_claimed, "claimed epsilon")
      ->required();
  au->add_option("--trials", audit.options.trials, "runs per graph");
  au->add_option("--delta", audit.options.delta, "claimed delta");
  au->add_option("--z", audit.options.z, "Wilson interval quantile");
  au->add_option("--seed", audit.seed, "seed");
  au->add_option("--n", audit.n, "vertices of the audited graph");
  au->add_option("--d", audit.d, "degree scale of the audited graph");
  au->add_option("--gamma", audit.gamma, "bias of the audited graph");
  au->callback([&]() {
    absl::StatusOr<privrec::AuditMechanismId> id =
        privrec::ParseAuditMechanism(mechanism);
    if (!id.ok()) {
      exit_code = Fail(id.status());
      return;
    }
    audit.mechanism = *id;
    absl::StatusOr<privrec::AuditResult> r = privrec::RunAudit(audit);
    if (!r.ok()) {
      exit_code = Fail(r.status());
      return;
    }
    nlohmann::json j = privrec::ToJson(*r);
    j["mechanism"] = mechanism;
    std::cout << j.dump(2) << "\n";
    if (r->violation) exit_code = kExitViolation;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return exit_code;
}
