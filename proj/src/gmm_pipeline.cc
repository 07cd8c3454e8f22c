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

#include "privrec/gmm_pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "privrec/convex_projection.h"
#include "privrec/symmetric_matrix.h"

namespace privrec {

absl::Status MixtureDataset::Validate() const {
  if (!points.allFinite()) {
    return absl::InvalidArgumentError("dataset has non-finite coordinates");
  }
  if (!truth.empty() && truth.size() != static_cast<size_t>(points.rows())) {
    return absl::InvalidArgumentError("truth labels do not match point count");
  }
  if (means.rows() > 0 && means.cols() != points.cols()) {
    return absl::InvalidArgumentError("means and points differ in dimension");
  }
  return absl::OkStatus();
}

absl::StatusOr<Eigen::MatrixXd> PlaceMeans(int k, int d, double delta_sep) {
  if (k < 1 || d < 1) return absl::InvalidArgumentError("need k, d >= 1");
  if (!(delta_sep >= 0.0) || !std::isfinite(delta_sep)) {
    return absl::InvalidArgumentError("delta_sep must be finite and >= 0");
  }
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(k, d);
  if (d >= k) {
    for (int l = 0; l < k; ++l) means(l, l) = delta_sep / std::sqrt(2.0);
    return means;
  }
  // Lattice points delta_sep * {0..side-1}^d are pairwise >= delta_sep apart;
  // pick k of them greedily, each maximizing the distance to those chosen.
  int side = 2;
  while (std::pow(static_cast<double>(side), d) < 2.0 * k) ++side;
  const int64_t total = static_cast<int64_t>(std::pow(side, d) + 0.5);
  Eigen::MatrixXd lattice(total, d);
  for (int64_t c = 0; c < total; ++c) {
    int64_t rest = c;
    for (int j = 0; j < d; ++j) {
      lattice(c, j) = delta_sep * static_cast<double>(rest % side);
      rest /= side;
    }
  }
  std::vector<double> nearest(total, std::numeric_limits<double>::infinity());
  int64_t pick = 0;
  for (int l = 0; l < k; ++l) {
    means.row(l) = lattice.row(pick);
    int64_t best = -1;
    for (int64_t c = 0; c < total; ++c) {
      nearest[c] = std::min(nearest[c],
                            (lattice.row(c) - lattice.row(pick)).squaredNorm());
      if (best < 0 || nearest[c] > nearest[best]) best = c;
    }
    pick = best;
  }
  return means;
}

absl::StatusOr<MixtureDataset> SampleMixture(int k, int d, double delta_sep,
                                             int n, Rng& rng) {
  if (n < 1) return absl::InvalidArgumentError("need n >= 1");
  absl::StatusOr<Eigen::MatrixXd> means = PlaceMeans(k, d, delta_sep);
  if (!means.ok()) return means.status();
  MixtureDataset ds;
  ds.means = *std::move(means);
  ds.delta_sep = delta_sep;
  ds.points.resize(n, d);
  ds.truth.resize(n);
  for (int i = 0; i < n; ++i) {
    const int label = static_cast<int>(rng.UniformIndex(k));
    ds.truth[i] = label;
    for (int j = 0; j < d; ++j) {
      ds.points(i, j) = ds.means(label, j) + rng.Normal();
    }
  }
  return ds;
}

absl::Status WriteMixtureCsv(const MixtureDataset& ds, std::ostream& out) {
  const bool labeled = !ds.truth.empty();
  for (int j = 0; j < ds.dim(); ++j) out << (j ? "," : "") << 'x' << j;
  if (labeled) out << ",label";
  out << '\n';
  out.precision(17);
  for (int i = 0; i < ds.n(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) out << (j ? "," : "") << ds.points(i, j);
    if (labeled) out << ',' << ds.truth[i];
    out << '\n';
  }
  if (!out) return absl::InternalError("failed writing dataset");
  return absl::OkStatus();
}

absl::StatusOr<MixtureDataset> ReadMixtureCsv(std::istream& in,
                                              double delta_sep) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  bool has_label = false;
  int width = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view view = absl::StripAsciiWhitespace(line);
    if (view.empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(view, ',');
    if (width < 0) {
      double probe = 0.0;
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(fields[0]), &probe)) {
        has_label = absl::StripAsciiWhitespace(fields.back()) == "label";
        width = static_cast<int>(fields.size());
        continue;
      }
      width = static_cast<int>(fields.size());
    }
    if (static_cast<int>(fields.size()) != width) {
      return absl::InvalidArgumentError(
          absl::StrCat("line ", line_no, " has ", fields.size(),
                       " fields, expected ", width));
    }
    const int coords = has_label ? width - 1 : width;
    std::vector<double> row(coords);
    for (int j = 0; j < coords; ++j) {
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(fields[j]), &row[j])) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad number in column ", j));
      }
    }
    if (has_label) {
      int label = 0;
      if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(fields.back()),
                            &label)) {
        return absl::InvalidArgumentError(
            absl::StrCat("line ", line_no, ": bad label"));
      }
      labels.push_back(label);
    }
    rows.push_back(std::move(row));
  }
  MixtureDataset ds;
  ds.delta_sep = delta_sep;
  const int d = rows.empty() ? 0 : static_cast<int>(rows[0].size());
  ds.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < d; ++j) ds.points(i, j) = rows[i][j];
  }
  ds.truth = std::move(labels);
  if (absl::Status s = ds.Validate(); !s.ok()) return s;
  return ds;
}

PipelineScaleProfile PipelineScaleProfile::Paper() { return {}; }

PipelineScaleProfile PipelineScaleProfile::Desk() {
  PipelineScaleProfile p;
  p.name = "desk";
  p.subsample_size = 64;
  p.gate_scale_exponent = 1.0;
  p.gate_reject_exponent = 1.7;
  p.gate_slack_exponent = 0.1;
  p.nu_noise_exponent = 2.0;
  p.jl_dim = 20;
  p.bin_width_sep_fraction = 0.125;
  p.hist_alpha = 0.05;
  p.hist_beta = 0.05;
  p.hist_eps_factor = 1000.0;
  p.calibrated_final_noise = true;
  p.objective_coeff = 4.0;
  return p;
}

absl::Status PipelineScaleProfile::Validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(subsample_exponent) || !positive(gate_scale_exponent) ||
      !positive(gate_reject_exponent) || !positive(gate_slack_exponent) ||
      !positive(nu_noise_exponent)) {
    return absl::InvalidArgumentError("profile exponents must be positive");
  }
  if ((subsample_size && *subsample_size < 1) || (jl_dim && *jl_dim < 1)) {
    return absl::InvalidArgumentError(
        "subsample_size and jl_dim must be >= 1");
  }
  for (const std::optional<double>& v :
       {bin_width_sep_fraction, hist_eps_factor, objective_coeff}) {
    if (v && !positive(*v)) {
      return absl::InvalidArgumentError("profile constants must be positive");
    }
  }
  for (const std::optional<double>& v : {hist_alpha, hist_beta}) {
    if (v && !(*v > 0.0 && *v < 1.0)) {
      return absl::InvalidArgumentError(
          "hist_alpha and hist_beta must lie in (0, 1)");
    }
  }
  return absl::OkStatus();
}

nlohmann::json ToJson(const PipelineScaleProfile& p) {
  nlohmann::json j = {{"name", p.name},
                      {"subsample_exponent", p.subsample_exponent},
                      {"gate_scale_exponent", p.gate_scale_exponent},
                      {"gate_reject_exponent", p.gate_reject_exponent},
                      {"gate_slack_exponent", p.gate_slack_exponent},
                      {"nu_noise_exponent", p.nu_noise_exponent},
                      {"calibrated_final_noise", p.calibrated_final_noise},
                      {"zero_noise", p.zero_noise}};
  if (p.subsample_size) j["subsample_size"] = *p.subsample_size;
  if (p.jl_dim) j["jl_dim"] = *p.jl_dim;
  if (p.bin_width_sep_fraction) {
    j["bin_width_sep_fraction"] = *p.bin_width_sep_fraction;
  }
  if (p.hist_alpha) j["hist_alpha"] = *p.hist_alpha;
  if (p.hist_beta) j["hist_beta"] = *p.hist_beta;
  if (p.hist_eps_factor) j["hist_eps_factor"] = *p.hist_eps_factor;
  if (p.objective_coeff) j["objective_coeff"] = *p.objective_coeff;
  return j;
}

absl::StatusOr<PipelineScaleProfile> ProfileFromJson(const nlohmann::json& j) {
  if (!j.is_object()) return absl::InvalidArgumentError("profile not object");
  PipelineScaleProfile p;
  const std::string name = j.value("name", std::string("paper"));
  if (name == "desk") {
    p = PipelineScaleProfile::Desk();
  } else if (name != "paper") {
    return absl::InvalidArgumentError(
        absl::StrCat("unknown profile \"", name, "\""));
  }
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "name") {
      } else if (key == "subsample_exponent") {
        p.subsample_exponent = value.get<double>();
      } else if (key == "subsample_size") {
        p.subsample_size = value.get<int>();
      } else if (key == "gate_scale_exponent") {
        p.gate_scale_exponent = value.get<double>();
      } else if (key == "gate_reject_exponent") {
        p.gate_reject_exponent = value.get<double>();
      } else if (key == "gate_slack_exponent") {
        p.gate_slack_exponent = value.get<double>();
      } else if (key == "nu_noise_exponent") {
        p.nu_noise_exponent = value.get<double>();
      } else if (key == "jl_dim") {
        p.jl_dim = value.get<int>();
      } else if (key == "bin_width_sep_fraction") {
        p.bin_width_sep_fraction = value.get<double>();
      } else if (key == "hist_alpha") {
        p.hist_alpha = value.get<double>();
      } else if (key == "hist_beta") {
        p.hist_beta = value.get<double>();
      } else if (key == "hist_eps_factor") {
        p.hist_eps_factor = value.get<double>();
      } else if (key == "calibrated_final_noise") {
        p.calibrated_final_noise = value.get<bool>();
      } else if (key == "objective_coeff") {
        p.objective_coeff = value.get<double>();
      } else if (key == "zero_noise") {
        p.zero_noise = value.get<bool>();
      } else {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown profile key \"", key, "\""));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("bad profile value: ", e.what()));
  }
  if (absl::Status s = p.Validate(); !s.ok()) return s;
  return p;
}

nlohmann::json ToJson(const ResolvedScales& s) {
  return {{"n", s.n},
          {"k", s.k},
          {"subsample_size", s.subsample_size},
          {"gate_scale", s.gate_scale},
          {"gate_reject", s.gate_reject},
          {"gate_slack", s.gate_slack},
          {"nu_noise_variance", s.nu_noise_variance},
          {"jl_dim", s.jl_dim},
          {"bin_width", s.bin_width},
          {"hist_alpha", s.hist_alpha},
          {"hist_beta", s.hist_beta},
          {"eps_star", s.eps_star},
          {"delta_star", s.delta_star},
          {"release_sensitivity", s.release_sensitivity},
          {"final_noise_sigma", s.final_noise_sigma},
          {"objective_coeff", s.objective_coeff},
          {"zero_noise", s.zero_noise}};
}

absl::StatusOr<ResolvedScales> ResolveScales(
    const PipelineScaleProfile& profile, int n, int k, double delta_sep,
    const PrivacyBudget& budget) {
  if (absl::Status s = profile.Validate(); !s.ok()) return s;
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  if (!(budget.epsilon > 0.0) || !(budget.delta > 0.0)) {
    return absl::InvalidArgumentError("pipeline needs epsilon, delta > 0");
  }
  if (k < 1 || n < k) return absl::InvalidArgumentError("need 1 <= k <= n");
  const double nd = n;
  const double kd = k;
  const double eps = budget.epsilon;
  const double delta = budget.delta;
  ResolvedScales s;
  s.n = n;
  s.k = k;
  s.zero_noise = profile.zero_noise;
  s.subsample_size =
      profile.subsample_size
          ? std::min(n, *profile.subsample_size)
          : std::clamp(static_cast<int>(
                           std::ceil(std::pow(nd, profile.subsample_exponent))),
                       1, n);
  s.gate_scale = std::pow(nd, profile.gate_scale_exponent);
  s.gate_reject = std::pow(nd, profile.gate_reject_exponent);
  s.gate_slack = std::pow(nd, -profile.gate_slack_exponent);
  s.nu_noise_variance = std::pow(nd, -profile.nu_noise_exponent) *
                        std::log(2.0 / delta) / (eps * eps);
  s.jl_dim = profile.jl_dim
                 ? *profile.jl_dim
                 : std::max(1, static_cast<int>(std::ceil(100.0 * std::log(nd))));
  if (profile.bin_width_sep_fraction) {
    if (!(delta_sep > 0.0)) {
      return absl::InvalidArgumentError(
          "bin width relative to delta_sep needs delta_sep > 0");
    }
    s.bin_width = *profile.bin_width_sep_fraction * delta_sep;
  } else {
    s.bin_width = std::pow(kd, -15.0);
  }
  s.hist_alpha = profile.hist_alpha.value_or(std::pow(kd, -10.0));
  s.hist_beta = profile.hist_beta.value_or(std::pow(nd, -10.0));
  const double eps_factor = profile.hist_eps_factor.value_or(
      10.0 * std::pow(kd, 50.0) / std::pow(nd, 0.01));
  s.eps_star = eps * eps_factor;
  s.delta_star = delta / nd;
  if (profile.calibrated_final_noise) {
    s.release_sensitivity = 2.0 * std::sqrt(static_cast<double>(s.jl_dim)) *
                            s.bin_width * (2.0 * kd / s.subsample_size);
    absl::StatusOr<double> sigma = GaussianNoiseScale(
        s.release_sensitivity,
        {.epsilon = s.eps_star / kd, .delta = s.delta_star / kd});
    if (!sigma.ok()) return sigma.status();
    s.final_noise_sigma = *sigma;
  } else {
    s.release_sensitivity = 400.0 * std::pow(kd, -11.0) / std::pow(nd, 0.01);
    s.final_noise_sigma = std::sqrt(32.0 * std::pow(kd, -120.0) *
                                    std::log(2.0 * kd * nd / delta) /
                                    (eps * eps));
  }
  s.objective_coeff =
      profile.objective_coeff.value_or(1e10 * std::pow(kd, 300.0));
  for (double v : {s.gate_scale, s.gate_reject, s.eps_star, s.objective_coeff,
                   s.final_noise_sigma, s.nu_noise_variance}) {
    if (!std::isfinite(v)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "profile \"", profile.name, "\" overflows at n=", n, ", k=", k));
    }
  }
  return s;
}

nlohmann::json ToJson(const MembershipResult& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"box_violation", r.box_violation},
          {"row_sum_violation", r.row_sum_violation},
          {"psd_violation", r.psd_violation},
          {"projection_iterations", r.projection_iterations},
          {"projection_distance_bound", r.projection_distance_bound},
          {"final_objective",
           r.objective_history.empty() ? 0.0 : r.objective_history.back()}};
}

namespace {

double MinEigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()[0];
}

// x lies in A = box ∩ rows. The identity lies in A as well, and blending
// toward it lifts every eigenvalue by t (1 - lambda); this restores PSD
// exactly while staying in A.
Eigen::MatrixXd BlendTowardIdentity(Eigen::MatrixXd x) {
  const double deficit = std::max(0.0, -MinEigenvalue(x));
  if (deficit > 0.0) {
    const double t = deficit / (1.0 + deficit);
    x *= 1.0 - t;
    x.diagonal().array() += t;
  }
  return x;
}

double MaxRowSumExcess(const Eigen::MatrixXd& w, double row_bound) {
  return std::max(0.0, w.rowwise().sum().maxCoeff() - row_bound);
}

double MaxBoxViolation(const Eigen::MatrixXd& w) {
  return std::max({0.0, -w.minCoeff(), w.maxCoeff() - 1.0});
}

// Projection onto box ∩ {row sums <= row_bound}. Its minimizer has the form
// W_jl = clamp(M_jl - (theta_j + theta_l) / 2, 0, 1) with multipliers
// theta >= 0; each coordinate step solves row i's sum for theta_i by
// bisection. `theta` is a warm start and is updated in place.
Eigen::MatrixXd ProjectBoxRows(const Eigen::MatrixXd& m, double row_bound,
                               double tol, int max_sweeps,
                               Eigen::VectorXd& theta, bool& converged) {
  const Eigen::Index n = m.rows();
  auto entry = [&](Eigen::Index i, Eigen::Index l, double t) {
    const double shift = i == l ? t : 0.5 * (t + theta[l]);
    return std::clamp(m(i, l) - shift, 0.0, 1.0);
  };
  auto row_sum = [&](Eigen::Index i, double t) {
    double sum = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) sum += entry(i, l, t);
    return sum;
  };
  auto assemble = [&] {
    Eigen::MatrixXd w(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w(i, i) = std::clamp(m(i, i) - theta[i], 0.0, 1.0);
      for (Eigen::Index l = i + 1; l < n; ++l) {
        const double v =
            std::clamp(m(i, l) - 0.5 * (theta[i] + theta[l]), 0.0, 1.0);
        w(i, l) = v;
        w(l, i) = v;
      }
    }
    return w;
  };
  converged = false;
  Eigen::MatrixXd w;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (row_sum(i, 0.0) <= row_bound) {
        theta[i] = 0.0;
        continue;
      }
      double lo = 0.0;
      double hi = m(i, i);
      for (Eigen::Index l = 0; l < n; ++l) {
        hi = std::max(hi, 2.0 * m(i, l) - theta[l]);
      }
      hi = std::max(hi, 0.0) + 1.0;
      while (hi - lo > 1e-15 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (row_sum(i, mid) > row_bound ? lo : hi) = mid;
      }
      theta[i] = hi;
    }
    w = assemble();
    const Eigen::VectorXd sums = w.rowwise().sum();
    double kkt = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      kkt = std::max(kkt, sums[i] - row_bound);
      if (theta[i] > 0.0) kkt = std::max(kkt, row_bound - sums[i]);
    }
    if (kkt <= tol) {
      converged = true;
      break;
    }
  }
  return w;
}

}  // namespace

absl::StatusOr<MembershipProjection> ProjectMembershipSet(
    const Eigen::MatrixXd& m, double row_bound, double tol, int max_iters) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) {
    return absl::InvalidArgumentError("need a nonempty square matrix");
  }
  if (!m.allFinite()) return absl::InvalidArgumentError("non-finite input");
  if (!(tol > 0.0) || max_iters < 1) {
    return absl::InvalidArgumentError("need tol > 0 and max_iters >= 1");
  }
  const Eigen::MatrixXd start = 0.5 * (m + m.transpose());
  constexpr int kMaxSweeps = 1000;
  const double inner_tol = 0.1 * tol;

  MembershipProjection result;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  bool inner_converged = false;
  // If the box ∩ row-sum projection is already PSD it is also the
  // projection onto the full set.
  Eigen::MatrixXd w =
      ProjectBoxRows(start, row_bound, inner_tol, kMaxSweeps, theta,
                     inner_converged);
  result.iterations = 1;
  if (inner_converged && MinEigenvalue(w) >= -tol) {
    result.distance_bound = 0.0;
    result.w = BlendTowardIdentity(std::move(w));
    result.converged = true;
    return result;
  }

  // Over-relaxed ADMM on X in A = box ∩ rows, Z PSD, X = Z, with scaled
  // multiplier U; rho is rebalanced when the residuals drift apart.
  constexpr double kRelaxation = 1.6;
  const double primal_scale = std::max(1.0, start.norm());
  double rho = std::max(1.0, static_cast<double>(n) / 16.0);
  Eigen::MatrixXd z = ProjectPsd(SymmetricMatrix::Symmetrized(w)).dense();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd x = std::move(w);
  for (int iter = 1; iter <= max_iters; ++iter) {
    x = ProjectBoxRows((start + rho * (z - u)) / (1.0 + rho), row_bound,
                       inner_tol, kMaxSweeps, theta, inner_converged);
    const Eigen::MatrixXd z_prev = z;
    const Eigen::MatrixXd relaxed =
        kRelaxation * x + (1.0 - kRelaxation) * z_prev;
    z = ProjectPsd(SymmetricMatrix::Symmetrized(relaxed + u)).dense();
    u += relaxed - z;
    const double primal_residual = (x - z).norm();
    const double dual_residual = rho * (z - z_prev).norm();
    result.iterations = iter + 1;
    if (inner_converged &&
        primal_residual <= tol * std::max(1.0, x.norm()) &&
        dual_residual <= tol * primal_scale) {
      result.converged = true;
      break;
    }
    if (primal_residual > 100.0 * dual_residual) {
      rho *= 2.0;
      u /= 2.0;
    } else if (dual_residual > 100.0 * primal_residual) {
      rho /= 2.0;
      u *= 2.0;
    }
  }
  result.w = BlendTowardIdentity(std::move(x));

  // With Y = rho U and Y_- its negative semidefinite part,
  //   g(Y_-) = min_{X in A} 1/2 ||X - M||^2 + <Y_-, X>
  // is a dual value, so ||W - W*||^2 <= ||W - M||^2 - 2 g(Y_-).
  const Eigen::MatrixXd y = rho * u;
  const Eigen::MatrixXd y_neg =
      y - ProjectPsd(SymmetricMatrix::Symmetrized(y)).dense();
  bool dual_converged = false;
  const Eigen::MatrixXd x_dual = ProjectBoxRows(
      start - y_neg, row_bound, inner_tol, kMaxSweeps, theta, dual_converged);
  const double dual_value = 0.5 * (x_dual - start).squaredNorm() +
                            (y_neg.array() * x_dual.array()).sum();
  result.distance_bound = std::sqrt(
      std::max(0.0, (result.w - start).squaredNorm() - 2.0 * dual_value));
  return result;
}

Eigen::MatrixXd SimilarityMatrix(const Eigen::MatrixXd& points,
                                 double sigma_s) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd s(n, n);
  const double scale = 1.0 / (2.0 * sigma_s * sigma_s);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v =
          std::exp(-(points.row(i) - points.row(j)).squaredNorm() * scale);
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

absl::StatusOr<MembershipResult> ComputeMembership(
    const MixtureDataset& ds, int k, double objective_coeff,
    const MembershipOptions& options) {
  if (absl::Status s = ds.Validate(); !s.ok()) return s;
  const int n = ds.n();
  if (k < 1 || n < k) return absl::InvalidArgumentError("need 1 <= k <= n");
  if (!(options.step > 0.0 && options.step <= 0.5)) {
    return absl::InvalidArgumentError("step must lie in (0, 1/2]");
  }
  if (!(options.similarity_weight >= 0.0)) {
    return absl::InvalidArgumentError("similarity_weight must be >= 0");
  }
  // f(W) = ||W||^2 - <L, W> with linear term L = c_J J + lambda S.
  Eigen::MatrixXd linear = Eigen::MatrixXd::Constant(n, n, objective_coeff);
  if (options.similarity_weight > 0.0) {
    const double sigma_s =
        options.similarity_scale.value_or(0.5 * ds.delta_sep);
    if (!(sigma_s > 0.0)) {
      return absl::InvalidArgumentError("similarity scale must be positive");
    }
    linear += options.similarity_weight * SimilarityMatrix(ds.points, sigma_s);
  }
  auto objective = [&](const Eigen::MatrixXd& w) {
    return w.squaredNorm() - (linear.array() * w.array()).sum();
  };
  const double row_bound = static_cast<double>(n) / k;

  MembershipResult result;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd last_target;
  MembershipProjection last_projection;
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    const Eigen::MatrixXd target = w - options.step * (2.0 * w - linear);
    // The projection is deterministic; skip it when the target repeats.
    if (last_target.size() == 0 ||
        (target - last_target).norm() > 1e-12 * std::max(1.0, target.norm())) {
      absl::StatusOr<MembershipProjection> projected =
          ProjectMembershipSet(target, row_bound, options.projection_tol,
                               options.projection_max_iters);
      if (!projected.ok()) return projected.status();
      last_projection = *std::move(projected);
      last_target = target;
    }
    const double change = (last_projection.w - w).norm();
    w = last_projection.w;
    result.objective_history.push_back(objective(w));
    result.iterations = iter;
    if (change <= options.tol) {
      result.converged = last_projection.converged;
      break;
    }
  }
  result.projection_iterations = last_projection.iterations;
  result.projection_distance_bound = last_projection.distance_bound;
  result.box_violation = MaxBoxViolation(w);
  result.row_sum_violation = MaxRowSumExcess(w, row_bound);
  result.psd_violation = std::max(0.0, -MinEigenvalue(w));
  result.w = std::move(w);
  return result;
}

double SoftThreshold(double x) {
  x = std::clamp(x, 0.0, 1.0);
  if (x <= 0.8) return 0.0;
  if (x >= 0.9) return 1.0;
  return (x - 0.8) / (0.9 - 0.8);
}

Eigen::MatrixXd SoftThreshold(const Eigen::MatrixXd& w) {
  return w.unaryExpr([](double x) { return SoftThreshold(x); });
}

nlohmann::json ToJson(const GateResult& g) {
  return {{"accepted", g.accepted},
          {"tau", g.tau},
          {"phi_l1", g.phi_l1},
          {"threshold", g.threshold},
          {"tau_out_of_range", g.tau_out_of_range}};
}

absl::StatusOr<GateResult> NormGate(const Eigen::MatrixXd& w, int k,
                                    const PrivacyBudget& budget,
                                    const ResolvedScales& scales, Rng& rng) {
  if (w.rows() != w.cols()) return absl::InvalidArgumentError("W not square");
  if (k < 1) return absl::InvalidArgumentError("need k >= 1");
  absl::StatusOr<TruncatedLaplaceParams> params =
      TruncatedLaplaceMechanismParams(scales.gate_scale, budget);
  if (!params.ok()) return params.status();
  absl::StatusOr<double> tau = SampleTruncatedLaplace(*params, rng);
  if (!tau.ok()) return tau.status();
  const double n = static_cast<double>(w.rows());
  GateResult gate;
  gate.tau = *tau;
  gate.phi_l1 = SoftThreshold(w).cwiseAbs().sum();
  gate.threshold =
      (n * n / k) * (1.0 - scales.gate_slack - std::pow(k, -100.0)) + gate.tau;
  gate.tau_out_of_range = std::abs(gate.tau) >= scales.gate_reject;
  gate.accepted = !gate.tau_out_of_range && gate.phi_l1 > gate.threshold;
  return gate;
}

absl::StatusOr<Eigen::MatrixXd> LocalMeans(const Eigen::MatrixXd& w,
                                           const Eigen::MatrixXd& points) {
  if (w.rows() != w.cols() || w.rows() != points.rows()) {
    return absl::InvalidArgumentError(
        absl::StrCat("W is ", w.rows(), "x", w.cols(), " but there are ",
                     points.rows(), " points"));
  }
  const Eigen::MatrixXd phi = SoftThreshold(w);
  Eigen::MatrixXd nus = phi * points;
  for (Eigen::Index i = 0; i < nus.rows(); ++i) {
    const double mass = phi.row(i).sum();
    if (mass == 0.0) {
      nus.row(i).setZero();
    } else {
      nus.row(i) /= mass;
    }
  }
  return nus;
}

absl::StatusOr<Subsample> PrivatizeSubsample(const Eigen::MatrixXd& nus,
                                             const ResolvedScales& scales,
                                             Rng& rng) {
  const int n = static_cast<int>(nus.rows());
  const int size = scales.subsample_size;
  if (size < 1 || size > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsample size ", size, " outside [1, ", n, "]"));
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < size; ++i) {
    const int j = i + static_cast<int>(rng.UniformIndex(n - i));
    std::swap(order[i], order[j]);
  }
  Subsample out;
  out.indices.assign(order.begin(), order.begin() + size);
  std::sort(out.indices.begin(), out.indices.end());
  out.nubars.resize(size, nus.cols());
  const double sigma = scales.zero_noise ? 0.0 : std::sqrt(scales.nu_noise_variance);
  for (int r = 0; r < size; ++r) {
    out.nubars.row(r) = nus.row(out.indices[r]);
    if (sigma > 0.0) {
      for (Eigen::Index c = 0; c < nus.cols(); ++c) {
        out.nubars(r, c) += sigma * rng.Normal();
      }
    }
  }
  return out;
}

Eigen::MatrixXd SampleJlMatrix(int d_star, int d, Rng& rng) {
  Eigen::MatrixXd phi(d_star, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_star));
  for (Eigen::Index r = 0; r < phi.rows(); ++r) {
    for (Eigen::Index c = 0; c < phi.cols(); ++c) {
      phi(r, c) = scale * rng.Normal();
    }
  }
  return phi;
}

absl::StatusOr<ReleaseResult> ClusterAndRelease(const Eigen::MatrixXd& nubars,
                                                int k,
                                                const ResolvedScales& scales,
                                                Rng& rng) {
  const int m = static_cast<int>(nubars.rows());
  const int d = static_cast<int>(nubars.cols());
  if (k < 1 || m < k) {
    return absl::InvalidArgumentError(
        absl::StrCat("need at least k=", k, " vectors, got ", m));
  }
  ReleaseResult out;
  const Eigen::MatrixXd phi = SampleJlMatrix(scales.jl_dim, d, rng);
  out.offset = rng.Uniform() * scales.bin_width;
  std::vector<Eigen::VectorXd> projected(m);
  std::vector<BinIndex> point_bins(m);
  for (int i = 0; i < m; ++i) {
    projected[i] = phi * nubars.row(i).transpose();
    point_bins[i] = BinOf(projected[i], out.offset, scales.bin_width);
  }
  HistogramConfig cfg{
      .offset = out.offset,
      .bin_width = scales.bin_width,
      .alpha = scales.hist_alpha,
      .beta = scales.hist_beta,
      .budget = {.epsilon = scales.eps_star, .delta = scales.delta_star}};
  absl::StatusOr<Histogram> histogram = HistogramLearner(projected, cfg, rng);
  if (!histogram.ok()) return histogram.status();

  std::vector<std::pair<BinIndex, double>> ranked(histogram->begin(),
                                                  histogram->end());
  if (static_cast<int>(ranked.size()) < k) {
    out.reason = absl::StrCat("histogram has ", ranked.size(),
                              " nonempty bins, fewer than k=", k);
    return out;
  }
  for (size_t i = ranked.size(); i > 1; --i) {
    std::swap(ranked[i - 1], ranked[rng.UniformIndex(i)]);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(k);

  const double min_count = static_cast<double>(m) / (2.0 * k);
  std::vector<std::vector<int>> members(k);
  for (int l = 0; l < k; ++l) {
    out.bins.push_back(ranked[l].first);
    out.bin_frequencies.push_back(ranked[l].second);
    for (int i = 0; i < m; ++i) {
      if (point_bins[i] == ranked[l].first) members[l].push_back(i);
    }
    out.bin_counts.push_back(static_cast<int>(members[l].size()));
  }
  for (int l = 0; l < k; ++l) {
    if (out.bin_counts[l] < min_count) {
      out.reason = absl::StrCat("bin ", l, " holds ", out.bin_counts[l],
                                " vectors, fewer than ", min_count);
      return out;
    }
  }
  out.centers.resize(k, d);
  const double sigma = scales.zero_noise ? 0.0 : scales.final_noise_sigma;
  for (int l = 0; l < k; ++l) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
    for (int i : members[l]) sum += nubars.row(i);
    out.centers.row(l) = sum / static_cast<double>(members[l].size());
    if (sigma > 0.0) {
      for (int c = 0; c < d; ++c) out.centers(l, c) += sigma * rng.Normal();
    }
  }
  out.accepted = true;
  return out;
}

nlohmann::json ToJson(const BudgetReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (const BudgetStage& s : report.stages) {
    stages.push_back(
        {{"stage", s.stage}, {"budget", ToJson(s.budget)}, {"count", s.count}});
  }
  nlohmann::json j = {{"stages", stages}, {"composed", ToJson(report.composed)}};
  if (report.paper_profile) j["paper_total"] = ToJson(report.paper_total);
  return j;
}

BudgetReport PipelineBudgetReport(const PrivacyBudget& budget, int k,
                                  const ResolvedScales& scales,
                                  bool paper_profile) {
  BudgetReport report;
  report.paper_profile = paper_profile;
  report.stages = {
      {"gate", budget, 1},
      {"gaussian", budget, 1},
      {"histogram", {.epsilon = scales.eps_star, .delta = scales.delta_star}, 1},
      {"release",
       {.epsilon = scales.eps_star / k, .delta = scales.delta_star / k},
       k}};
  std::vector<PrivacyBudget> flat;
  for (const BudgetStage& s : report.stages) {
    for (int c = 0; c < s.count; ++c) flat.push_back(s.budget);
  }
  report.composed = Compose(flat);
  // The release stages act on inputs already masked by the Gaussian step; the
  // privatizing-input argument bounds that tail by (3 eps, 3 delta), and the
  // low-probability failure events add (eps, delta).
  const PrivacyBudget tail{.epsilon = 3.0 * budget.epsilon,
                           .delta = 3.0 * budget.delta};
  const PrivacyBudget paper_stages[] = {budget, tail, budget};
  report.paper_total = Compose(paper_stages);
  return report;
}

absl::Status GmmPipelineConfig::Validate() const {
  if (k < 1) return absl::InvalidArgumentError("need k >= 1");
  if (absl::Status s = budget.Validate(); !s.ok()) return s;
  return profile.Validate();
}

absl::StatusOr<GmmPipelineResult> RunGmmPipeline(const MixtureDataset& ds,
                                                 const GmmPipelineConfig& cfg,
                                                 Rng& rng) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  if (absl::Status s = ds.Validate(); !s.ok()) return s;
  absl::StatusOr<ResolvedScales> scales =
      ResolveScales(cfg.profile, ds.n(), cfg.k, ds.delta_sep, cfg.budget);
  if (!scales.ok()) return scales.status();

  GmmPipelineResult result;
  result.scales = *scales;
  result.uses_data_similarity = cfg.membership.similarity_weight > 0.0;
  result.budget_report = PipelineBudgetReport(cfg.budget, cfg.k, *scales,
                                              cfg.profile.name == "paper");
  absl::StatusOr<MembershipResult> membership =
      ComputeMembership(ds, cfg.k, scales->objective_coeff, cfg.membership);
  if (!membership.ok()) return membership.status();
  if (!membership->converged) {
    return absl::AbortedError(absl::StrCat(
        "membership solver did not converge after ", membership->iterations,
        " iterations"));
  }
  result.membership = *std::move(membership);

  absl::StatusOr<GateResult> gate =
      NormGate(result.membership.w, cfg.k, cfg.budget, *scales, rng);
  if (!gate.ok()) return gate.status();
  result.gate = *gate;
  if (!gate->accepted) {
    result.reject_stage = "gate";
    result.reason = gate->tau_out_of_range
                        ? "|tau| exceeds the rejection bound"
                        : "||phi(W)||_1 is below the gate threshold";
    return result;
  }

  absl::StatusOr<Eigen::MatrixXd> nus =
      LocalMeans(result.membership.w, ds.points);
  if (!nus.ok()) return nus.status();
  absl::StatusOr<Subsample> sub = PrivatizeSubsample(*nus, *scales, rng);
  if (!sub.ok()) return sub.status();
  result.subsample = sub->indices;
  absl::StatusOr<ReleaseResult> release =
      ClusterAndRelease(sub->nubars, cfg.k, *scales, rng);
  if (!release.ok()) return release.status();
  if (!release->accepted) {
    result.reject_stage = "release";
    result.reason = release->reason;
    return result;
  }
  result.accepted = true;
  result.centers = std::move(release->centers);
  return result;
}

nlohmann::json ToJson(const GmmPipelineResult& r,
                      const PipelineScaleProfile& profile) {
  nlohmann::json centers = nlohmann::json::array();
  for (Eigen::Index l = 0; l < r.centers.rows(); ++l) {
    std::vector<double> row(r.centers.cols());
    for (Eigen::Index c = 0; c < r.centers.cols(); ++c) row[c] = r.centers(l, c);
    centers.push_back(row);
  }
  nlohmann::json j = {{"status", r.accepted ? "accept" : "reject"},
                      {"centers", centers},
                      {"budget_report", ToJson(r.budget_report)},
                      {"profile", ToJson(profile)},
                      {"diagnostics",
                       {{"scales", ToJson(r.scales)},
                        {"membership", ToJson(r.membership)},
                        {"gate", ToJson(r.gate)},
                        {"uses_data_similarity", r.uses_data_similarity}}}};
  if (!r.accepted) {
    j["reject_stage"] = r.reject_stage;
    j["reason"] = r.reason;
  }
  if (r.uses_data_similarity) {
    j["privacy_note"] =
        "similarity term reads the data; the budget report does not cover it";
  }
  return j;
}

absl::StatusOr<double> MatchedCenterError(const Eigen::MatrixXd& centers,
                                          const Eigen::MatrixXd& means) {
  const int k = static_cast<int>(means.rows());
  if (centers.rows() != means.rows() || centers.cols() != means.cols()) {
    return absl::InvalidArgumentError("centers and means differ in shape");
  }
  if (k < 1 || k > 9) return absl::InvalidArgumentError("need 1 <= k <= 9");
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int l = 0; l < k; ++l) {
      worst = std::max(worst, (centers.row(l) - means.row(perm[l])).norm());
    }
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace privrec
