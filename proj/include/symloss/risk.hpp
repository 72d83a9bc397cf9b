// Copyright 2026 The symloss Authors
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

// Exact L-risk over finite distributions, the noise-tolerance checks built on
// it, and the classification-calibration grid search.
//
// Every expectation here is a finite sum, so the risk identities that hold for
// symmetric losses under label noise can be checked to machine precision, and
// "global minimizer" is realized by exhaustive search over a finite family.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/losses.hpp"
#include "symloss/noise.hpp"
#include "symloss/text.hpp"

namespace symloss {

/// Maps a feature point to k logits.
using Classifier = std::function<Vector(std::span<const double>)>;

/// logits = W^T x + b, with W stored d x k.
struct LinearClassifier {
  Matrix weights;
  Vector bias;

  Vector operator()(std::span<const double> x) const {
    if (x.size() != weights.rows()) {
      throw Error(ErrorKind::kDimensionMismatch, "linear classifier input dimension");
    }
    Vector z = bias;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto w = weights.row(i);
      for (std::size_t c = 0; c < z.size(); ++c) z[c] += x[i] * w[c];
    }
    return z;
  }
};

/// Linear classifier with weights and biases drawn N(0, scale^2).
inline LinearClassifier random_linear(std::size_t d, std::size_t k, double scale, Rng& rng) {
  LinearClassifier f{Matrix(d, k), Vector(k)};
  for (double& w : f.weights.flat()) w = scale * rng.normal();
  for (double& b : f.bias) b = scale * rng.normal();
  return f;
}

/// Nearest-class-mean rule written as a linear classifier,
/// logit_c = scale * (2 mu_c . x - |mu_c|^2).
///
/// The scale is the smallest that pushes every training point's runner-up
/// logit at least `logit_gap` below the winner, so softmax saturates to an
/// exact one-hot vector in double precision (zero MAE, zero 0-1 loss) on
/// correctly classified points.
inline LinearClassifier saturated_nearest_mean(const LabeledDataset& data, const Matrix& means,
                                               double logit_gap = 800.0) {
  if (means.rows() != data.k || means.cols() != data.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "means must be k x d");
  }
  LinearClassifier f{Matrix(data.dim(), data.k), Vector(data.k)};
  for (std::size_t c = 0; c < data.k; ++c) {
    double sq = 0.0;
    for (std::size_t i = 0; i < data.dim(); ++i) {
      f.weights(i, c) = 2.0 * means(c, i);
      sq += means(c, i) * means(c, i);
    }
    f.bias[c] = -sq;
  }
  double min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Vector z = f(data.features.row(n));
    const std::size_t y = data.labels[n];
    for (std::size_t c = 0; c < data.k; ++c) {
      if (c != y) min_margin = std::min(min_margin, z[y] - z[c]);
    }
  }
  if (min_margin > 0.0 && std::isfinite(min_margin)) {
    const double scale = logit_gap / min_margin;
    for (double& w : f.weights.flat()) w *= scale;
    for (double& b : f.bias) b *= scale;
  }
  return f;
}

/// Same, with the empirical class means.
inline LinearClassifier saturated_nearest_mean(const LabeledDataset& data, double logit_gap = 800.0) {
  return saturated_nearest_mean(data, class_means(data), logit_gap);
}

/// Finite, ordered function class over which minimizers are taken.
struct ClassifierFamily {
  std::size_t d = 0;
  std::size_t k = 0;
  std::vector<Classifier> members;

  std::size_t size() const noexcept { return members.size(); }

  void validate() const {
    if (members.empty()) throw Error(ErrorKind::kInvalidInput, "classifier family is empty");
    if (k < 2) throw Error(ErrorKind::kInvalidInput, "classifier family needs k >= 2");
  }
};

/// Loss of one classifier at every (support point, label) pair, M x k.
inline Matrix loss_table(LossKind kind, const Classifier& f, const FiniteDistribution& dist) {
  Matrix table(dist.size(), dist.k);
  std::vector<double> u(dist.k);
  for (std::size_t m = 0; m < dist.size(); ++m) {
    const Vector z = f(dist.support.row(m));
    if (z.size() != dist.k) {
      throw Error(ErrorKind::kDimensionMismatch, "classifier output size differs from k");
    }
    if (!all_finite<double>(z)) throw Error(ErrorKind::kNonFinite, "classifier logits");
    softmax_into<double>(z, u);
    for (std::size_t j = 0; j < dist.k; ++j) {
      table(m, j) = loss_value_unchecked<double>(kind, u, j);
    }
  }
  return table;
}

/// sum_m mass_m sum_j p(j | x_m) table(m, j).
inline double expected_loss(const Matrix& table, const FiniteDistribution& dist) {
  double risk = 0.0;
  for (std::size_t m = 0; m < dist.size(); ++m) {
    double point = 0.0;
    for (std::size_t j = 0; j < dist.k; ++j) point += dist.conditionals(m, j) * table(m, j);
    risk += dist.mass[m] * point;
  }
  return risk;
}

/// R_L(f) = E_D[L(f(x), y)].
inline double exact_risk(LossKind kind, const Classifier& f, const FiniteDistribution& dist) {
  dist.validate();
  return expected_loss(loss_table(kind, f, dist), dist);
}

/// Sample average of the loss over a labeled dataset.
inline double empirical_risk(LossKind kind, const Classifier& f, const LabeledDataset& data) {
  data.validate();
  std::vector<double> u(data.k);
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const Vector z = f(data.features.row(n));
    if (z.size() != data.k) {
      throw Error(ErrorKind::kDimensionMismatch, "classifier output size differs from k");
    }
    softmax_into<double>(z, u);
    total += loss_value_unchecked<double>(kind, u, data.labels[n]);
  }
  return total / static_cast<double>(data.size());
}

/// R^eta_L(f): the risk under the corrupted distribution D_eta.
inline double exact_noisy_risk(LossKind kind, const Classifier& f, const FiniteDistribution& dist,
                               const NoiseModel& model) {
  return exact_risk(kind, f, corrupt_distribution(dist, model));
}

/// Risk under symmetric noise implied by the symmetry constant C:
/// C eta / (k - 1) + (1 - eta k / (k - 1)) R.
inline double affine_predicted_risk(double clean_risk, double eta, std::size_t k, double c) {
  const double kd = static_cast<double>(k);
  if (k < 2 || !(eta >= 0.0 && eta < (kd - 1.0) / kd)) {
    throw Error(ErrorKind::kDomain, "eta must lie in [0, (k-1)/k)");
  }
  return c * eta / (kd - 1.0) + (1.0 - eta * kd / (kd - 1.0)) * clean_risk;
}

/// rho / (1 - k eta_max / (k - 1)).
inline double theorem2_bound(double rho, double eta_max, std::size_t k) {
  const double kd = static_cast<double>(k);
  if (k < 2 || !(eta_max >= 0.0 && eta_max < (kd - 1.0) / kd)) {
    throw Error(ErrorKind::kDomain, "eta_max must lie in [0, (k-1)/k)");
  }
  if (!(rho >= 0.0)) throw Error(ErrorKind::kDomain, "rho must be >= 0");
  return rho / (1.0 - kd * eta_max / (kd - 1.0));
}

/// Default tolerance under which two family risks count as tied.
inline constexpr double kTieTolerance = 1e-12;

/// Lowest index whose value is within tol of the minimum.
inline std::size_t argmin_with_ties(std::span<const double> values, double tol = kTieTolerance) {
  if (values.empty()) throw Error(ErrorKind::kInvalidInput, "argmin of empty vector");
  const double best = *std::min_element(values.begin(), values.end());
  const double slack = tol * std::max(1.0, std::abs(best));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] <= best + slack) return i;
  }
  return 0;
}

inline Vector family_risks(LossKind kind, const ClassifierFamily& family,
                           const FiniteDistribution& dist) {
  family.validate();
  dist.validate();
  if (family.k != dist.k || family.d != dist.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "family and distribution disagree on (d, k)");
  }
  Vector out(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    out[i] = expected_loss(loss_table(kind, family.members[i], dist), dist);
  }
  return out;
}

/// Exhaustive minimizer of the (noisy, when a model is given) risk over the family.
inline std::size_t best_in_family(LossKind kind, const ClassifierFamily& family,
                                  const FiniteDistribution& dist,
                                  const std::optional<NoiseModel>& model = std::nullopt) {
  const Vector risks = model ? family_risks(kind, family, corrupt_distribution(dist, *model))
                             : family_risks(kind, family, dist);
  return argmin_with_ties(risks);
}

enum class CheckStatus { kChecked, kNotApplicable, kSkipped };

inline std::string_view name(CheckStatus s) {
  switch (s) {
    case CheckStatus::kChecked: return "checked";
    case CheckStatus::kNotApplicable: return "not-applicable";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "?";
}

/// Outcome of checking one noise-tolerance statement on one instance.
///
/// max_dev is the largest violation measured: |noisy - predicted| for the
/// affine identity, the clean-risk excess of the noisy minimizer over rho for
/// the zero-risk statements, and the excess over the bound otherwise.
struct TheoremReport {
  int theorem = 0;
  LossKind loss = LossKind::kMae;
  CheckStatus status = CheckStatus::kChecked;
  std::string reason;
  bool pass = false;
  double max_dev = std::numeric_limits<double>::quiet_NaN();

  std::string noise;
  std::size_t k = 0;
  std::size_t family_size = 0;
  std::size_t support_size = 0;

  Vector clean_risks;
  Vector noisy_risks;
  Vector predicted_risks;  // affine identity, theorem 1 only
  double rho = std::numeric_limits<double>::quiet_NaN();
  double noisy_minimizer_clean_risk = std::numeric_limits<double>::quiet_NaN();
  double eta_max = std::numeric_limits<double>::quiet_NaN();
  double bound = std::numeric_limits<double>::quiet_NaN();
  std::size_t argmin_clean = 0;
  std::size_t argmin_noisy = 0;
  bool argmin_preserved = false;

  /// `theorem=<n> loss=<kind> pass=<bool> max_dev=<real> ...` on one line.
  std::string to_line() const {
    using text::format_short;
    std::string line = "theorem=" + std::to_string(theorem) + " loss=" + std::string(name(loss));
    line += " pass=";
    line += status == CheckStatus::kChecked ? (pass ? "true" : "false") : "na";
    line += " max_dev=" + format_short(max_dev, 3);
    line += " status=" + std::string(name(status));
    if (!reason.empty()) line += " reason=" + reason;
    if (status != CheckStatus::kChecked) return line;
    line += " k=" + std::to_string(k) + " family=" + std::to_string(family_size) +
            " support=" + std::to_string(support_size) + " noise=" + noise;
    line += " rho=" + format_short(rho, 10) +
            " noisy_argmin_clean_risk=" + format_short(noisy_minimizer_clean_risk, 10);
    if (std::isfinite(bound)) line += " bound=" + format_short(bound, 10);
    if (std::isfinite(eta_max)) line += " eta_max=" + format_short(eta_max, 6);
    line += " argmin_clean=" + std::to_string(argmin_clean) +
            " argmin_noisy=" + std::to_string(argmin_noisy) +
            " argmin_preserved=" + (argmin_preserved ? std::string("true") : std::string("false"));
    return line;
  }
};

/// Tolerance for exact risk identities.
inline constexpr double kIdentityTolerance = 1e-10;

namespace detail {

inline TheoremReport not_applicable(int theorem, LossKind kind, CheckStatus status,
                                    std::string reason) {
  TheoremReport r;
  r.theorem = theorem;
  r.loss = kind;
  r.status = status;
  r.reason = std::move(reason);
  return r;
}

inline bool theorem3_loss_condition(LossKind kind) {
  // 0 <= L(u, i) <= C / (k - 1): MAE is at most 2 = (2k - 2)/(k - 1), ZeroOne at most 1.
  return kind == LossKind::kMae || kind == LossKind::kZeroOne;
}

}  // namespace detail

/// Checks one of the three noise-tolerance statements on one instance.
///
///  1. Symmetric noise, symmetric loss: R^eta(f) follows the affine identity for
///     every member and the noisy minimizer is a clean minimizer.
///  2. Simple non-uniform noise, symmetric loss: with rho = min R(f) = 0 the noisy
///     minimizer is a clean minimizer; otherwise R(f*_eta) <= rho / (1 - k eta_max/(k-1)).
///  3. Diagonally dominant class-conditional noise, symmetric loss bounded by
///     C/(k-1), rho = 0: the noisy minimizer is a clean minimizer.
///
/// Losses outside a statement's hypotheses come back not-applicable; noise or
/// premise violations come back skipped. Neither counts as a failure.
inline TheoremReport verify_theorem(int theorem, LossKind kind, const ClassifierFamily& family,
                                    const FiniteDistribution& dist, const NoiseModel& model) {
  if (theorem < 1 || theorem > 3) {
    throw Error(ErrorKind::kInvalidInput, "theorem must be 1, 2 or 3");
  }
  const std::size_t k = dist.k;
  const double kd = static_cast<double>(k);
  const auto c = symmetry_constant(kind, k).value;
  if (!c) return detail::not_applicable(theorem, kind, CheckStatus::kNotApplicable, "loss-not-symmetric");

  double eta_max = 0.0;
  switch (theorem) {
    case 1: {
      const auto* s = std::get_if<SymmetricNoise>(&model);
      if (!s) return detail::not_applicable(1, kind, CheckStatus::kSkipped, "needs-symmetric-noise");
      if (!(s->eta < (kd - 1.0) / kd)) {
        return detail::not_applicable(1, kind, CheckStatus::kSkipped, "eta-not-below-(k-1)/k");
      }
      eta_max = s->eta;
      break;
    }
    case 2: {
      const auto* u = std::get_if<SimpleNonUniformNoise>(&model);
      if (!u) return detail::not_applicable(2, kind, CheckStatus::kSkipped, "needs-simple-non-uniform-noise");
      validate(model, k);
      for (std::size_t m = 0; m < dist.size(); ++m) {
        eta_max = std::max(eta_max, u->rate(dist.support.row(m)));
      }
      break;
    }
    case 3: {
      if (!detail::theorem3_loss_condition(kind)) {
        return detail::not_applicable(3, kind, CheckStatus::kNotApplicable, "loss-not-bounded-by-C/(k-1)");
      }
      if (!is_class_dependent(model)) {
        return detail::not_applicable(3, kind, CheckStatus::kSkipped, "needs-class-conditional-noise");
      }
      const NoiseMatrix t = transition_matrix(model, k);
      if (!t.diagonal_dominant()) {
        return detail::not_applicable(3, kind, CheckStatus::kSkipped, "noise-matrix-not-diagonal-dominant");
      }
      for (std::size_t i = 0; i < k; ++i) eta_max = std::max(eta_max, t.row_noise(i));
      break;
    }
  }

  TheoremReport r;
  r.theorem = theorem;
  r.loss = kind;
  r.noise = describe(model);
  r.k = k;
  r.family_size = family.size();
  r.support_size = dist.size();
  r.eta_max = eta_max;

  const FiniteDistribution noisy = corrupt_distribution(dist, model);
  r.clean_risks.resize(family.size());
  r.noisy_risks.resize(family.size());
  family.validate();
  if (family.k != k || family.d != dist.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "family and distribution disagree on (d, k)");
  }
  for (std::size_t i = 0; i < family.size(); ++i) {
    const Matrix table = loss_table(kind, family.members[i], dist);
    r.clean_risks[i] = expected_loss(table, dist);
    r.noisy_risks[i] = expected_loss(table, noisy);
  }
  r.argmin_clean = argmin_with_ties(r.clean_risks);
  r.argmin_noisy = argmin_with_ties(r.noisy_risks);
  r.rho = r.clean_risks[r.argmin_clean];
  r.noisy_minimizer_clean_risk = r.clean_risks[r.argmin_noisy];
  r.argmin_preserved = r.noisy_minimizer_clean_risk <= r.rho + kIdentityTolerance;

  switch (theorem) {
    case 1: {
      const double eta = std::get<SymmetricNoise>(model).eta;
      r.predicted_risks.resize(family.size());
      double dev = 0.0;
      for (std::size_t i = 0; i < family.size(); ++i) {
        r.predicted_risks[i] = affine_predicted_risk(r.clean_risks[i], eta, k, *c);
        dev = std::max(dev, std::abs(r.noisy_risks[i] - r.predicted_risks[i]));
      }
      r.max_dev = dev;
      r.pass = dev < kIdentityTolerance && r.argmin_preserved;
      break;
    }
    case 2: {
      if (r.rho <= kIdentityTolerance) {
        r.max_dev = std::max(0.0, r.noisy_minimizer_clean_risk - r.rho);
        r.pass = r.argmin_preserved;
      } else {
        r.bound = theorem2_bound(r.rho, eta_max, k);
        r.max_dev = std::max(0.0, r.noisy_minimizer_clean_risk - r.bound);
        r.pass = r.noisy_minimizer_clean_risk <= r.bound + kIdentityTolerance;
      }
      break;
    }
    case 3: {
      if (r.rho > kIdentityTolerance) {
        r.status = CheckStatus::kSkipped;
        r.reason = "premise-min-clean-risk-not-zero";
        r.pass = false;
        return r;
      }
      r.max_dev = std::max(0.0, r.noisy_minimizer_clean_risk - r.rho);
      r.pass = r.argmin_preserved;
      break;
    }
  }
  return r;
}

/// Grid search over the probability simplex for the minimizer of the
/// conditional risk of a calibrated loss.
///
/// The conditional risk is measured as the distance from the class posterior
/// p to the prediction u: sum_i |p_i - u_i| for MAE and sum_i (p_i - u_i)^2 for
/// MSE, both minimized exactly at u = p. For MSE this equals
/// sum_i p_i L(u, i) up to a constant. The expected-loss form
/// sum_i p_i L(u, i) is searched as well; for MAE it is linear in u and is
/// minimized at the vertex of argmax(p), which is reported separately.
struct CalibrationReport {
  LossKind loss = LossKind::kMae;
  std::size_t k = 0;
  std::size_t resolution = 0;
  Vector p;

  std::size_t grid_points = 0;
  Vector minimizer;
  double minimizer_distance = 0.0;  // max_i |u_i - p_i|
  bool within_cell = false;

  std::size_t mispredicting_points = 0;
  double min_regret_mispredicting = std::numeric_limits<double>::quiet_NaN();
  bool regret_vacuous = false;
  bool regret_positive = false;

  Vector expected_loss_minimizer;
  bool expected_loss_minimizer_consistent = false;

  bool pass = false;

  std::string to_line() const {
    using text::format_short;
    std::string line = "check=calibration loss=" + std::string(name(loss)) +
                       " pass=" + (pass ? "true" : "false") + " k=" + std::to_string(k) +
                       " resolution=" + std::to_string(resolution) + " p=";
    for (std::size_t i = 0; i < p.size(); ++i) line += (i ? "/" : "") + format_short(p[i], 6);
    line += " minimizer_dist=" + format_short(minimizer_distance, 3);
    line += " mispredicting=" + std::to_string(mispredicting_points);
    line += regret_vacuous ? std::string(" regret=vacuous")
                           : " min_regret=" + format_short(min_regret_mispredicting, 3);
    line += " expected_loss_consistent=" +
            std::string(expected_loss_minimizer_consistent ? "true" : "false");
    return line;
  }
};

namespace detail {

/// Visits every u = (a_1, ..., a_k) / resolution with sum a_i = resolution.
template <class Visit>
void for_each_simplex_point(std::size_t k, std::size_t resolution, Visit&& visit) {
  const double r = static_cast<double>(resolution);
  std::vector<double> u(k);
  if (k == 2) {
    for (std::size_t a = 0; a <= resolution; ++a) {
      u[0] = static_cast<double>(a) / r;
      u[1] = static_cast<double>(resolution - a) / r;
      visit(std::span<const double>(u));
    }
    return;
  }
  for (std::size_t a = 0; a <= resolution; ++a) {
    for (std::size_t b = 0; a + b <= resolution; ++b) {
      u[0] = static_cast<double>(a) / r;
      u[1] = static_cast<double>(b) / r;
      u[2] = static_cast<double>(resolution - a - b) / r;
      visit(std::span<const double>(u));
    }
  }
}

inline double distance_risk(LossKind kind, std::span<const double> p, std::span<const double> u) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double diff = p[i] - u[i];
    total += kind == LossKind::kMae ? std::abs(diff) : diff * diff;
  }
  return total;
}

inline double expected_loss_risk(LossKind kind, std::span<const double> p,
                                 std::span<const double> u) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] * loss_value_unchecked<double>(kind, u, i);
  return total;
}

}  // namespace detail

inline CalibrationReport calibration_check(LossKind kind, const ProbVector& p,
                                           std::size_t grid_resolution) {
  if (kind != LossKind::kMae && kind != LossKind::kMse) {
    throw Error(ErrorKind::kUnsupported, "calibration check covers MAE and MSE only");
  }
  const std::size_t k = p.size();
  if (k != 2 && k != 3) throw Error(ErrorKind::kDomain, "calibration grid supports k in {2, 3}");
  if (grid_resolution < 1) throw Error(ErrorKind::kDomain, "grid resolution must be >= 1");

  CalibrationReport r;
  r.loss = kind;
  r.k = k;
  r.resolution = grid_resolution;
  r.p = p.vector();

  const double top = *std::max_element(r.p.begin(), r.p.end());
  std::vector<bool> predicts_p(k, false);
  std::size_t n_top = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (r.p[i] == top) {
      predicts_p[i] = true;
      ++n_top;
    }
  }
  r.regret_vacuous = n_top == k;

  const double inf_risk = detail::distance_risk(kind, r.p, r.p);
  double best = std::numeric_limits<double>::infinity();
  double best_expected = std::numeric_limits<double>::infinity();
  double min_regret = std::numeric_limits<double>::infinity();
  detail::for_each_simplex_point(k, grid_resolution, [&](std::span<const double> u) {
    ++r.grid_points;
    const double risk = detail::distance_risk(kind, r.p, u);
    if (risk < best) {
      best = risk;
      r.minimizer.assign(u.begin(), u.end());
    }
    const double expected = detail::expected_loss_risk(kind, r.p, u);
    if (expected < best_expected) {
      best_expected = expected;
      r.expected_loss_minimizer.assign(u.begin(), u.end());
    }
    if (!predicts_p[argmax_tiebreak<double>(u)]) {
      ++r.mispredicting_points;
      min_regret = std::min(min_regret, risk - inf_risk);
    }
  });

  for (std::size_t i = 0; i < k; ++i) {
    r.minimizer_distance = std::max(r.minimizer_distance, std::abs(r.minimizer[i] - r.p[i]));
  }
  const double cell = 1.0 / static_cast<double>(grid_resolution);
  r.within_cell = r.minimizer_distance <= cell + 1e-12;
  if (r.mispredicting_points > 0) r.min_regret_mispredicting = min_regret;
  r.regret_positive = r.mispredicting_points == 0 || min_regret > 0.0;
  r.expected_loss_minimizer_consistent =
      predicts_p[argmax_tiebreak<double>(std::span<const double>(r.expected_loss_minimizer))];
  r.pass = r.within_cell && r.regret_positive && r.expected_loss_minimizer_consistent;
  return r;
}

}  // namespace symloss
