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

// Seeded suite of random instances for the noise-tolerance checks, the
// calibration grid search and the cross-entropy counterexample search.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "symloss/config.hpp"
#include "symloss/core_math.hpp"
#include "symloss/error.hpp"
#include "symloss/instances.hpp"
#include "symloss/losses.hpp"
#include "symloss/noise.hpp"
#include "symloss/risk.hpp"
#include "symloss/text.hpp"

namespace symloss {

struct VerifySuiteConfig {
  std::uint64_t seed = 2017;
  std::vector<LossKind> losses = {LossKind::kMae, LossKind::kZeroOne, LossKind::kCce, LossKind::kMse};

  std::size_t t1_instances = 200;
  std::size_t t1_family = 50;
  std::vector<std::size_t> ks = {2, 3, 4};
  std::vector<double> etas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::size_t support_min = 5;
  std::size_t support_max = 30;
  std::size_t dim = 2;

  std::size_t t2_instances = 100;
  std::size_t t2_family = 20;
  double t2_cap = 0.3;

  std::size_t t3_instances = 100;
  std::size_t t3_family = 20;
  double t3_row_noise_max = 0.45;

  std::size_t calibration_instances = 50;
  std::size_t resolution_k2 = 1000;
  std::size_t resolution_k3 = 200;

  std::size_t counterexample_attempts = 500;
  std::size_t counterexample_k = 3;
  std::size_t counterexample_family = 20;
  double counterexample_eta = 0.5;

  void validate() const {
    if (losses.empty()) throw Error(ErrorKind::kInvalidInput, "no losses to verify");
    if (ks.empty()) throw Error(ErrorKind::kInvalidInput, "no class counts");
    for (std::size_t k : ks) {
      if (k < 2) throw Error(ErrorKind::kInvalidInput, "class counts must be >= 2");
    }
    if (support_min < 1 || support_max < support_min) {
      throw Error(ErrorKind::kInvalidInput, "need 1 <= support_min <= support_max");
    }
    if (dim < 1) throw Error(ErrorKind::kInvalidInput, "dim must be >= 1");
    if (t1_family < 1 || t2_family < 1 || t3_family < 1 || counterexample_family < 1) {
      throw Error(ErrorKind::kInvalidInput, "family sizes must be >= 1");
    }
    if (counterexample_k < 2) throw Error(ErrorKind::kInvalidInput, "counterexample k must be >= 2");
    if (resolution_k2 < 1 || resolution_k3 < 1) {
      throw Error(ErrorKind::kInvalidInput, "grid resolutions must be >= 1");
    }
  }
};

/// Reads the [verify], [theorem1], [theorem2], [theorem3], [calibration] and
/// [counterexample] sections. `losses` in [verify] is required.
inline VerifySuiteConfig parse_verify_config(const Config& cfg) {
  VerifySuiteConfig v;
  v.seed = static_cast<std::uint64_t>(cfg.get_int("verify", "seed", static_cast<long long>(v.seed)));
  const auto& entry = cfg.require("verify", "losses");
  v.losses.clear();
  for (const auto& l : cfg.require_list("verify", "losses")) {
    try {
      v.losses.push_back(parse_loss_kind(l));
    } catch (const Error& e) {
      throw ParseError(entry.line, e.what());
    }
  }
  v.t1_instances = cfg.get_size("theorem1", "instances", v.t1_instances);
  v.t1_family = cfg.get_size("theorem1", "family_size", v.t1_family);
  if (cfg.has("theorem1", "ks")) {
    v.ks.clear();
    for (long long k : cfg.get_int_list("theorem1", "ks", {})) {
      if (k < 2) throw ParseError(cfg.find("theorem1", "ks")->line, "class counts must be >= 2");
      v.ks.push_back(static_cast<std::size_t>(k));
    }
  }
  v.etas = cfg.get_real_list("theorem1", "etas", v.etas);
  v.support_min = cfg.get_size("theorem1", "support_min", v.support_min);
  v.support_max = cfg.get_size("theorem1", "support_max", v.support_max);
  v.dim = cfg.get_size("theorem1", "dim", v.dim);
  v.t2_instances = cfg.get_size("theorem2", "instances", v.t2_instances);
  v.t2_family = cfg.get_size("theorem2", "family_size", v.t2_family);
  v.t2_cap = cfg.get_real("theorem2", "cap", v.t2_cap);
  v.t3_instances = cfg.get_size("theorem3", "instances", v.t3_instances);
  v.t3_family = cfg.get_size("theorem3", "family_size", v.t3_family);
  v.t3_row_noise_max = cfg.get_real("theorem3", "row_noise_max", v.t3_row_noise_max);
  v.calibration_instances = cfg.get_size("calibration", "instances", v.calibration_instances);
  v.resolution_k2 = cfg.get_size("calibration", "resolution_k2", v.resolution_k2);
  v.resolution_k3 = cfg.get_size("calibration", "resolution_k3", v.resolution_k3);
  v.counterexample_attempts = cfg.get_size("counterexample", "attempts", v.counterexample_attempts);
  v.counterexample_k = cfg.get_size("counterexample", "k", v.counterexample_k);
  v.counterexample_family = cfg.get_size("counterexample", "family_size", v.counterexample_family);
  v.counterexample_eta = cfg.get_real("counterexample", "eta", v.counterexample_eta);
  try {
    v.validate();
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
  return v;
}

/// Aggregate over all instances of one (check, loss) pair.
struct SuiteLine {
  std::string check;  // "theorem=1", "theorem=2 part=zero-risk", ...
  LossKind loss = LossKind::kMae;
  std::size_t checked = 0;
  std::size_t passed = 0;
  std::size_t skipped = 0;
  std::size_t not_applicable = 0;
  std::size_t argmin_agree = 0;
  double max_dev = 0.0;
  std::string reason;

  bool applicable() const { return checked > 0; }
  bool pass() const { return checked > 0 && passed == checked; }

  void add(const TheoremReport& r) {
    switch (r.status) {
      case CheckStatus::kNotApplicable:
        ++not_applicable;
        if (reason.empty()) reason = r.reason;
        return;
      case CheckStatus::kSkipped:
        ++skipped;
        return;
      case CheckStatus::kChecked:
        break;
    }
    ++checked;
    if (r.pass) ++passed;
    if (r.argmin_preserved) ++argmin_agree;
    if (std::isfinite(r.max_dev)) max_dev = std::max(max_dev, r.max_dev);
  }

  std::string to_line() const {
    std::string line = check + " loss=" + std::string(name(loss)) + " pass=";
    if (!applicable()) {
      line += "na status=" + std::string(not_applicable > 0 ? "not-applicable" : "skipped");
      if (!reason.empty()) line += " reason=" + reason;
      line += " skipped=" + std::to_string(skipped);
      return line;
    }
    line += pass() ? "true" : "false";
    line += " max_dev=" + text::format_short(max_dev, 3) + " checked=" + std::to_string(checked) +
            " passed=" + std::to_string(passed) + " argmin_agree=" + std::to_string(argmin_agree) +
            "/" + std::to_string(checked) + " skipped=" + std::to_string(skipped);
    return line;
  }
};

struct CounterexampleResult {
  bool found = false;
  std::size_t attempts = 0;
  std::size_t attempt_index = 0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double noisy_minimizer_clean_risk = std::numeric_limits<double>::quiet_NaN();
  std::optional<LinearInstance> instance;

  std::string to_line() const {
    std::string line = "check=counterexample loss=CCE pass=" + std::string(found ? "true" : "false") +
                       " found=" + (found ? "true" : "false") + " attempts=" + std::to_string(attempts);
    if (found) {
      line += " rho=" + text::format_short(rho, 10) +
              " noisy_argmin_clean_risk=" + text::format_short(noisy_minimizer_clean_risk, 10);
    }
    return line;
  }
};

struct VerifySuiteResult {
  std::vector<SuiteLine> lines;
  std::vector<CalibrationReport> calibration;
  CounterexampleResult counterexample;
  std::vector<std::string> details;  // one line per instance check

  const SuiteLine* find(const std::string& check, LossKind loss) const {
    for (const auto& l : lines) {
      if (l.check == check && l.loss == loss) return &l;
    }
    return nullptr;
  }

  bool calibration_pass() const {
    return std::all_of(calibration.begin(), calibration.end(),
                       [](const CalibrationReport& r) { return r.pass; });
  }

  bool all_pass() const {
    for (const auto& l : lines) {
      if (l.applicable() && !l.pass()) return false;
    }
    return calibration_pass() && (counterexample.attempts == 0 || counterexample.found);
  }

  std::string report() const {
    std::string out;
    for (const auto& l : lines) out += l.to_line() + "\n";
    for (LossKind loss : {LossKind::kMae, LossKind::kMse}) {
      std::size_t n = 0, ok = 0;
      double worst = 0.0;
      for (const auto& c : calibration) {
        if (c.loss != loss) continue;
        ++n;
        if (c.pass) ++ok;
        worst = std::max(worst, c.minimizer_distance);
      }
      if (n == 0) continue;
      out += "check=calibration loss=" + std::string(name(loss)) +
             " pass=" + (ok == n ? "true" : "false") + " checked=" + std::to_string(n) +
             " passed=" + std::to_string(ok) + " max_minimizer_dist=" + text::format_short(worst, 3) +
             "\n";
    }
    if (counterexample.attempts > 0) out += counterexample.to_line() + "\n";
    out += std::string("overall pass=") + (all_pass() ? "true" : "false") + "\n";
    return out;
  }
};

namespace detail {

inline SuiteLine& suite_line(std::vector<SuiteLine>& lines, const std::string& check, LossKind loss) {
  for (auto& l : lines) {
    if (l.check == check && l.loss == loss) return l;
  }
  SuiteLine line;
  line.check = check;
  line.loss = loss;
  lines.push_back(std::move(line));
  return lines.back();
}

inline SimpleNonUniformNoise random_non_uniform(double cap, Rng& rng) {
  return SimpleNonUniformNoise{rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), cap, 0};
}

inline ProbVector random_posterior(std::size_t k, Rng& rng) {
  std::vector<double> p(k);
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(rng.normal());
    total += v;
  }
  for (double& v : p) v /= total;
  // Exact renormalization so the entries sum to 1 within rounding.
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) s += p[i];
  p[k - 1] = std::max(0.0, 1.0 - s);
  return ProbVector::from(std::move(p));
}

}  // namespace detail

/// Theorem 1 over t1_instances random instances, every eta below (k-1)/k.
inline void run_theorem1(const VerifySuiteConfig& cfg, VerifySuiteResult& out) {
  const std::uint64_t stream = Rng::derive(cfg.seed, 1);
  for (std::size_t i = 0; i < cfg.t1_instances; ++i) {
    Rng rng(Rng::derive(stream, i));
    const std::size_t k = cfg.ks[i % cfg.ks.size()];
    const std::size_t support =
        cfg.support_min + rng.uniform_index(cfg.support_max - cfg.support_min + 1);
    const LinearInstance inst = random_instance(k, cfg.dim, support, cfg.t1_family, rng);
    const ClassifierFamily fam = inst.family();
    const double kd = static_cast<double>(k);
    for (double eta : cfg.etas) {
      if (!(eta < (kd - 1.0) / kd)) continue;
      for (LossKind loss : cfg.losses) {
        const TheoremReport r = verify_theorem(1, loss, fam, inst.dist, SymmetricNoise{eta});
        detail::suite_line(out.lines, "theorem=1", loss).add(r);
        out.details.push_back("instance=" + std::to_string(i) + " " + r.to_line());
      }
    }
  }
}

/// Theorem 2: a zero-risk part on separable instances and a bound part on
/// random instances, both with caps at t2_cap.
inline void run_theorem2(const VerifySuiteConfig& cfg, VerifySuiteResult& out) {
  const std::uint64_t stream = Rng::derive(cfg.seed, 2);
  for (std::size_t i = 0; i < cfg.t2_instances; ++i) {
    Rng rng(Rng::derive(stream, i));
    const std::size_t k = cfg.ks[i % cfg.ks.size()];
    const LinearInstance sep = separable_instance(k, cfg.t2_family, rng);
    const NoiseModel sep_noise = detail::random_non_uniform(cfg.t2_cap, rng);
    const std::size_t support =
        cfg.support_min + rng.uniform_index(cfg.support_max - cfg.support_min + 1);
    const LinearInstance rnd = random_instance(k, cfg.dim, support, cfg.t2_family, rng);
    const NoiseModel rnd_noise = detail::random_non_uniform(cfg.t2_cap, rng);
    for (LossKind loss : cfg.losses) {
      TheoremReport a = verify_theorem(2, loss, sep.family(), sep.dist, sep_noise);
      if (a.status == CheckStatus::kChecked && a.rho > kIdentityTolerance) {
        a.status = CheckStatus::kSkipped;
        a.reason = "premise-min-clean-risk-not-zero";
      }
      detail::suite_line(out.lines, "theorem=2 part=zero-risk", loss).add(a);
      out.details.push_back("instance=" + std::to_string(i) + " part=zero-risk " + a.to_line());

      TheoremReport b = verify_theorem(2, loss, rnd.family(), rnd.dist, rnd_noise);
      if (b.status == CheckStatus::kChecked && b.rho <= kIdentityTolerance) {
        b.status = CheckStatus::kSkipped;
        b.reason = "premise-min-clean-risk-zero";
      }
      detail::suite_line(out.lines, "theorem=2 part=bound", loss).add(b);
      out.details.push_back("instance=" + std::to_string(i) + " part=bound " + b.to_line());
    }
  }
}

/// Theorem 3 on separable instances with random diagonally dominant matrices.
inline void run_theorem3(const VerifySuiteConfig& cfg, VerifySuiteResult& out) {
  const std::uint64_t stream = Rng::derive(cfg.seed, 3);
  for (std::size_t i = 0; i < cfg.t3_instances; ++i) {
    Rng rng(Rng::derive(stream, i));
    const std::size_t k = cfg.ks[i % cfg.ks.size()];
    const LinearInstance inst = separable_instance(k, cfg.t3_family, rng);
    const NoiseModel noise = ClassConditionalNoise{random_diag_dominant(k, cfg.t3_row_noise_max, rng)};
    for (LossKind loss : cfg.losses) {
      const TheoremReport r = verify_theorem(3, loss, inst.family(), inst.dist, noise);
      detail::suite_line(out.lines, "theorem=3", loss).add(r);
      out.details.push_back("instance=" + std::to_string(i) + " " + r.to_line());
    }
  }
}

inline void run_calibration(const VerifySuiteConfig& cfg, VerifySuiteResult& out) {
  const std::uint64_t stream = Rng::derive(cfg.seed, 4);
  for (std::size_t i = 0; i < cfg.calibration_instances; ++i) {
    Rng rng(Rng::derive(stream, i));
    const std::size_t k = 2 + i % 2;
    const ProbVector p = detail::random_posterior(k, rng);
    for (LossKind loss : {LossKind::kMae, LossKind::kMse}) {
      CalibrationReport r = calibration_check(loss, p, k == 2 ? cfg.resolution_k2 : cfg.resolution_k3);
      out.details.push_back("instance=" + std::to_string(i) + " " + r.to_line());
      out.calibration.push_back(std::move(r));
    }
  }
}

/// Looks for a random instance where the cross-entropy minimizer under
/// symmetric noise is not a clean minimizer.
inline CounterexampleResult find_cce_counterexample(const VerifySuiteConfig& cfg) {
  CounterexampleResult res;
  const std::uint64_t stream = Rng::derive(cfg.seed, 5);
  const NoiseModel noise = SymmetricNoise{cfg.counterexample_eta};
  for (std::size_t i = 0; i < cfg.counterexample_attempts; ++i) {
    ++res.attempts;
    Rng rng(Rng::derive(stream, i));
    const std::size_t support =
        cfg.support_min + rng.uniform_index(cfg.support_max - cfg.support_min + 1);
    LinearInstance inst =
        random_instance(cfg.counterexample_k, cfg.dim, support, cfg.counterexample_family, rng);
    const ClassifierFamily fam = inst.family();
    const Vector clean = family_risks(LossKind::kCce, fam, inst.dist);
    const Vector noisy = family_risks(LossKind::kCce, fam, corrupt_distribution(inst.dist, noise));
    const double rho = clean[argmin_with_ties(clean)];
    const double got = clean[argmin_with_ties(noisy)];
    if (got > rho + kIdentityTolerance) {
      res.found = true;
      res.attempt_index = i;
      res.rho = rho;
      res.noisy_minimizer_clean_risk = got;
      inst.symmetric_eta = cfg.counterexample_eta;
      res.instance = std::move(inst);
      break;
    }
  }
  return res;
}

inline VerifySuiteResult run_verify_suite(const VerifySuiteConfig& cfg) {
  cfg.validate();
  VerifySuiteResult out;
  run_theorem1(cfg, out);
  run_theorem2(cfg, out);
  run_theorem3(cfg, out);
  run_calibration(cfg, out);
  out.counterexample = find_cce_counterexample(cfg);
  return out;
}

}  // namespace symloss
