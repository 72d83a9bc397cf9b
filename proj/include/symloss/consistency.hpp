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

// Empirical trend of the noisy empirical-risk minimizer over a fixed finite
// family: its clean error minus the family's best clean error, as n grows.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "symloss/config.hpp"
#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/losses.hpp"
#include "symloss/noise.hpp"
#include "symloss/risk.hpp"
#include "symloss/text.hpp"

namespace symloss {

struct ConsistencyConfig {
  SyntheticSpec population{BlobKind::kBlobs, 3, 2, 400, 1.0, 2.0, 11};
  std::vector<std::size_t> ns = {100, 1000, 10000};
  std::vector<long long> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  double eta = 0.4;
  LossKind loss = LossKind::kZeroOne;
  std::size_t grid = 11;
  std::optional<double> bias_range;  // default: mean distance squared
  bool expect_shrinking = false;

  void validate() const {
    population.validate();
    if (ns.empty()) throw Error(ErrorKind::kInvalidInput, "need at least one sample size");
    for (std::size_t n : ns) {
      if (n < 1) throw Error(ErrorKind::kInvalidInput, "sample sizes must be >= 1");
    }
    if (seeds.empty()) throw Error(ErrorKind::kInvalidInput, "need at least one seed");
    if (grid < 1) throw Error(ErrorKind::kInvalidInput, "grid must be >= 1");
    validate_noise();
  }

  void validate_noise() const { symloss::validate(NoiseModel{SymmetricNoise{eta}}, population.k); }
};

inline ConsistencyConfig parse_consistency_config(const Config& cfg) {
  ConsistencyConfig c;
  auto& pop = c.population;
  if (cfg.has("consistency", "kind")) {
    try {
      pop.kind = parse_blob_kind(cfg.get_string("consistency", "kind", "blobs"));
    } catch (const Error& e) {
      throw ParseError(cfg.find("consistency", "kind")->line, e.what());
    }
  }
  pop.k = cfg.get_size("consistency", "k", pop.k);
  pop.d = cfg.get_size("consistency", "d", pop.d);
  pop.n_per_class = cfg.get_size("consistency", "population_per_class", pop.n_per_class);
  pop.spread = cfg.get_real("consistency", "spread", pop.spread);
  pop.separation = cfg.get_real("consistency", "separation", pop.separation);
  pop.seed = static_cast<std::uint64_t>(cfg.get_int("consistency", "seed", static_cast<long long>(pop.seed)));
  if (cfg.has("consistency", "ns")) {
    c.ns.clear();
    for (long long n : cfg.get_int_list("consistency", "ns", {})) {
      if (n < 1) throw ParseError(cfg.find("consistency", "ns")->line, "sample sizes must be >= 1");
      c.ns.push_back(static_cast<std::size_t>(n));
    }
  }
  c.seeds = cfg.get_int_list("consistency", "seeds", c.seeds);
  c.eta = cfg.get_real("consistency", "eta", c.eta);
  if (cfg.has("consistency", "loss")) {
    try {
      c.loss = parse_loss_kind(cfg.get_string("consistency", "loss", "ZeroOne"));
    } catch (const Error& e) {
      throw ParseError(cfg.find("consistency", "loss")->line, e.what());
    }
  }
  c.grid = cfg.get_size("consistency", "grid", c.grid);
  if (cfg.has("consistency", "bias_range")) c.bias_range = cfg.get_real("consistency", "bias_range", 0.0);
  c.expect_shrinking = cfg.get_bool("consistency", "expect_shrinking", c.expect_shrinking);
  try {
    c.validate();
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
  return c;
}

/// Nearest-mean linear classifiers with class-bias offsets on a grid:
/// logits_c = 2 mu_c . x - |mu_c|^2 + o_c, o_0 = 0, o_c in linspace(-range, range, grid).
/// grid^(k-1) members; a grid of 1 gives the single offset 0.
inline std::vector<LinearClassifier> nearest_mean_grid(const Matrix& means, std::size_t grid,
                                                       double range) {
  const std::size_t k = means.rows();
  const std::size_t d = means.cols();
  std::vector<double> offsets(grid, 0.0);
  if (grid > 1) {
    for (std::size_t g = 0; g < grid; ++g) {
      offsets[g] = -range + 2.0 * range * static_cast<double>(g) / static_cast<double>(grid - 1);
    }
  }
  std::size_t count = 1;
  for (std::size_t c = 1; c < k; ++c) count *= grid;
  std::vector<LinearClassifier> members;
  members.reserve(count);
  std::vector<std::size_t> digit(k, 0);
  for (std::size_t m = 0; m < count; ++m) {
    std::size_t rest = m;
    for (std::size_t c = 1; c < k; ++c) {
      digit[c] = rest % grid;
      rest /= grid;
    }
    LinearClassifier f{Matrix(d, k), Vector(k)};
    for (std::size_t c = 0; c < k; ++c) {
      double sq = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        f.weights(i, c) = 2.0 * means(c, i);
        sq += means(c, i) * means(c, i);
      }
      f.bias[c] = -sq + (c == 0 ? 0.0 : offsets[digit[c]]);
    }
    members.push_back(std::move(f));
  }
  return members;
}

struct ConsistencyRow {
  std::size_t n = 0;
  double gap = 0.0;  // mean over seeds
  std::vector<double> per_seed;
};

struct ConsistencyResult {
  std::size_t family_size = 0;
  double best_clean_error = 0.0;
  std::vector<ConsistencyRow> rows;

  bool shrinking() const { return rows.size() >= 2 && rows.back().gap < rows.front().gap; }

  std::string to_csv() const {
    std::string out = "n,gap\n";
    for (const auto& r : rows) out += std::to_string(r.n) + "," + text::format_real(r.gap) + "\n";
    return out;
  }

  std::string to_line() const {
    std::string line = "check=consistency family=" + std::to_string(family_size) +
                       " best_clean_error=" + text::format_short(best_clean_error, 6);
    if (!rows.empty()) {
      line += " n_first=" + std::to_string(rows.front().n) +
              " gap_first=" + text::format_short(rows.front().gap, 6) +
              " n_last=" + std::to_string(rows.back().n) +
              " gap_last=" + text::format_short(rows.back().gap, 6);
    }
    line += std::string(" shrinking=") + (shrinking() ? "true" : "false");
    return line;
  }
};

/// The population is the empirical distribution of a blob sample. For each
/// seed and n: n i.i.d. draws, symmetric label noise, ERM over the family.
inline ConsistencyResult run_consistency(const ConsistencyConfig& cfg, long long seed_offset = 0) {
  cfg.validate();
  const LabeledDataset sample = gen_blobs(cfg.population);
  const FiniteDistribution pop = to_finite(sample);
  const std::size_t k = pop.k;
  const double range = cfg.bias_range ? *cfg.bias_range
                                      : cfg.population.mean_distance() * cfg.population.mean_distance();
  const auto members = nearest_mean_grid(blob_means(cfg.population), cfg.grid, range);

  ConsistencyResult result;
  result.family_size = members.size();
  std::vector<double> clean_error(members.size());
  std::vector<Matrix> tables;
  tables.reserve(members.size());
  for (std::size_t f = 0; f < members.size(); ++f) {
    clean_error[f] = exact_risk(LossKind::kZeroOne, members[f], pop);
    tables.push_back(loss_table(cfg.loss, members[f], pop));
  }
  result.best_clean_error = *std::min_element(clean_error.begin(), clean_error.end());

  const NoiseModel noise = SymmetricNoise{cfg.eta};
  const NoiseMatrix t = transition_matrix(noise, k);
  for (std::size_t n : cfg.ns) {
    ConsistencyRow row;
    row.n = n;
    for (long long s : cfg.seeds) {
      Rng rng(Rng::derive(static_cast<std::uint64_t>(s + seed_offset), n));
      Matrix counts(pop.size(), k, 0.0);
      for (std::size_t draw = 0; draw < n; ++draw) {
        const std::size_t m = rng.categorical(pop.mass);
        const std::size_t y = rng.categorical(pop.conditionals.row(m));
        const std::size_t noisy = rng.categorical(t.row(y));
        counts(m, noisy) += 1.0;
      }
      std::vector<double> emp(members.size(), 0.0);
      for (std::size_t f = 0; f < members.size(); ++f) {
        double total = 0.0;
        const auto& tab = tables[f];
        for (std::size_t i = 0; i < tab.size(); ++i) total += counts.flat()[i] * tab.flat()[i];
        emp[f] = total / static_cast<double>(n);
      }
      const std::size_t erm = argmin_with_ties(emp);
      row.per_seed.push_back(clean_error[erm] - result.best_clean_error);
    }
    double sum = 0.0;
    for (double g : row.per_seed) sum += g;
    row.gap = sum / static_cast<double>(row.per_seed.size());
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace symloss
