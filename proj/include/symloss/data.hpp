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

// Labeled datasets, finite joint distributions over (x, y), synthetic
// Gaussian blob generators and CSV dataset exchange.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/error.hpp"
#include "symloss/text.hpp"

namespace symloss {

using Labels = std::vector<std::size_t>;

/// N labeled points in R^d with labels in [0, k).
struct LabeledDataset {
  Matrix features;  // N x d
  Labels labels;    // length N
  std::size_t k = 2;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  void validate() const {
    if (labels.empty()) throw Error(ErrorKind::kInvalidInput, "dataset is empty");
    if (k < 2) throw Error(ErrorKind::kInvalidInput, "dataset needs k >= 2");
    if (features.rows() != labels.size()) {
      throw Error(ErrorKind::kDimensionMismatch, "feature rows differ from label count");
    }
    for (std::size_t y : labels) {
      if (y >= k) throw Error(ErrorKind::kInvalidLabel, "label " + std::to_string(y) + " >= k");
    }
    if (!all_finite(features.flat())) throw Error(ErrorKind::kNonFinite, "non-finite feature");
  }

  bool operator==(const LabeledDataset&) const = default;
};

/// Discrete joint distribution: M support points, their masses, and p(y | x_m).
struct FiniteDistribution {
  Matrix support;        // M x d
  Vector mass;           // length M
  Matrix conditionals;   // M x k, row m = p(y | x_m)
  std::size_t k = 2;

  static constexpr double kTolerance = 1e-12;

  std::size_t size() const noexcept { return mass.size(); }
  std::size_t dim() const noexcept { return support.cols(); }

  void validate() const {
    if (mass.empty()) throw Error(ErrorKind::kInvalidInput, "distribution has empty support");
    if (support.rows() != mass.size() || conditionals.rows() != mass.size() ||
        conditionals.cols() != k) {
      throw Error(ErrorKind::kDimensionMismatch, "distribution shapes disagree");
    }
    double total = 0.0;
    for (double m : mass) {
      if (!(m >= 0.0)) throw Error(ErrorKind::kInvalidInput, "negative mass");
      total += m;
    }
    if (std::abs(total - 1.0) > kTolerance) {
      throw Error(ErrorKind::kInvalidInput, "mass does not sum to 1");
    }
    for (std::size_t m = 0; m < size(); ++m) {
      double row = 0.0;
      for (double p : conditionals.row(m)) {
        if (!(p >= 0.0)) throw Error(ErrorKind::kInvalidInput, "negative conditional");
        row += p;
      }
      if (std::abs(row - 1.0) > kTolerance) {
        throw Error(ErrorKind::kInvalidInput, "conditional row does not sum to 1");
      }
    }
  }

  /// sum_m mass_m p(y = j | x_m).
  Vector class_marginal() const {
    Vector out(k, 0.0);
    for (std::size_t m = 0; m < size(); ++m) {
      for (std::size_t j = 0; j < k; ++j) out[j] += mass[m] * conditionals(m, j);
    }
    return out;
  }

  bool operator==(const FiniteDistribution&) const = default;
};

enum class BlobKind { kBlobs, kSeparatedBlobs };

inline std::string_view name(BlobKind kind) {
  return kind == BlobKind::kBlobs ? "blobs" : "separated-blobs";
}

inline BlobKind parse_blob_kind(std::string_view token) {
  const std::string t = text::to_lower(text::trim(token));
  if (t == "blobs") return BlobKind::kBlobs;
  if (t == "separated-blobs" || t == "separated_blobs") return BlobKind::kSeparatedBlobs;
  throw Error(ErrorKind::kInvalidInput, "unknown synthetic kind '" + std::string(token) + "'");
}

/// Isotropic Gaussian clusters, one per class.
///
/// Class means sit pairwise `mean_distance()` apart: `separation` for blobs and
/// 6 * spread + separation for separated-blobs, so balls of radius 3 * spread
/// around the means are disjoint. Means are scaled basis vectors when k <= d
/// and points on the first axis otherwise.
struct SyntheticSpec {
  BlobKind kind = BlobKind::kSeparatedBlobs;
  std::size_t k = 3;
  std::size_t d = 2;
  std::size_t n_per_class = 100;
  double spread = 1.0;
  double separation = 1.0;
  std::uint64_t seed = 0;

  double mean_distance() const {
    return kind == BlobKind::kSeparatedBlobs ? 6.0 * spread + separation : separation;
  }

  void validate() const {
    if (k < 2) throw Error(ErrorKind::kInvalidInput, "synthetic spec needs k >= 2");
    if (d < 1) throw Error(ErrorKind::kInvalidInput, "synthetic spec needs d >= 1");
    if (n_per_class < 1) throw Error(ErrorKind::kInvalidInput, "n_per_class must be >= 1");
    if (!(spread > 0.0) || !std::isfinite(spread)) {
      throw Error(ErrorKind::kInvalidInput, "spread must be > 0");
    }
    if (!(separation > 0.0) || !std::isfinite(separation)) {
      throw Error(ErrorKind::kInvalidInput, "separation must be > 0");
    }
  }
};

inline Matrix blob_means(const SyntheticSpec& spec) {
  Matrix means(spec.k, spec.d, 0.0);
  const double dist = spec.mean_distance();
  for (std::size_t c = 0; c < spec.k; ++c) {
    if (spec.k <= spec.d) {
      means(c, c) = dist / std::sqrt(2.0);
    } else {
      means(c, 0) = dist * static_cast<double>(c);
    }
  }
  return means;
}

/// Index of the closest row of `means` to x (squared Euclidean, lowest index on ties).
inline std::size_t nearest_mean(const Matrix& means, std::span<const double> x) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < means.rows(); ++c) {
    double d2 = 0.0;
    const auto mu = means.row(c);
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - mu[i]) * (x[i] - mu[i]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

/// Per-class empirical means (k x d). Classes with no points get a zero row.
inline Matrix class_means(const LabeledDataset& data) {
  Matrix means(data.k, data.dim(), 0.0);
  std::vector<std::size_t> counts(data.k, 0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::size_t y = data.labels[n];
    ++counts[y];
    for (std::size_t i = 0; i < data.dim(); ++i) means(y, i) += data.features(n, i);
  }
  for (std::size_t c = 0; c < data.k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t i = 0; i < data.dim(); ++i) means(c, i) /= static_cast<double>(counts[c]);
  }
  return means;
}

/// Draws n_per_class points per class, interleaved by class.
///
/// For separated-blobs a draw is rejected and redrawn until the nearest true
/// mean is its own class, so the sample is separable by construction.
inline LabeledDataset gen_blobs(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const Matrix means = blob_means(spec);
  LabeledDataset out;
  out.k = spec.k;
  out.features = Matrix(spec.k * spec.n_per_class, spec.d);
  out.labels.resize(spec.k * spec.n_per_class);
  std::vector<double> x(spec.d);
  std::size_t n = 0;
  for (std::size_t r = 0; r < spec.n_per_class; ++r) {
    for (std::size_t c = 0; c < spec.k; ++c) {
      while (true) {
        for (std::size_t i = 0; i < spec.d; ++i) x[i] = means(c, i) + spec.spread * rng.normal();
        if (spec.kind == BlobKind::kBlobs || nearest_mean(means, x) == c) break;
      }
      std::copy(x.begin(), x.end(), out.features.row(n).begin());
      out.labels[n] = c;
      ++n;
    }
  }
  return out;
}

inline LabeledDataset gen_blobs(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  return gen_blobs(spec, rng);
}

/// Empirical distribution of a dataset: mass 1/N per row, one-hot conditionals.
inline FiniteDistribution to_finite(const LabeledDataset& data) {
  data.validate();
  FiniteDistribution dist;
  dist.k = data.k;
  dist.support = data.features;
  dist.mass.assign(data.size(), 1.0 / static_cast<double>(data.size()));
  dist.conditionals = Matrix(data.size(), data.k, 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) dist.conditionals(n, data.labels[n]) = 1.0;
  return dist;
}

/// Writes `x0,...,x{d-1},label` followed by one row per example.
inline void save_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  for (std::size_t i = 0; i < data.dim(); ++i) out << 'x' << i << ',';
  out << "label\n";
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (double v : data.features.row(n)) out << text::format_real(v) << ',';
    out << data.labels[n] << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

/// Reads a dataset written by save_csv (or any CSV with a trailing integer
/// `label` column). When k is not given it is max(label) + 1, at least 2.
inline LabeledDataset load_csv(const std::filesystem::path& path,
                               std::optional<std::size_t> k = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  const std::string where = path.string() + ": ";

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto header = text::split(text::trim(line), ',');
    if (text::to_lower(text::trim(header.back())) != "label") {
      throw ParseError(line_no, where + "last header column must be 'label'");
    }
    columns = header.size();
    if (columns < 2) throw ParseError(line_no, where + "need at least one feature column");
    have_header = true;
    break;
  }
  if (!have_header) throw ParseError(0, where + "no header");

  std::vector<double> values;
  Labels labels;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(text::trim(line), ',');
    if (cells.size() != columns) {
      throw ParseError(line_no, where + "expected " + std::to_string(columns) + " columns, got " +
                                    std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c + 1 < columns; ++c) {
      const auto v = text::parse_real(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(line_no, where + "bad feature value '" + cells[c] + "'");
      }
      values.push_back(*v);
    }
    const auto label = text::parse_int(cells.back());
    if (!label || *label < 0) {
      throw ParseError(line_no, where + "label must be a non-negative integer, got '" +
                                    cells.back() + "'");
    }
    const auto y = static_cast<std::size_t>(*label);
    if (k && y >= *k) {
      throw ParseError(line_no, where + "label " + std::to_string(y) + " >= k = " +
                                    std::to_string(*k));
    }
    max_label = std::max(max_label, y);
    labels.push_back(y);
  }
  if (labels.empty()) throw ParseError(line_no, where + "no data rows");

  LabeledDataset data;
  data.k = k ? *k : std::max<std::size_t>(max_label + 1, 2);
  data.features = Matrix(labels.size(), columns - 1);
  std::copy(values.begin(), values.end(), data.features.flat().begin());
  data.labels = std::move(labels);
  data.validate();
  return data;
}

}  // namespace symloss
