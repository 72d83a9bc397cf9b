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

// Deterministic numeric primitives: the project-wide PRNG, a dense row-major
// matrix, stabilized softmax and the tie-broken argmax prediction rule.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symloss/error.hpp"

namespace symloss {

namespace detail {

inline void check_label(std::size_t j, std::size_t k) {
  if (j >= k) {
    throw Error(ErrorKind::kInvalidLabel,
                "label " + std::to_string(j) + " out of range for k = " + std::to_string(k));
  }
}

}  // namespace detail

/// Seeded PRNG used everywhere in the project.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. All derived draws (uniform reals, normals, indices, shuffles)
/// are computed here rather than through <random> distributions, which are
/// implementation-defined, so a seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n) by rejection, free of modulo bias.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::kInvalidInput, "uniform_index over empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = next_u64();
    while (draw >= limit) draw = next_u64();
    return static_cast<std::size_t>(draw % bound);
  }

  /// Index drawn with probability proportional to p (inverse CDF).
  std::size_t categorical(std::span<const double> p) {
    if (p.empty()) throw Error(ErrorKind::kInvalidInput, "categorical over empty vector");
    double total = 0.0;
    for (double w : p) total += w;
    const double target = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (target < acc) return i;
    }
    // Round-off can leave target == total; fall back to the last positive entry.
    for (std::size_t i = p.size(); i-- > 0;) {
      if (p[i] > 0.0) return i;
    }
    return p.size() - 1;
  }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Seed for an independent sub-stream, mixed with splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Dense row-major matrix.
template <std::floating_point T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using Vector = std::vector<double>;

/// out = A * B.
template <std::floating_point T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "matmul inner dimensions differ");
  }
  BasicMatrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t m = 0; m < a.cols(); ++m) {
      const T aim = a(i, m);
      if (aim == T(0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aim * b(m, j);
    }
  }
  return out;
}

/// out = A * x.
template <std::floating_point T>
std::vector<T> matvec(const BasicMatrix<T>& a, std::span<const T> x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "matvec dimensions differ");
  }
  std::vector<T> out(a.rows(), T(0));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T acc = 0;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) acc += r[j] * x[j];
    out[i] = acc;
  }
  return out;
}

template <std::floating_point T>
bool all_finite(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

/// Writes softmax(logits) into out, shifting by the max logit first.
template <std::floating_point T>
void softmax_into(std::span<const T> logits, std::span<T> out) {
  const T top = *std::max_element(logits.begin(), logits.end());
  T total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (T& v : out) v /= total;
}

/// Probability vector over k >= 2 classes; entries in [0,1] summing to 1.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  /// Validating constructor.
  static ProbVector from(std::vector<double> entries) {
    if (entries.size() < 2) {
      throw Error(ErrorKind::kInvalidInput, "probability vector needs k >= 2 entries");
    }
    double total = 0.0;
    for (double p : entries) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        throw Error(ErrorKind::kInvalidInput, "probability entry outside [0,1]");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kSumTolerance) {
      throw Error(ErrorKind::kInvalidInput, "probability entries do not sum to 1");
    }
    return ProbVector(std::move(entries));
  }

  static ProbVector uniform(std::size_t k) {
    return from(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  static ProbVector one_hot(std::size_t k, std::size_t j) {
    std::vector<double> e(k, 0.0);
    e.at(j) = 1.0;
    return from(std::move(e));
  }

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> values() const noexcept { return entries_; }
  const std::vector<double>& vector() const noexcept { return entries_; }

 private:
  friend ProbVector softmax(std::span<const double> logits);

  explicit ProbVector(std::vector<double> entries) : entries_(std::move(entries)) {}

  std::vector<double> entries_;
};

/// Stable softmax; throws on k < 2 or non-finite logits.
inline ProbVector softmax(std::span<const double> logits) {
  if (logits.size() < 2) throw Error(ErrorKind::kInvalidInput, "softmax needs k >= 2");
  if (!all_finite(logits)) throw Error(ErrorKind::kInvalidInput, "softmax input not finite");
  std::vector<double> out(logits.size());
  softmax_into<double>(logits, out);
  return ProbVector(std::move(out));
}

/// Smallest index attaining the maximum.
template <std::floating_point T>
std::size_t argmax_tiebreak(std::span<const T> values) {
  if (values.empty()) throw Error(ErrorKind::kInvalidInput, "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline std::size_t argmax_tiebreak(const std::vector<double>& values) {
  return argmax_tiebreak<double>(std::span<const double>(values));
}

inline std::size_t argmax_tiebreak(const ProbVector& u) { return argmax_tiebreak<double>(u.values()); }

}  // namespace symloss
