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

// Label-corruption channels.
//
// A channel maps a true label i at point x to an observed label j with
// probability T_x(i, j). Class-dependent channels have a single k x k
// row-stochastic matrix; simple non-uniform noise flips with a rate eta_x that
// depends on x and spreads the flipped mass evenly over the k - 1 wrong labels.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/text.hpp"

namespace symloss {

/// Row-stochastic k x k matrix; entry (i, j) = P(observed j | true i).
struct NoiseMatrix {
  Matrix entries;

  static constexpr double kTolerance = 1e-12;

  static NoiseMatrix identity(std::size_t k) {
    NoiseMatrix m{Matrix(k, k, 0.0)};
    for (std::size_t i = 0; i < k; ++i) m.entries(i, i) = 1.0;
    return m;
  }

  std::size_t k() const noexcept { return entries.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries(i, j); }
  std::span<const double> row(std::size_t i) const { return entries.row(i); }

  /// Noise rate of class i, 1 - T(i, i).
  double row_noise(std::size_t i) const { return 1.0 - entries(i, i); }

  void validate() const {
    if (entries.rows() < 2 || entries.rows() != entries.cols()) {
      throw Error(ErrorKind::kInvalidInput, "noise matrix must be square with k >= 2");
    }
    for (std::size_t i = 0; i < k(); ++i) {
      double total = 0.0;
      for (double p : row(i)) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw Error(ErrorKind::kInvalidInput, "noise matrix entry outside [0,1]");
        }
        total += p;
      }
      if (std::abs(total - 1.0) > kTolerance) {
        throw Error(ErrorKind::kInvalidInput,
                    "noise matrix row " + std::to_string(i) + " does not sum to 1");
      }
    }
  }

  /// T(i, i) > T(i, j) for every j != i.
  bool diagonal_dominant() const {
    for (std::size_t i = 0; i < k(); ++i) {
      for (std::size_t j = 0; j < k(); ++j) {
        if (j != i && !(entries(i, i) > entries(i, j))) return false;
      }
    }
    return true;
  }

  bool operator==(const NoiseMatrix&) const = default;
};

/// Each label flips with probability eta, uniformly onto the other k - 1 labels.
struct SymmetricNoise {
  double eta = 0.0;
};

/// Class i flips with probability eta_per_class[i], uniformly onto the others.
struct SimpleClassConditionalNoise {
  Vector eta_per_class;
};

/// Arbitrary class-dependent channel.
struct ClassConditionalNoise {
  NoiseMatrix matrix;
};

/// Flip rate eta_x = cap * sigmoid(slope * x[feature] + offset), spread evenly
/// over the wrong labels. The rate always lies in [0, cap].
struct SimpleNonUniformNoise {
  double slope = 1.0;
  double offset = 0.0;
  double cap = 0.0;
  std::size_t feature = 0;

  double rate(std::span<const double> x) const {
    if (feature >= x.size()) {
      throw Error(ErrorKind::kDimensionMismatch, "non-uniform noise feature index out of range");
    }
    const double s = 1.0 / (1.0 + std::exp(-(slope * x[feature] + offset)));
    return std::clamp(cap * s, 0.0, cap);
  }
};

using NoiseModel = std::variant<SymmetricNoise, SimpleClassConditionalNoise, ClassConditionalNoise,
                                SimpleNonUniformNoise>;

inline bool is_class_dependent(const NoiseModel& model) {
  return !std::holds_alternative<SimpleNonUniformNoise>(model);
}

/// Compact text description, also used in output filenames.
inline std::string describe(const NoiseModel& model) {
  using text::format_short;
  struct Visitor {
    std::string operator()(const SymmetricNoise& n) const {
      return "symmetric:" + format_short(n.eta);
    }
    std::string operator()(const SimpleClassConditionalNoise& n) const {
      std::string out = "classcond:";
      for (std::size_t i = 0; i < n.eta_per_class.size(); ++i) {
        if (i) out += '/';
        out += format_short(n.eta_per_class[i]);
      }
      return out;
    }
    std::string operator()(const ClassConditionalNoise& n) const {
      return "matrix:k" + std::to_string(n.matrix.k());
    }
    std::string operator()(const SimpleNonUniformNoise& n) const {
      return "nonuniform:" + format_short(n.slope) + "/" + format_short(n.offset) + "/" +
             format_short(n.cap);
    }
  };
  return std::visit(Visitor{}, model);
}

namespace detail {

inline void check_rate(double eta, const char* what) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw Error(ErrorKind::kDomain, std::string(what) + " must lie in [0, 1]");
  }
}

inline NoiseMatrix uniform_flip_matrix(std::span<const double> eta_per_class) {
  const std::size_t k = eta_per_class.size();
  NoiseMatrix m{Matrix(k, k, 0.0)};
  for (std::size_t i = 0; i < k; ++i) {
    const double off = eta_per_class[i] / static_cast<double>(k - 1);
    for (std::size_t j = 0; j < k; ++j) m.entries(i, j) = (i == j) ? 1.0 - eta_per_class[i] : off;
  }
  return m;
}

}  // namespace detail

/// Checks the model's parameters against the class count.
inline void validate(const NoiseModel& model, std::size_t k) {
  if (k < 2) throw Error(ErrorKind::kInvalidInput, "noise model needs k >= 2");
  const double kd = static_cast<double>(k);
  if (const auto* s = std::get_if<SymmetricNoise>(&model)) {
    if (!(s->eta >= 0.0 && s->eta < 1.0)) {
      throw Error(ErrorKind::kDomain, "symmetric eta must lie in [0, 1)");
    }
  } else if (const auto* c = std::get_if<SimpleClassConditionalNoise>(&model)) {
    if (c->eta_per_class.size() != k) {
      throw Error(ErrorKind::kDimensionMismatch, "eta_per_class length differs from k");
    }
    for (double e : c->eta_per_class) detail::check_rate(e, "class noise rate");
  } else if (const auto* m = std::get_if<ClassConditionalNoise>(&model)) {
    if (m->matrix.k() != k) throw Error(ErrorKind::kDimensionMismatch, "noise matrix k differs");
    m->matrix.validate();
  } else if (const auto* u = std::get_if<SimpleNonUniformNoise>(&model)) {
    if (!(u->cap >= 0.0 && u->cap < (kd - 1.0) / kd)) {
      throw Error(ErrorKind::kDomain, "non-uniform cap must lie in [0, (k-1)/k)");
    }
    if (!std::isfinite(u->slope) || !std::isfinite(u->offset)) {
      throw Error(ErrorKind::kDomain, "non-uniform parameters must be finite");
    }
  }
}

/// The single transition matrix of a class-dependent channel.
inline NoiseMatrix transition_matrix(const NoiseModel& model, std::size_t k) {
  validate(model, k);
  if (const auto* s = std::get_if<SymmetricNoise>(&model)) {
    const Vector etas(k, s->eta);
    return detail::uniform_flip_matrix(etas);
  }
  if (const auto* c = std::get_if<SimpleClassConditionalNoise>(&model)) {
    return detail::uniform_flip_matrix(c->eta_per_class);
  }
  if (const auto* m = std::get_if<ClassConditionalNoise>(&model)) return m->matrix;
  throw Error(ErrorKind::kUnsupported,
              "simple non-uniform noise depends on x and has no single transition matrix");
}

/// Transition matrix in effect at point x (any variant). Validate the model first.
inline NoiseMatrix transition_matrix_at(const NoiseModel& model, std::span<const double> x,
                                        std::size_t k) {
  if (const auto* u = std::get_if<SimpleNonUniformNoise>(&model)) {
    const Vector etas(k, u->rate(x));
    return detail::uniform_flip_matrix(etas);
  }
  return transition_matrix(model, k);
}

/// Independently resamples every label through the channel. Returns a new vector.
/// `features` is only read for simple non-uniform noise.
inline Labels corrupt_labels(const Labels& labels, const NoiseModel& model, std::size_t k, Rng& rng,
                             const Matrix* features = nullptr) {
  validate(model, k);
  Labels out(labels.size());
  if (is_class_dependent(model)) {
    const NoiseMatrix t = transition_matrix(model, k);
    for (std::size_t n = 0; n < labels.size(); ++n) {
      detail::check_label(labels[n], k);
      out[n] = rng.categorical(t.row(labels[n]));
    }
    return out;
  }
  if (features == nullptr || features->rows() != labels.size()) {
    throw Error(ErrorKind::kInvalidInput, "non-uniform noise needs one feature row per label");
  }
  for (std::size_t n = 0; n < labels.size(); ++n) {
    detail::check_label(labels[n], k);
    const NoiseMatrix t = transition_matrix_at(model, features->row(n), k);
    out[n] = rng.categorical(t.row(labels[n]));
  }
  return out;
}

/// Random row-stochastic, diagonally dominant matrix.
///
/// Row i: eta_i ~ U[0, row_noise_max]; the flipped mass eta_i is split over the
/// k - 1 wrong labels by a uniform point of the simplex. The split (not eta_i)
/// is redrawn until the diagonal exceeds every off-diagonal entry.
inline NoiseMatrix random_diag_dominant(std::size_t k, double row_noise_max, Rng& rng) {
  if (k < 2) throw Error(ErrorKind::kInvalidInput, "need k >= 2");
  const double kd = static_cast<double>(k);
  if (!(row_noise_max >= 0.0 && row_noise_max < (kd - 1.0) / kd)) {
    throw Error(ErrorKind::kDomain, "row_noise_max must lie in [0, (k-1)/k)");
  }
  NoiseMatrix m{Matrix(k, k, 0.0)};
  std::vector<double> split(k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const double eta = rng.uniform(0.0, row_noise_max);
    while (true) {
      double total = 0.0;
      for (double& s : split) {
        s = -std::log(1.0 - rng.uniform());
        total += s;
      }
      double off_sum = 0.0;
      double off_max = 0.0;
      std::size_t slot = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == i) continue;
        const double v = eta * split[slot++] / total;
        m.entries(i, j) = v;
        off_sum += v;
        off_max = std::max(off_max, v);
      }
      m.entries(i, i) = 1.0 - off_sum;
      if (m.entries(i, i) > off_max) break;
    }
  }
  return m;
}

/// Exact image of a finite distribution under the channel; the x-marginal is kept.
inline FiniteDistribution corrupt_distribution(const FiniteDistribution& dist,
                                               const NoiseModel& model) {
  dist.validate();
  const std::size_t k = dist.k;
  validate(model, k);
  FiniteDistribution out = dist;
  for (std::size_t m = 0; m < dist.size(); ++m) {
    const NoiseMatrix t = transition_matrix_at(model, dist.support.row(m), k);
    for (std::size_t j = 0; j < k; ++j) {
      double p = 0.0;
      for (std::size_t i = 0; i < k; ++i) p += dist.conditionals(m, i) * t(i, j);
      out.conditionals(m, j) = p;
    }
  }
  return out;
}

/// Text form: k on the first line, then k rows of k space-separated decimals.
inline std::string to_text(const NoiseMatrix& m) {
  std::string out = std::to_string(m.k()) + "\n";
  for (std::size_t i = 0; i < m.k(); ++i) {
    for (std::size_t j = 0; j < m.k(); ++j) {
      if (j) out += ' ';
      out += text::format_real(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline NoiseMatrix noise_matrix_from_text(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(0, "empty noise matrix file");
  const auto k = text::parse_int(line);
  if (!k || *k < 2) throw ParseError(line_no, "first line must be k >= 2");
  const auto kk = static_cast<std::size_t>(*k);
  NoiseMatrix m{Matrix(kk, kk, 0.0)};
  for (std::size_t i = 0; i < kk; ++i) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(kk) + " rows");
    std::istringstream cells(line);
    std::string token;
    std::size_t j = 0;
    while (cells >> token) {
      const auto v = text::parse_real(token);
      if (!v) throw ParseError(line_no, "bad entry '" + token + "'");
      if (j >= kk) throw ParseError(line_no, "too many entries in row");
      m.entries(i, j++) = *v;
    }
    if (j != kk) throw ParseError(line_no, "expected " + std::to_string(kk) + " entries");
  }
  if (next_line()) throw ParseError(line_no, "trailing content after matrix");
  m.validate();
  return m;
}

inline void save_noise_matrix(const NoiseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_text(m);
}

inline NoiseMatrix load_noise_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return noise_matrix_from_text(buf.str());
}

}  // namespace symloss
