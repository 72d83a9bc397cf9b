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

// Losses over softmax outputs u: categorical cross entropy, mean absolute
// error, mean squared error and the 0-1 loss.
//
//   CCE(u, j)     = log(1 / u_j)
//   MAE(u, j)     = ||e_j - u||_1   = 2 - 2 u_j
//   MSE(u, j)     = ||e_j - u||_2^2 = ||u||^2 + 1 - 2 u_j
//   ZeroOne(u, j) = [argmax(u) != j]
//
// MAE and ZeroOne are symmetric: their sum over all k labels does not depend
// on u (2k - 2 and k - 1 respectively).

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/error.hpp"
#include "symloss/text.hpp"

namespace symloss {

enum class LossKind { kCce, kMae, kMse, kZeroOne };

inline constexpr LossKind kAllLosses[] = {LossKind::kCce, LossKind::kMae, LossKind::kMse,
                                          LossKind::kZeroOne};

/// Lower clamp applied to u_j before taking the CCE log.
inline constexpr double kCceClamp = 1e-12;

inline std::string_view name(LossKind kind) {
  switch (kind) {
    case LossKind::kCce: return "CCE";
    case LossKind::kMae: return "MAE";
    case LossKind::kMse: return "MSE";
    case LossKind::kZeroOne: return "ZeroOne";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view token) {
  const std::string t = text::to_lower(text::trim(token));
  if (t == "cce" || t == "ce" || t == "crossentropy") return LossKind::kCce;
  if (t == "mae") return LossKind::kMae;
  if (t == "mse") return LossKind::kMse;
  if (t == "zeroone" || t == "zero-one" || t == "01" || t == "0-1") return LossKind::kZeroOne;
  throw Error(ErrorKind::kInvalidInput, "unknown loss '" + std::string(token) + "'");
}

inline bool is_differentiable(LossKind kind) { return kind != LossKind::kZeroOne; }

/// The constant C with sum_i L(u, i) = C for every u, when one exists.
struct SymmetryConstant {
  LossKind kind;
  std::size_t k;
  std::optional<double> value;
};

inline SymmetryConstant symmetry_constant(LossKind kind, std::size_t k) {
  const double kd = static_cast<double>(k);
  switch (kind) {
    case LossKind::kMae: return {kind, k, 2.0 * kd - 2.0};
    case LossKind::kZeroOne: return {kind, k, kd - 1.0};
    default: return {kind, k, std::nullopt};
  }
}

inline bool is_symmetric(LossKind kind) { return symmetry_constant(kind, 2).value.has_value(); }

/// Loss of softmax output u against label j, without validating u.
template <std::floating_point T>
T loss_value_unchecked(LossKind kind, std::span<const T> u, std::size_t j) {
  detail::check_label(j, u.size());
  switch (kind) {
    case LossKind::kCce: return -std::log(std::max(u[j], static_cast<T>(kCceClamp)));
    case LossKind::kMae: return T(2) - T(2) * u[j];
    case LossKind::kMse: {
      T sq = 0;
      for (T v : u) sq += v * v;
      return sq + T(1) - T(2) * u[j];
    }
    case LossKind::kZeroOne: return argmax_tiebreak<T>(u) == j ? T(0) : T(1);
  }
  return T(0);
}

inline double loss_value(LossKind kind, const ProbVector& u, std::size_t j) {
  return loss_value_unchecked<double>(kind, u.values(), j);
}

/// Sum of the loss over all k labels.
inline double class_sum(LossKind kind, const ProbVector& u) {
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) total += loss_value(kind, u, i);
  return total;
}

/// Gradient of L(softmax(z), j) with respect to the logits z, written into out.
/// u must be softmax(z). The CCE clamp affects the value only; the gradient
/// is always u - e_j.
template <std::floating_point T>
void loss_grad_logits_into(LossKind kind, std::span<const T> u, std::size_t j, std::span<T> out) {
  if (kind == LossKind::kZeroOne) {
    throw Error(ErrorKind::kUnsupportedGradient, "ZeroOne loss has no logit gradient");
  }
  const std::size_t k = u.size();
  detail::check_label(j, k);
  switch (kind) {
    case LossKind::kCce:
      for (std::size_t m = 0; m < k; ++m) out[m] = u[m];
      out[j] -= T(1);
      return;
    case LossKind::kMae:
      // dL/dz_m = -2 u_j (delta_jm - u_m)
      for (std::size_t m = 0; m < k; ++m) out[m] = T(2) * u[j] * u[m];
      out[j] -= T(2) * u[j];
      return;
    case LossKind::kMse: {
      // dL/du_i = 2 (u_i - delta_ij), chained through J_im = u_i (delta_im - u_m).
      for (std::size_t m = 0; m < k; ++m) {
        T acc = 0;
        for (std::size_t i = 0; i < k; ++i) {
          const T dl_du = T(2) * (u[i] - (i == j ? T(1) : T(0)));
          const T jac = u[i] * ((i == m ? T(1) : T(0)) - u[m]);
          acc += dl_du * jac;
        }
        out[m] = acc;
      }
      return;
    }
    case LossKind::kZeroOne:
      return;
  }
}

inline Vector loss_grad_logits(LossKind kind, const ProbVector& u, std::size_t j) {
  Vector out(u.size());
  loss_grad_logits_into<double>(kind, u.values(), j, out);
  return out;
}

}  // namespace symloss
