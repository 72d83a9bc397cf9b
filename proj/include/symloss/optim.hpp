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

// Mini-batch SGD with heavy-ball momentum and coupled weight decay, training
// history capture, and finite-difference gradient checking.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/losses.hpp"
#include "symloss/models.hpp"
#include "symloss/text.hpp"

namespace symloss {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t shuffle_seed = 0;
  std::size_t eval_every = 1;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw Error(ErrorKind::kInvalidInput, "learning_rate must be >= 0");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw Error(ErrorKind::kInvalidInput, "momentum must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) throw Error(ErrorKind::kInvalidInput, "weight_decay must be >= 0");
    if (batch_size < 1) throw Error(ErrorKind::kInvalidInput, "batch_size must be >= 1");
    if (epochs < 1) throw Error(ErrorKind::kInvalidInput, "epochs must be >= 1");
    if (eval_every < 1) throw Error(ErrorKind::kInvalidInput, "eval_every must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double train_loss = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct RunHistory {
  std::vector<EpochRecord> records;
  std::string checkpoint;  // where the final model was written, if anywhere

  const EpochRecord& last() const { return records.back(); }

  /// `epoch,train_acc,test_acc,train_loss` with one row per recorded epoch.
  std::string to_csv() const {
    std::string out = "epoch,train_acc,test_acc,train_loss\n";
    for (const auto& r : records) {
      out += std::to_string(r.epoch) + "," + text::format_real(r.train_acc) + "," +
             text::format_real(r.test_acc) + "," + text::format_real(r.train_loss) + "\n";
    }
    return out;
  }

  bool operator==(const RunHistory&) const = default;
};

/// Raised when a batch loss or parameter stops being finite.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch)
      : Error(ErrorKind::kNonFinite, "training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Trains in place:
///   v <- momentum * v - lr * (g + weight_decay * theta),  theta <- theta + v
/// The example order is reshuffled every epoch from shuffle_seed; dropout masks
/// come from a separate stream derived from the same seed. Metrics are
/// recorded every eval_every epochs and after the last one.
inline RunHistory train(Mlp& model, const LabeledDataset& train_set, const LabeledDataset& test_set,
                        LossKind kind, const TrainConfig& cfg) {
  cfg.validate();
  train_set.validate();
  test_set.validate();
  if (!is_differentiable(kind)) {
    throw Error(ErrorKind::kUnsupportedGradient, "cannot train with the ZeroOne loss");
  }
  if (train_set.dim() != model.input_dim() || test_set.dim() != model.input_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "dataset dimension differs from model input");
  }
  if (train_set.k != model.output_dim() || test_set.k != model.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "dataset class count differs from model output");
  }

  Rng order_rng(Rng::derive(cfg.shuffle_seed, 0));
  Rng dropout_rng(Rng::derive(cfg.shuffle_seed, 1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<DenseLayer<double>> velocity = zero_gradients(model);
  std::vector<ForwardTrace<double>> traces;
  std::vector<std::size_t> batch_labels;
  RunHistory history;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      traces.clear();
      batch_labels.clear();
      for (std::size_t p = start; p < stop; ++p) {
        const std::size_t n = order[p];
        try {
          traces.push_back(forward_trace(model, train_set.features.row(n), Mode::kTrain, &dropout_rng));
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::kNonFinite) throw TrainingDiverged(epoch, batch_index);
          throw;
        }
        batch_labels.push_back(train_set.labels[n]);
      }
      const auto grad = backward<double>(model, kind, traces, batch_labels);
      if (!std::isfinite(grad.mean_loss)) throw TrainingDiverged(epoch, batch_index);
      loss_sum += grad.mean_loss * static_cast<double>(stop - start);

      auto& layers = model.layers();
      bool finite = true;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto update = [&](std::span<double> theta, std::span<const double> g, std::span<double> v) {
          for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = cfg.momentum * v[i] - cfg.learning_rate * (g[i] + cfg.weight_decay * theta[i]);
            theta[i] += v[i];
            finite = finite && std::isfinite(theta[i]);
          }
        };
        update(layers[l].weights.flat(), grad.layers[l].weights.flat(), velocity[l].weights.flat());
        update(layers[l].bias, grad.layers[l].bias, velocity[l].bias);
      }
      if (!finite) throw TrainingDiverged(epoch, batch_index);
    }
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      try {
        history.records.push_back({epoch, accuracy(model, train_set), accuracy(model, test_set),
                                   loss_sum / static_cast<double>(train_set.size())});
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::kNonFinite) throw TrainingDiverged(epoch, batch_index);
        throw;
      }
    }
  }
  return history;
}

/// Max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
///
/// The analytic gradient is the double-precision backward(); the numeric one
/// is a central difference of the eval-mode batch loss evaluated on a long
/// double copy of the network, which keeps round-off far below the tolerance.
inline double gradient_check(const Mlp& model, LossKind kind, const Matrix& features,
                             std::span<const std::size_t> labels, double step = 1e-6) {
  if (model.spec().has_dropout()) {
    throw Error(ErrorKind::kInvalidInput, "gradient check requires dropout 0");
  }
  if (!is_differentiable(kind)) {
    throw Error(ErrorKind::kUnsupportedGradient, "cannot check the ZeroOne gradient");
  }
  if (features.rows() != labels.size() || labels.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "need one feature row per label");
  }
  std::vector<ForwardTrace<double>> traces;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    traces.push_back(forward_trace(model, features.row(n), Mode::kEval));
  }
  const auto grad = backward<double>(model, kind, traces, labels);
  std::vector<double> analytic;
  for (const auto& l : grad.layers) {
    analytic.insert(analytic.end(), l.weights.flat().begin(), l.weights.flat().end());
    analytic.insert(analytic.end(), l.bias.begin(), l.bias.end());
  }

  using Wide = long double;
  BasicMlp<Wide> wide = model.cast<Wide>();
  BasicMatrix<Wide> wide_x(features.rows(), features.cols());
  for (std::size_t i = 0; i < features.size(); ++i) wide_x.flat()[i] = features.flat()[i];
  std::vector<Wide> params = wide.parameters();
  const Wide h = static_cast<Wide>(step);

  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const Wide saved = params[p];
    params[p] = saved + h;
    wide.set_parameters(params);
    const Wide up = batch_loss(wide, kind, wide_x, labels);
    params[p] = saved - h;
    wide.set_parameters(params);
    const Wide down = batch_loss(wide, kind, wide_x, labels);
    params[p] = saved;
    const double numeric = static_cast<double>((up - down) / (2 * h));
    const double a = analytic[p];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace symloss
