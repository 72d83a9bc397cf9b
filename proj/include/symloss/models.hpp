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

// Multilayer perceptron with ReLU hidden layers, inverted dropout and a
// softmax head, plus backpropagation of the mean batch loss.
//
// The network is templated on its scalar so a long double copy can serve as
// the finite-difference reference for the double-precision gradients.

#pragma once

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/losses.hpp"
#include "symloss/text.hpp"

namespace symloss {

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden;  // empty: linear-softmax
  std::size_t output = 2;
  std::vector<double> dropout;      // one rate per hidden layer; empty means none
  std::uint64_t init_seed = 0;

  double dropout_rate(std::size_t layer) const {
    return layer < dropout.size() ? dropout[layer] : 0.0;
  }

  bool has_dropout() const {
    for (double r : dropout) {
      if (r > 0.0) return true;
    }
    return false;
  }

  void validate() const {
    if (input_dim < 1) throw Error(ErrorKind::kInvalidInput, "input_dim must be >= 1");
    if (output < 2) throw Error(ErrorKind::kInvalidInput, "output must be >= 2");
    for (std::size_t h : hidden) {
      if (h < 1) throw Error(ErrorKind::kInvalidInput, "hidden sizes must be >= 1");
    }
    if (!dropout.empty() && dropout.size() != hidden.size()) {
      throw Error(ErrorKind::kInvalidInput, "need one dropout rate per hidden layer");
    }
    for (double r : dropout) {
      if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorKind::kInvalidInput, "dropout must lie in [0, 1)");
    }
  }

  bool operator==(const MlpSpec&) const = default;
};

/// out = act(W^T in + b), W stored fan_in x fan_out.
template <std::floating_point T>
struct DenseLayer {
  BasicMatrix<T> weights;
  std::vector<T> bias;

  bool operator==(const DenseLayer&) const = default;
};

enum class Mode { kTrain, kEval };

template <std::floating_point T>
class BasicMlp {
 public:
  BasicMlp() = default;

  /// Glorot-uniform weights in [-s, s], s = sqrt(6 / (fan_in + fan_out)); zero biases.
  static BasicMlp init(const MlpSpec& spec) {
    spec.validate();
    BasicMlp net;
    net.spec_ = spec;
    Rng rng(spec.init_seed);
    std::size_t fan_in = spec.input_dim;
    auto add_layer = [&](std::size_t fan_out) {
      DenseLayer<T> layer{BasicMatrix<T>(fan_in, fan_out), std::vector<T>(fan_out, T(0))};
      const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (T& w : layer.weights.flat()) w = static_cast<T>(rng.uniform(-s, s));
      net.layers_.push_back(std::move(layer));
      fan_in = fan_out;
    };
    for (std::size_t h : spec.hidden) add_layer(h);
    add_layer(spec.output);
    return net;
  }

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t input_dim() const noexcept { return spec_.input_dim; }
  std::size_t output_dim() const noexcept { return spec_.output; }

  std::vector<DenseLayer<T>>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer<T>>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  /// Parameters flattened layer by layer: weights (row-major) then bias.
  std::vector<T> parameters() const {
    std::vector<T> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weights.flat().begin(), l.weights.flat().end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }

  void set_parameters(std::span<const T> values) {
    if (values.size() != parameter_count()) {
      throw Error(ErrorKind::kDimensionMismatch, "parameter count differs");
    }
    std::size_t pos = 0;
    for (auto& l : layers_) {
      for (T& w : l.weights.flat()) w = values[pos++];
      for (T& b : l.bias) b = values[pos++];
    }
  }

  template <std::floating_point U>
  BasicMlp<U> cast() const {
    BasicMlp<U> out;
    out.spec_ = spec_;
    for (const auto& l : layers_) {
      DenseLayer<U> c{BasicMatrix<U>(l.weights.rows(), l.weights.cols()),
                      std::vector<U>(l.bias.size())};
      for (std::size_t i = 0; i < l.weights.size(); ++i) {
        c.weights.flat()[i] = static_cast<U>(l.weights.flat()[i]);
      }
      for (std::size_t i = 0; i < l.bias.size(); ++i) c.bias[i] = static_cast<U>(l.bias[i]);
      out.layers_.push_back(std::move(c));
    }
    return out;
  }

  bool operator==(const BasicMlp&) const = default;

 private:
  template <std::floating_point>
  friend class BasicMlp;

  MlpSpec spec_;
  std::vector<DenseLayer<T>> layers_;
};

using Mlp = BasicMlp<double>;

/// Everything backward() needs from one forward pass.
template <std::floating_point T>
struct ForwardTrace {
  std::vector<std::vector<T>> inputs;       // input to each layer (post-dropout for hidden)
  std::vector<std::vector<T>> pre;          // pre-activation of each hidden layer
  std::vector<std::vector<T>> masks;        // per hidden layer: 0 or 1/(1-r); empty if no dropout
  std::vector<T> logits;
  std::vector<T> probs;
};

/// Forward pass keeping the intermediate values. Train mode with dropout > 0
/// draws masks from rng (required then); eval mode never drops units.
template <std::floating_point T>
ForwardTrace<T> forward_trace(const BasicMlp<T>& model, std::span<const T> x, Mode mode,
                              Rng* rng = nullptr) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "input has dimension " + std::to_string(x.size()) +
                                                   ", model expects " +
                                                   std::to_string(model.input_dim()));
  }
  const auto& layers = model.layers();
  ForwardTrace<T> trace;
  trace.inputs.reserve(layers.size());
  std::vector<T> a(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    std::vector<T> z = layer.bias;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const T ai = a[i];
      if (ai == T(0)) continue;
      const auto w = layer.weights.row(i);
      for (std::size_t j = 0; j < z.size(); ++j) z[j] += ai * w[j];
    }
    trace.inputs.push_back(std::move(a));
    if (l + 1 == layers.size()) {
      trace.logits = std::move(z);
      break;
    }
    a.assign(z.size(), T(0));
    for (std::size_t j = 0; j < z.size(); ++j) a[j] = z[j] > T(0) ? z[j] : T(0);
    const double rate = model.spec().dropout_rate(l);
    std::vector<T> mask;
    if (mode == Mode::kTrain && rate > 0.0) {
      if (rng == nullptr) throw Error(ErrorKind::kInvalidInput, "train-mode dropout needs an Rng");
      const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
      mask.resize(z.size());
      for (std::size_t j = 0; j < z.size(); ++j) {
        mask[j] = rng->uniform() < rate ? T(0) : keep_scale;
        a[j] *= mask[j];
      }
    }
    trace.pre.push_back(std::move(z));
    trace.masks.push_back(std::move(mask));
  }
  if (!all_finite<T>(trace.logits)) throw Error(ErrorKind::kNonFinite, "logits");
  trace.probs.resize(trace.logits.size());
  softmax_into<T>(trace.logits, trace.probs);
  return trace;
}

template <std::floating_point T>
std::vector<T> forward(const BasicMlp<T>& model, std::span<const T> x, Mode mode = Mode::kEval,
                       Rng* rng = nullptr) {
  return forward_trace(model, x, mode, rng).logits;
}

/// Per-layer gradients plus the mean loss of the batch.
template <std::floating_point T>
struct BatchGradient {
  std::vector<DenseLayer<T>> layers;
  T mean_loss = 0;
};

template <std::floating_point T>
std::vector<DenseLayer<T>> zero_gradients(const BasicMlp<T>& model) {
  std::vector<DenseLayer<T>> out;
  for (const auto& l : model.layers()) {
    out.push_back({BasicMatrix<T>(l.weights.rows(), l.weights.cols()),
                   std::vector<T>(l.bias.size(), T(0))});
  }
  return out;
}

/// Gradient of the batch-mean loss given the traces of the paired forward
/// passes (so dropout masks are reused exactly).
template <std::floating_point T>
BatchGradient<T> backward(const BasicMlp<T>& model, LossKind kind,
                          std::span<const ForwardTrace<T>> traces, std::span<const std::size_t> labels) {
  if (!is_differentiable(kind)) {
    throw Error(ErrorKind::kUnsupportedGradient, "cannot backpropagate the ZeroOne loss");
  }
  if (traces.size() != labels.size() || traces.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "need one trace per label and a non-empty batch");
  }
  const auto& layers = model.layers();
  BatchGradient<T> g{zero_gradients(model), T(0)};
  const T inv_batch = T(1) / static_cast<T>(labels.size());
  std::vector<T> delta;
  std::vector<T> prev;
  for (std::size_t n = 0; n < traces.size(); ++n) {
    const auto& tr = traces[n];
    const std::size_t y = labels[n];
    g.mean_loss += loss_value_unchecked<T>(kind, std::span<const T>(tr.probs), y) * inv_batch;
    delta.assign(tr.probs.size(), T(0));
    loss_grad_logits_into<T>(kind, std::span<const T>(tr.probs), y, std::span<T>(delta));
    for (T& v : delta) v *= inv_batch;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& in = tr.inputs[l];
      auto& gl = g.layers[l];
      for (std::size_t i = 0; i < in.size(); ++i) {
        const T ai = in[i];
        if (ai == T(0)) continue;
        auto row = gl.weights.row(i);
        for (std::size_t j = 0; j < delta.size(); ++j) row[j] += ai * delta[j];
      }
      for (std::size_t j = 0; j < delta.size(); ++j) gl.bias[j] += delta[j];
      if (l == 0) break;
      prev.assign(in.size(), T(0));
      const auto& w = layers[l].weights;
      const auto& pre = tr.pre[l - 1];
      const auto& mask = tr.masks[l - 1];
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!(pre[i] > T(0))) continue;
        const auto wr = w.row(i);
        T acc = 0;
        for (std::size_t j = 0; j < delta.size(); ++j) acc += wr[j] * delta[j];
        prev[i] = mask.empty() ? acc : acc * mask[i];
      }
      delta.swap(prev);
    }
  }
  return g;
}

/// Mean loss over rows of `features` in eval mode.
template <std::floating_point T>
T batch_loss(const BasicMlp<T>& model, LossKind kind, const BasicMatrix<T>& features,
             std::span<const std::size_t> labels) {
  T total = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const auto tr = forward_trace(model, features.row(n), Mode::kEval);
    total += loss_value_unchecked<T>(kind, std::span<const T>(tr.probs), labels[n]);
  }
  return total / static_cast<T>(labels.size());
}

/// Fraction of rows whose tie-broken argmax logit equals the label.
inline double accuracy(const Mlp& model, const LabeledDataset& data) {
  std::size_t correct = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto z = forward(model, data.features.row(n));
    if (argmax_tiebreak<double>(z) == data.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

/// Checkpoint text:
///   symloss-mlp 1
///   input_dim <d>
///   hidden <h1> <h2> ...
///   output <k>
///   dropout <r1> <r2> ...
///   init_seed <seed>
///   params <n>
///   <one value per line, 17 significant digits>
inline std::string to_text(const Mlp& model) {
  const auto& spec = model.spec();
  std::ostringstream out;
  out << "symloss-mlp 1\n";
  out << "input_dim " << spec.input_dim << '\n';
  out << "hidden";
  for (std::size_t h : spec.hidden) out << ' ' << h;
  out << "\noutput " << spec.output << '\n';
  out << "dropout";
  for (double r : spec.dropout) out << ' ' << text::format_real(r);
  out << "\ninit_seed " << spec.init_seed << '\n';
  const auto params = model.parameters();
  out << "params " << params.size() << '\n';
  for (double v : params) out << text::format_real(v) << '\n';
  return out.str();
}

inline Mlp mlp_from_text(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  auto expect = [&](const std::string& key) -> std::vector<std::string> {
    if (!std::getline(in, line)) throw ParseError(line_no, "unexpected end of checkpoint");
    ++line_no;
    std::istringstream cells(line);
    std::string head;
    cells >> head;
    if (head != key) throw ParseError(line_no, "expected '" + key + "'");
    std::vector<std::string> rest;
    std::string tok;
    while (cells >> tok) rest.push_back(tok);
    return rest;
  };
  auto to_size = [&](const std::string& tok) {
    const auto v = text::parse_int(tok);
    if (!v || *v < 0) throw ParseError(line_no, "bad integer '" + tok + "'");
    return static_cast<std::size_t>(*v);
  };
  auto one = [&](const std::vector<std::string>& v) {
    if (v.size() != 1) throw ParseError(line_no, "expected one value");
    return v[0];
  };
  const auto version = expect("symloss-mlp");
  if (version.size() != 1 || version[0] != "1") throw ParseError(line_no, "unsupported version");
  MlpSpec spec;
  spec.input_dim = to_size(one(expect("input_dim")));
  for (const auto& t : expect("hidden")) spec.hidden.push_back(to_size(t));
  spec.output = to_size(one(expect("output")));
  for (const auto& t : expect("dropout")) {
    const auto r = text::parse_real(t);
    if (!r) throw ParseError(line_no, "bad dropout '" + t + "'");
    spec.dropout.push_back(*r);
  }
  const auto seed_tok = one(expect("init_seed"));
  {
    std::uint64_t seed = 0;
    const auto [ptr, ec] = std::from_chars(seed_tok.data(), seed_tok.data() + seed_tok.size(), seed);
    if (ec != std::errc{} || ptr != seed_tok.data() + seed_tok.size()) {
      throw ParseError(line_no, "bad init_seed");
    }
    spec.init_seed = seed;
  }
  const std::size_t n = to_size(one(expect("params")));
  Mlp model = Mlp::init(spec);
  if (n != model.parameter_count()) throw ParseError(line_no, "parameter count does not match spec");
  std::vector<double> params;
  params.reserve(n);
  while (params.size() < n && std::getline(in, line)) {
    ++line_no;
    const auto v = text::parse_real(line);
    if (!v) throw ParseError(line_no, "bad parameter '" + line + "'");
    params.push_back(*v);
  }
  if (params.size() != n) throw ParseError(line_no, "checkpoint truncated");
  model.set_parameters(params);
  return model;
}

inline void save_checkpoint(const Mlp& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_text(model);
}

inline Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return mlp_from_text(buf.str());
}

}  // namespace symloss
