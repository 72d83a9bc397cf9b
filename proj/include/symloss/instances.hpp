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

// Random problem instances for the noise-tolerance checks: finite
// distributions, families of linear classifiers, separable instances with a
// zero-risk member, and a text format to freeze an instance as a fixture.

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "symloss/core_math.hpp"
#include "symloss/data.hpp"
#include "symloss/error.hpp"
#include "symloss/risk.hpp"
#include "symloss/text.hpp"

namespace symloss {

/// A finite distribution and a family of linear classifiers over it.
struct LinearInstance {
  FiniteDistribution dist;
  std::vector<LinearClassifier> members;
  std::optional<double> symmetric_eta;  // noise rate the instance was recorded under

  ClassifierFamily family() const {
    ClassifierFamily fam{dist.dim(), dist.k, {}};
    for (const auto& m : members) fam.members.emplace_back(m);
    return fam;
  }
};

/// Support points ~ N(0, 2^2 I), positive random masses, soft conditionals
/// p(y | x) proportional to exp(2 g_y) with g standard normal.
inline FiniteDistribution random_finite_distribution(std::size_t k, std::size_t d,
                                                     std::size_t support, Rng& rng) {
  FiniteDistribution dist;
  dist.k = k;
  dist.support = Matrix(support, d);
  for (double& x : dist.support.flat()) x = 2.0 * rng.normal();
  dist.mass.resize(support);
  double total = 0.0;
  for (double& m : dist.mass) {
    m = 0.05 + rng.uniform();
    total += m;
  }
  for (double& m : dist.mass) m /= total;
  dist.conditionals = Matrix(support, k);
  for (std::size_t m = 0; m < support; ++m) {
    auto row = dist.conditionals.row(m);
    double z = 0.0;
    for (double& p : row) {
      p = std::exp(2.0 * rng.normal());
      z += p;
    }
    for (double& p : row) p /= z;
  }
  return dist;
}

/// Members with weight scales log-uniform in [0.1, 10], so the family mixes
/// near-uniform and confident predictors.
inline std::vector<LinearClassifier> random_linear_members(std::size_t d, std::size_t k,
                                                           std::size_t count, Rng& rng) {
  std::vector<LinearClassifier> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double scale = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    out.push_back(random_linear(d, k, scale, rng));
  }
  return out;
}

inline LinearInstance random_instance(std::size_t k, std::size_t d, std::size_t support,
                                      std::size_t family_size, Rng& rng) {
  LinearInstance inst;
  inst.dist = random_finite_distribution(k, d, support, rng);
  inst.members = random_linear_members(d, k, family_size, rng);
  return inst;
}

/// Empirical distribution of a small separated-blobs sample, with a saturated
/// nearest-mean member (zero MAE and 0-1 risk) at a random position in the family.
inline LinearInstance separable_instance(std::size_t k, std::size_t family_size, Rng& rng) {
  SyntheticSpec spec;
  spec.kind = BlobKind::kSeparatedBlobs;
  spec.k = k;
  spec.d = 2;
  spec.n_per_class = 3 + rng.uniform_index(6);
  spec.spread = 0.5;
  spec.separation = 1.0;
  const LabeledDataset data = gen_blobs(spec, rng);
  LinearInstance inst;
  inst.dist = to_finite(data);
  inst.members = random_linear_members(spec.d, k, family_size - 1, rng);
  const std::size_t slot = rng.uniform_index(family_size);
  inst.members.insert(inst.members.begin() + static_cast<std::ptrdiff_t>(slot),
                      saturated_nearest_mean(data, blob_means(spec)));
  return inst;
}

/// Text form:
///   symloss-instance 1
///   k <k> d <d> support <M> members <F>
///   symmetric_eta <eta>                      (optional)
///   point <x_1..x_d> <mass> <p_1..p_k>      (M lines)
///   member <W row-major d*k> <b_1..b_k>      (F lines)
inline std::string to_text(const LinearInstance& inst) {
  const auto& dist = inst.dist;
  std::string out = "symloss-instance 1\n";
  out += "k " + std::to_string(dist.k) + " d " + std::to_string(dist.dim()) + " support " +
         std::to_string(dist.size()) + " members " + std::to_string(inst.members.size()) + "\n";
  if (inst.symmetric_eta) out += "symmetric_eta " + text::format_real(*inst.symmetric_eta) + "\n";
  for (std::size_t m = 0; m < dist.size(); ++m) {
    out += "point";
    for (double x : dist.support.row(m)) out += " " + text::format_real(x);
    out += " " + text::format_real(dist.mass[m]);
    for (double p : dist.conditionals.row(m)) out += " " + text::format_real(p);
    out += "\n";
  }
  for (const auto& f : inst.members) {
    out += "member";
    for (double w : f.weights.flat()) out += " " + text::format_real(w);
    for (double b : f.bias) out += " " + text::format_real(b);
    out += "\n";
  }
  return out;
}

inline LinearInstance instance_from_text(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::istringstream {
    while (std::getline(in, line)) {
      ++line_no;
      if (!text::trim(line).empty()) return std::istringstream(line);
    }
    throw ParseError(line_no, "unexpected end of instance");
  };
  auto read_real = [&](std::istringstream& cells) {
    std::string tok;
    if (!(cells >> tok)) throw ParseError(line_no, "missing value");
    const auto v = text::parse_real(tok);
    if (!v) throw ParseError(line_no, "bad value '" + tok + "'");
    return *v;
  };
  {
    auto head = next();
    std::string magic, version;
    head >> magic >> version;
    if (magic != "symloss-instance" || version != "1") throw ParseError(line_no, "not an instance file");
  }
  std::size_t k = 0, d = 0, support = 0, members = 0;
  {
    auto dims = next();
    std::string a, b, c, e;
    if (!(dims >> a >> k >> b >> d >> c >> support >> e >> members) || a != "k" || b != "d" ||
        c != "support" || e != "members") {
      throw ParseError(line_no, "expected 'k <k> d <d> support <M> members <F>'");
    }
  }
  LinearInstance inst;
  inst.dist.k = k;
  inst.dist.support = Matrix(support, d);
  inst.dist.mass.resize(support);
  inst.dist.conditionals = Matrix(support, k);
  for (std::size_t m = 0; m < support; ++m) {
    auto cells = next();
    std::string tag;
    cells >> tag;
    if (m == 0 && tag == "symmetric_eta") {
      inst.symmetric_eta = read_real(cells);
      cells = next();
      cells >> tag;
    }
    if (tag != "point") throw ParseError(line_no, "expected 'point'");
    for (double& x : inst.dist.support.row(m)) x = read_real(cells);
    inst.dist.mass[m] = read_real(cells);
    for (double& p : inst.dist.conditionals.row(m)) p = read_real(cells);
  }
  for (std::size_t i = 0; i < members; ++i) {
    auto cells = next();
    std::string tag;
    cells >> tag;
    if (tag != "member") throw ParseError(line_no, "expected 'member'");
    LinearClassifier f{Matrix(d, k), Vector(k)};
    for (double& w : f.weights.flat()) w = read_real(cells);
    for (double& b : f.bias) b = read_real(cells);
    inst.members.push_back(std::move(f));
  }
  inst.dist.validate();
  return inst;
}

inline void save_instance(const LinearInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << to_text(inst);
}

inline LinearInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_text(buf.str());
}

}  // namespace symloss
