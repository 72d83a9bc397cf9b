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

#include "symloss/data.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "symloss/losses.hpp"
#include "symloss/risk.hpp"

namespace symloss {
namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path, std::ios::binary) << content;
  return path;
}

TEST(GenBlobs, Deterministic) {
  SyntheticSpec spec{BlobKind::kBlobs, 2, 2, 10, 1.0, 1.0, 7};
  EXPECT_EQ(gen_blobs(spec), gen_blobs(spec));
  spec.seed = 8;
  EXPECT_NE(gen_blobs(spec), gen_blobs(SyntheticSpec{BlobKind::kBlobs, 2, 2, 10, 1.0, 1.0, 7}));
}

TEST(GenBlobs, BalancedCounts) {
  const LabeledDataset d = gen_blobs(SyntheticSpec{BlobKind::kBlobs, 3, 2, 100, 1.0, 1.0, 1});
  EXPECT_EQ(d.size(), 300u);
  std::vector<int> counts(3, 0);
  for (auto y : d.labels) ++counts[y];
  for (int c : counts) EXPECT_EQ(c, 100);
}

TEST(GenBlobs, SeparatedBlobsAreNearestMeanSeparable) {
  for (std::size_t d : {2u, 3u, 5u}) {
    const SyntheticSpec spec{BlobKind::kSeparatedBlobs, 3, d, 200, 0.1, 5.0, 3};
    const LabeledDataset data = gen_blobs(spec);
    const Matrix m = class_means(data);
    std::vector<std::vector<double>> means(3, std::vector<double>(d));
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < d; ++i) means[c][i] = m(c, i);
    }
    for (std::size_t n = 0; n < data.size(); ++n) {
      const auto row = data.features.row(n);
      ASSERT_EQ(oracle::nearest(means, {row.begin(), row.end()}), data.labels[n]);
    }
  }
}

TEST(GenBlobs, SeparatedMeansAreFarEnoughApart) {
  for (std::size_t k : {2u, 3u, 5u}) {
    for (std::size_t d : {1u, 2u, 6u}) {
      const SyntheticSpec spec{BlobKind::kSeparatedBlobs, k, d, 1, 0.7, 0.3, 0};
      const Matrix means = blob_means(spec);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
          double d2 = 0.0;
          for (std::size_t i = 0; i < d; ++i) d2 += (means(a, i) - means(b, i)) * (means(a, i) - means(b, i));
          EXPECT_GE(std::sqrt(d2), 6 * 0.7 + 0.3 - 1e-12);
        }
      }
    }
  }
}

TEST(GenBlobs, RejectsBadSpecs) {
  EXPECT_THROW(gen_blobs(SyntheticSpec{BlobKind::kBlobs, 1, 2, 10, 1.0, 1.0, 0}), Error);
  EXPECT_THROW(gen_blobs(SyntheticSpec{BlobKind::kBlobs, 2, 2, 10, 0.0, 1.0, 0}), Error);
  EXPECT_THROW(gen_blobs(SyntheticSpec{BlobKind::kBlobs, 2, 2, 0, 1.0, 1.0, 0}), Error);
}

TEST(ToFinite, Examples) {
  LabeledDataset d;
  d.k = 2;
  d.features = Matrix(4, 1);
  d.labels = {0, 1, 1, 0};
  const FiniteDistribution f = to_finite(d);
  for (double m : f.mass) EXPECT_EQ(m, 0.25);

  LabeledDataset one;
  one.k = 3;
  one.features = Matrix(1, 2, 1.5);
  one.labels = {2};
  const FiniteDistribution g = to_finite(one);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g.conditionals(0, 2), 1.0);
  EXPECT_EQ(g.conditionals(0, 0), 0.0);
}

TEST(ToFinite, PreservesClassFrequencies) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(4);
    LabeledDataset d;
    d.k = k;
    const std::size_t n = 1 + rng.uniform_index(50);
    d.features = Matrix(n, 2);
    for (double& x : d.features.flat()) x = rng.normal();
    for (std::size_t i = 0; i < n; ++i) d.labels.push_back(rng.uniform_index(k));
    const Vector marginal = to_finite(d).class_marginal();
    for (std::size_t c = 0; c < k; ++c) {
      const double freq = static_cast<double>(std::count(d.labels.begin(), d.labels.end(), c)) / n;
      EXPECT_NEAR(marginal[c], freq, 1e-12);
    }
  }
}

TEST(ToFinite, ExactRiskEqualsEmpiricalRisk) {
  Rng rng(32);
  const LabeledDataset d = gen_blobs(SyntheticSpec{BlobKind::kBlobs, 3, 2, 20, 1.0, 1.0, 4});
  const FiniteDistribution f = to_finite(d);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearClassifier c = random_linear(2, 3, 1.0, rng);
    for (LossKind kind : kAllLosses) {
      EXPECT_NEAR(exact_risk(kind, c, f), empirical_risk(kind, c, d), 1e-12);
    }
  }
}

TEST(Csv, RoundTrip) {
  Rng rng(33);
  LabeledDataset d;
  d.k = 4;
  d.features = Matrix(100, 5);
  for (double& x : d.features.flat()) x = rng.normal(0.0, 100.0);
  for (int i = 0; i < 100; ++i) d.labels.push_back(rng.uniform_index(4));
  const auto path = std::filesystem::temp_directory_path() / "symloss_roundtrip.csv";
  save_csv(d, path);
  EXPECT_EQ(load_csv(path, 4), d);
  std::filesystem::remove(path);
}

TEST(Csv, ParseErrorsNameTheLine) {
  struct Case {
    std::string content;
    std::size_t line;
    std::string fragment;
  };
  const std::vector<Case> cases{
      {"", 0, "no header"},
      {"x0,label\n1.0,0\nabc,1\n", 3, "bad feature"},
      {"x0,label\n1.0,0\n2.0,1.5\n", 3, "label"},
      {"x0,label\n1.0,-1\n", 2, "label"},
      {"x0,label\n1.0,0,3\n", 2, "columns"},
      {"x0,y\n1.0,0\n", 1, "label"},
      {"x0,label\n", 1, "no data"},
      {"x0,label\n1.0,5\n", 2, ">= k"},
  };
  for (const auto& c : cases) {
    const auto path = temp_file("symloss_bad.csv", c.content);
    try {
      load_csv(path, 3);
      ADD_FAILURE() << "no error for: " << c.content;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), c.line) << c.content;
      EXPECT_NE(std::string(e.what()).find(c.fragment), std::string::npos) << e.what();
    }
    std::filesystem::remove(path);
  }
}

TEST(Csv, MissingFile) {
  try {
    load_csv("/nonexistent/symloss.csv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/symloss.csv"), std::string::npos);
  }
}

TEST(Csv, InfersK) {
  const auto path = temp_file("symloss_k.csv", "x0,label\n0.5,0\n0.25,3\n");
  EXPECT_EQ(load_csv(path).k, 4u);
  std::filesystem::remove(path);
}

TEST(FiniteDistribution, Validation) {
  FiniteDistribution d;
  d.k = 2;
  d.support = Matrix(2, 1);
  d.mass = {0.5, 0.6};
  d.conditionals = Matrix(2, 2, 0.5);
  EXPECT_THROW(d.validate(), Error);
  d.mass = {0.5, 0.5};
  EXPECT_NO_THROW(d.validate());
  d.conditionals(0, 0) = 0.7;
  EXPECT_THROW(d.validate(), Error);
}

}  // namespace
}  // namespace symloss
