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

#include "symloss/risk.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "symloss/instances.hpp"

namespace symloss {
namespace {

int oracle_kind(LossKind k) { return static_cast<int>(k); }

/// Risk by direct summation with the long double oracles.
double brute_risk(LossKind kind, const LinearClassifier& f, const FiniteDistribution& d) {
  oracle::Real total = 0;
  for (std::size_t m = 0; m < d.size(); ++m) {
    const auto x = d.support.row(m);
    std::vector<oracle::Real> z(d.k);
    for (std::size_t c = 0; c < d.k; ++c) {
      z[c] = f.bias[c];
      for (std::size_t i = 0; i < x.size(); ++i) z[c] += x[i] * f.weights(i, c);
    }
    const auto u = oracle::softmax(z);
    for (std::size_t j = 0; j < d.k; ++j) {
      total += d.mass[m] * d.conditionals(m, j) * oracle::loss(oracle_kind(kind), u, j);
    }
  }
  return static_cast<double>(total);
}

LinearClassifier constant_classifier(std::size_t d, std::size_t k) {
  return LinearClassifier{Matrix(d, k, 0.0), Vector(k, 0.0)};
}

TEST(ExactRisk, MatchesBruteForce) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(4);
    const auto inst = random_instance(k, 2, 10, 3, rng);
    for (const auto& f : inst.members) {
      for (LossKind kind : {LossKind::kCce, LossKind::kMae, LossKind::kMse}) {
        EXPECT_NEAR(exact_risk(kind, f, inst.dist), brute_risk(kind, f, inst.dist), 1e-12);
      }
    }
  }
}

TEST(ExactRisk, Examples) {
  Rng rng(42);
  const auto inst = separable_instance(3, 5, rng);
  // The saturated member is somewhere in the family and has zero MAE risk.
  double best = 1e9;
  for (const auto& f : inst.members) best = std::min(best, exact_risk(LossKind::kMae, f, inst.dist));
  EXPECT_EQ(best, 0.0);

  const auto d = random_finite_distribution(3, 2, 7, rng);
  EXPECT_NEAR(exact_risk(LossKind::kMae, constant_classifier(2, 3), d), 4.0 / 3.0, 1e-15);
}

TEST(ExactRisk, DimensionMismatch) {
  Rng rng(43);
  const auto d = random_finite_distribution(3, 2, 5, rng);
  try {
    exact_risk(LossKind::kMae, constant_classifier(4, 3), d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(ExactNoisyRisk, ZeroNoiseIsCleanRisk) {
  Rng rng(44);
  const auto inst = random_instance(3, 2, 10, 5, rng);
  for (const auto& f : inst.members) {
    for (LossKind kind : kAllLosses) {
      EXPECT_EQ(exact_noisy_risk(kind, f, inst.dist, SymmetricNoise{0.0}), exact_risk(kind, f, inst.dist));
    }
  }
}

TEST(ExactNoisyRisk, AffineIdentityForSymmetricLosses) {
  Rng rng(45);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + trial % 3;
    const double kd = static_cast<double>(k);
    const auto inst = random_instance(k, 2, 5 + rng.uniform_index(20), 5, rng);
    for (double eta : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
      if (!(eta < (kd - 1) / kd)) continue;
      for (const auto& f : inst.members) {
        for (LossKind kind : {LossKind::kMae, LossKind::kZeroOne}) {
          const double c = *symmetry_constant(kind, k).value;
          const double r = exact_risk(kind, f, inst.dist);
          EXPECT_NEAR(exact_noisy_risk(kind, f, inst.dist, SymmetricNoise{eta}),
                      affine_predicted_risk(r, eta, k, c), 1e-12);
        }
      }
    }
  }
}

TEST(AffinePredictedRisk, Examples) {
  EXPECT_EQ(affine_predicted_risk(0.37, 0.0, 3, 4.0), 0.37);
  EXPECT_NEAR(affine_predicted_risk(1.0, 0.3, 3, 4.0), 1.15, 1e-15);
  const double near_limit = 2.0 / 3.0 - 1e-9;
  EXPECT_NEAR(affine_predicted_risk(0.1, near_limit, 3, 4.0), 4.0 / 3.0, 1e-6);
  EXPECT_NEAR(affine_predicted_risk(1.7, near_limit, 3, 4.0), 4.0 / 3.0, 1e-6);
  try {
    affine_predicted_risk(1.0, 1.0, 3, 4.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDomain);
  }
  EXPECT_THROW(affine_predicted_risk(1.0, -0.1, 3, 4.0), Error);
}

TEST(AffinePredictedRisk, OrderPreservedPairwise) {
  Rng rng(46);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + trial % 3;
    const double kd = static_cast<double>(k);
    const auto inst = random_instance(k, 2, 12, 10, rng);
    const double e1 = rng.uniform(0.0, (kd - 1) / kd * 0.5);
    const double e2 = rng.uniform(e1, (kd - 1) / kd * 0.99);
    for (LossKind kind : {LossKind::kMae, LossKind::kZeroOne}) {
      std::vector<double> r0, r1, r2;
      for (const auto& f : inst.members) {
        r0.push_back(exact_risk(kind, f, inst.dist));
        r1.push_back(exact_noisy_risk(kind, f, inst.dist, SymmetricNoise{e1}));
        r2.push_back(exact_noisy_risk(kind, f, inst.dist, SymmetricNoise{e2}));
      }
      for (std::size_t a = 0; a < r0.size(); ++a) {
        for (std::size_t b = 0; b < r0.size(); ++b) {
          if (r0[a] < r0[b] - 1e-9) {
            EXPECT_LT(r1[a], r1[b]);
            EXPECT_LT(r2[a], r2[b]);
          }
        }
      }
    }
  }
}

TEST(Theorem2Bound, Examples) {
  EXPECT_EQ(theorem2_bound(0.0, 0.3, 3), 0.0);
  EXPECT_NEAR(theorem2_bound(0.1, 0.3, 3), 0.1 / 0.55, 1e-15);
  EXPECT_EQ(theorem2_bound(0.25, 0.0, 4), 0.25);
  EXPECT_THROW(theorem2_bound(0.1, 2.0 / 3.0, 3), Error);
  EXPECT_THROW(theorem2_bound(0.1, -0.1, 3), Error);
}

TEST(BestInFamily, ZeroRiskMemberIsFound) {
  Rng rng(47);
  const auto inst = separable_instance(3, 10, rng);
  const std::size_t best = best_in_family(LossKind::kMae, inst.family(), inst.dist);
  EXPECT_EQ(exact_risk(LossKind::kMae, inst.members[best], inst.dist), 0.0);
}

TEST(BestInFamily, SymmetricNoiseKeepsArgminForMae) {
  Rng rng(48);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(3, 2, 15, 50, rng);
    const ClassifierFamily fam = inst.family();
    // Enumeration oracle: the argmin of the clean risks.
    std::size_t oracle_best = 0;
    double oracle_min = 1e300;
    for (std::size_t i = 0; i < inst.members.size(); ++i) {
      const double r = brute_risk(LossKind::kMae, inst.members[i], inst.dist);
      if (r < oracle_min) {
        oracle_min = r;
        oracle_best = i;
      }
    }
    EXPECT_EQ(best_in_family(LossKind::kMae, fam, inst.dist), oracle_best);
    EXPECT_EQ(best_in_family(LossKind::kMae, fam, inst.dist, NoiseModel{SymmetricNoise{0.5}}), oracle_best);
  }
}

TEST(BestInFamily, TiesPickTheLowestIndex) {
  const std::vector<double> v{0.3, 0.1, 0.1 + 1e-14, 0.2};
  EXPECT_EQ(argmin_with_ties(v), 1u);
  const std::vector<double> w{0.1 + 1e-14, 0.1};
  EXPECT_EQ(argmin_with_ties(w), 0u);
  EXPECT_THROW(argmin_with_ties(std::vector<double>{}), Error);
}

TEST(BestInFamily, StoredCrossEntropyCounterexample) {
  const LinearInstance inst = load_instance(std::string(SYMLOSS_FIXTURE_DIR) + "/cce_counterexample.txt");
  ASSERT_TRUE(inst.symmetric_eta.has_value());
  const ClassifierFamily fam = inst.family();
  const NoiseModel noise = SymmetricNoise{*inst.symmetric_eta};
  const std::size_t clean = best_in_family(LossKind::kCce, fam, inst.dist);
  const std::size_t noisy = best_in_family(LossKind::kCce, fam, inst.dist, noise);
  EXPECT_NE(clean, noisy);
  EXPECT_GT(exact_risk(LossKind::kCce, inst.members[noisy], inst.dist),
            exact_risk(LossKind::kCce, inst.members[clean], inst.dist) + 1e-10);
  // The symmetric losses keep their minimizer on the same instance.
  for (LossKind kind : {LossKind::kMae, LossKind::kZeroOne}) {
    const TheoremReport r = verify_theorem(1, kind, fam, inst.dist, noise);
    EXPECT_TRUE(r.pass) << r.to_line();
  }
}

TEST(VerifyTheorem, Theorem1OnSeparableBlobs) {
  Rng rng(49);
  const auto inst = separable_instance(3, 20, rng);
  const TheoremReport r = verify_theorem(1, LossKind::kMae, inst.family(), inst.dist, SymmetricNoise{0.6});
  EXPECT_EQ(r.status, CheckStatus::kChecked);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.argmin_clean, r.argmin_noisy);
  EXPECT_NE(r.to_line().find("theorem=1 loss=MAE pass=true"), std::string::npos);
}

TEST(VerifyTheorem, Theorem2BoundOnNonSeparableData) {
  Rng rng(50);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = random_instance(3, 2, 15, 10, rng);
    const SimpleNonUniformNoise noise{rng.normal(), rng.normal(), 0.3, 0};
    const TheoremReport r = verify_theorem(2, LossKind::kMae, inst.family(), inst.dist, noise);
    ASSERT_EQ(r.status, CheckStatus::kChecked);
    ASSERT_GT(r.rho, 0.0);
    EXPECT_TRUE(r.pass) << r.to_line();
    EXPECT_LE(r.noisy_minimizer_clean_risk, r.bound + 1e-10);
    EXPECT_LE(r.eta_max, 0.3);
    ++checked;
  }
  EXPECT_EQ(checked, 30);
}

TEST(VerifyTheorem, Theorem3OnSeparableData) {
  Rng rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = separable_instance(2 + trial % 3, 10, rng);
    const NoiseModel noise = ClassConditionalNoise{random_diag_dominant(inst.dist.k, 0.45, rng)};
    for (LossKind kind : {LossKind::kMae, LossKind::kZeroOne}) {
      const TheoremReport r = verify_theorem(3, kind, inst.family(), inst.dist, noise);
      ASSERT_EQ(r.status, CheckStatus::kChecked) << r.to_line();
      EXPECT_TRUE(r.pass);
      EXPECT_EQ(r.noisy_minimizer_clean_risk, 0.0);
    }
  }
}

TEST(VerifyTheorem, NotApplicableAndSkipped) {
  Rng rng(52);
  const auto inst = random_instance(3, 2, 10, 5, rng);
  const auto fam = inst.family();
  const TheoremReport cce = verify_theorem(1, LossKind::kCce, fam, inst.dist, SymmetricNoise{0.3});
  EXPECT_EQ(cce.status, CheckStatus::kNotApplicable);
  EXPECT_NE(cce.to_line().find("pass=na"), std::string::npos);
  EXPECT_EQ(verify_theorem(1, LossKind::kMse, fam, inst.dist, SymmetricNoise{0.3}).status,
            CheckStatus::kNotApplicable);
  // eta at or above (k-1)/k breaks the premise.
  EXPECT_EQ(verify_theorem(1, LossKind::kMae, fam, inst.dist, SymmetricNoise{0.7}).status,
            CheckStatus::kSkipped);
  EXPECT_EQ(verify_theorem(2, LossKind::kMae, fam, inst.dist, SymmetricNoise{0.3}).status,
            CheckStatus::kSkipped);
  // rho > 0 under theorem 3.
  const TheoremReport t3 = verify_theorem(3, LossKind::kMae, fam, inst.dist,
                                          ClassConditionalNoise{random_diag_dominant(3, 0.3, rng)});
  EXPECT_EQ(t3.status, CheckStatus::kSkipped);
  // A matrix that is not diagonally dominant.
  NoiseMatrix bad{Matrix(3, 3, 0.0)};
  bad.entries(0, 0) = 0.3;
  bad.entries(0, 1) = 0.7;
  bad.entries(1, 1) = 1.0;
  bad.entries(2, 2) = 1.0;
  EXPECT_EQ(verify_theorem(3, LossKind::kMae, fam, inst.dist, ClassConditionalNoise{bad}).status,
            CheckStatus::kSkipped);
  EXPECT_THROW(verify_theorem(4, LossKind::kMae, fam, inst.dist, SymmetricNoise{0.1}), Error);
}

TEST(Calibration, Examples) {
  const CalibrationReport mse = calibration_check(LossKind::kMse, ProbVector::from({0.7, 0.3}), 1000);
  EXPECT_LE(mse.minimizer_distance, 1e-3 + 1e-12);
  EXPECT_TRUE(mse.pass);

  const CalibrationReport uni = calibration_check(LossKind::kMae, ProbVector::uniform(3), 60);
  EXPECT_EQ(uni.mispredicting_points, 0u);
  EXPECT_TRUE(uni.regret_vacuous);
  EXPECT_NE(uni.to_line().find("regret=vacuous"), std::string::npos);

  const CalibrationReport mae = calibration_check(LossKind::kMae, ProbVector::from({0.6, 0.4}), 500);
  EXPECT_GT(mae.mispredicting_points, 0u);
  EXPECT_GT(mae.min_regret_mispredicting, 0.0);
  EXPECT_TRUE(mae.pass);
}

TEST(Calibration, RegretPositiveByExhaustiveGrid) {
  // Independent pass over the grid: every u predicting class 1 has higher
  // distance risk than u = p.
  const std::vector<double> p{0.6, 0.4};
  const std::size_t res = 200;
  for (std::size_t a = 0; a <= res; ++a) {
    const double u0 = static_cast<double>(a) / res;
    const double u1 = 1.0 - u0;
    if (!(u1 > u0)) continue;
    EXPECT_GT(std::fabs(p[0] - u0) + std::fabs(p[1] - u1), 0.0);
    EXPECT_GT((p[0] - u0) * (p[0] - u0) + (p[1] - u1) * (p[1] - u1), 0.0);
  }
}

TEST(Calibration, RejectsUnsupportedInputs) {
  EXPECT_THROW(calibration_check(LossKind::kCce, ProbVector::uniform(2), 10), Error);
  EXPECT_THROW(calibration_check(LossKind::kMae, ProbVector::uniform(4), 10), Error);
  EXPECT_THROW(calibration_check(LossKind::kMae, ProbVector::uniform(2), 0), Error);
}

TEST(Instances, TextRoundTrip) {
  Rng rng(53);
  LinearInstance inst = random_instance(3, 2, 6, 4, rng);
  inst.symmetric_eta = 0.5;
  const LinearInstance back = instance_from_text(to_text(inst));
  EXPECT_EQ(back.dist, inst.dist);
  ASSERT_EQ(back.members.size(), inst.members.size());
  for (std::size_t i = 0; i < inst.members.size(); ++i) {
    EXPECT_EQ(back.members[i].weights, inst.members[i].weights);
    EXPECT_EQ(back.members[i].bias, inst.members[i].bias);
  }
  EXPECT_EQ(back.symmetric_eta, inst.symmetric_eta);
  EXPECT_THROW(instance_from_text("symloss-instance 2\n"), ParseError);
}

}  // namespace
}  // namespace symloss
