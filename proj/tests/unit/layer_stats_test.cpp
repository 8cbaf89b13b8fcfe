/* Copyright 2026 The sigmaquant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <gtest/gtest.h>

#include <cmath>

#include "sigmaquant/bit_plan.hpp"
#include "sigmaquant/layer_stats.hpp"
#include "sigmaquant/random.hpp"

namespace sq = sigmaquant;

namespace {

sq::Tensor gaussian(std::uint64_t seed, sq::Shape dims, double sd = 1.0) {
  sq::Rng rng(seed);
  sq::Tensor t(std::move(dims));
  for (float& v : t.values()) v = static_cast<float>(rng.normal(0.0, sd));
  return t;
}

sq::Histogram two_bin(double a, double b) {
  sq::Histogram h;
  h.edges = {0.0, 0.5, 1.0};
  h.mass = {a, b};
  h.count = 2;
  return h;
}

}  // namespace

TEST(LayerSigma, PopulationConvention) {
  EXPECT_EQ(sq::layer_sigma(sq::Tensor({4}, 3.0f)), 0.0);
  EXPECT_DOUBLE_EQ(sq::layer_sigma(sq::Tensor({2}, std::vector<float>{-1.0f, 1.0f})), 1.0);
}

TEST(LayerSigma, OrderingFollowsScale) {
  // Synthetic layers with the sigma ratios of a typical conv->fc stack.
  const double sds[] = {0.115672, 0.05, 0.03, 0.012, 0.009245};
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 5; ++i) {
    const double s = sq::layer_sigma(gaussian(i + 1, {20000}, sds[i]));
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Histogram, SingleBinCarriesAlmostAllMass) {
  const std::vector<float> samples(100, 0.1f);
  const sq::Histogram h = sq::build_histogram(samples, 8, 0.0, 1.0);
  EXPECT_NEAR(h.mass[0], 1.0, 1e-10);
  double total = 0;
  for (double m : h.mass) total += m;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Histogram, TopEdgeGoesToLastBinAndOutliersClamp) {
  const std::vector<float> samples{1.0f, 5.0f, -3.0f};
  const sq::Histogram h = sq::build_histogram(samples, 4, 0.0, 1.0);
  EXPECT_NEAR(h.mass[3], 2.0 / 3.0, 1e-10);
  EXPECT_NEAR(h.mass[0], 1.0 / 3.0, 1e-10);
}

TEST(Histogram, UniformSamplesSpreadEvenly) {
  sq::Rng rng(13);
  const std::size_t n = 200000, bins = 16;
  std::vector<float> samples(n);
  for (float& v : samples) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  const sq::Histogram h = sq::build_histogram(samples, bins, -2.0, 2.0);
  const double p = 1.0 / bins;
  const double sd = std::sqrt(p * (1 - p) / static_cast<double>(n));
  for (double m : h.mass) EXPECT_NEAR(m, p, 3 * sd);
}

TEST(KlDivergence, FormulaAndIdentity) {
  EXPECT_EQ(sq::kl_divergence(two_bin(0.5, 0.5), two_bin(0.5, 0.5)), 0.0);
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75);
  EXPECT_NEAR(sq::kl_divergence(two_bin(0.5, 0.5), two_bin(0.25, 0.75)), expected, 1e-12);
  EXPECT_NEAR(expected, 0.14384, 1e-5);
}

TEST(KlDivergence, SmoothedEmptyBinIsFinite) {
  const std::vector<float> p_samples{0.1f, 0.9f};
  const std::vector<float> q_samples{0.9f, 0.9f};
  const sq::Histogram p = sq::build_histogram(p_samples, 2, 0.0, 1.0);
  const sq::Histogram q = sq::build_histogram(q_samples, 2, 0.0, 1.0);
  const double kl = sq::kl_divergence(p, q);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_GT(kl, 5.0);
}

TEST(KlDivergence, EdgeMismatchIsError) {
  sq::Histogram q = two_bin(0.5, 0.5);
  q.edges = {0.0, 0.4, 1.0};
  EXPECT_THROW(sq::kl_divergence(two_bin(0.5, 0.5), q), sq::Error);
}

TEST(LayerKl, ZeroWhenAlreadyOnGrid) {
  // Codes -127..127 times a common step: 8-bit quantization is exact.
  std::vector<float> v;
  for (int c = -127; c <= 127; ++c) v.push_back(static_cast<float>(c) * 0.25f);
  const sq::Tensor w({1, v.size()}, v);
  EXPECT_EQ(sq::layer_kl_at_bits(w, 8), 0.0);
}

TEST(LayerKl, LowBitsDistortMoreOnGaussians) {
  int ordered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const sq::Tensor w = gaussian(seed, {40, 250});
    if (sq::layer_kl_at_bits(w, 2) > sq::layer_kl_at_bits(w, 8)) ++ordered;
  }
  EXPECT_GE(ordered, 95);
}

TEST(LayerKl, MaxSchemesIgnoreOverallScale) {
  const sq::Tensor w = gaussian(3, {16, 64});
  sq::Tensor w8 = w;
  for (float& v : w8.values()) v *= 8.0f;
  for (sq::KlScheme scheme : {sq::KlScheme::PerTensorMax, sq::KlScheme::PerChannelMax}) {
    EXPECT_NEAR(sq::layer_kl_at_bits(w, 4, scheme), sq::layer_kl_at_bits(w8, 4, scheme), 1e-12);
  }
}

TEST(LayerKl, StatisticalClipLosesTailsAtEightBits) {
  const sq::Tensor w = gaussian(9, {50000});
  EXPECT_GT(sq::layer_kl_at_bits(w, 8, sq::KlScheme::PerTensorStatistical, 2.0),
            sq::layer_kl_at_bits(w, 8, sq::KlScheme::PerTensorMax));
}

TEST(NormalizedKl, BoundsAndAnchor) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const sq::Tensor w = gaussian(seed, {64, 32});
    EXPECT_EQ(sq::normalized_kl(w, 2), 1.0);
    for (int bits : sq::kAllowedBits) {
      const double v = sq::normalized_kl(w, bits);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const double at8 = sq::normalized_kl(w, 8);
    EXPECT_GT(at8, 0.0);
    EXPECT_LT(at8, 1.0);
  }
  EXPECT_EQ(sq::normalized_kl(sq::Tensor({4, 4}, 0.3f), 4), 0.0);
  EXPECT_EQ(sq::normalized_kl(sq::Tensor({4, 4}, 0.0f), 2), 0.0);
}

namespace {

sq::ModelGraph twin_model(std::uint64_t seed) {
  sq::ModelGraph m = sq::build_model("twin", {32},
                                     {{sq::LayerKind::Dense, "a", 32},
                                      {sq::LayerKind::Relu},
                                      {sq::LayerKind::Dense, "b", 32}},
                                     seed);
  m.layers[2].weights = m.layers[0].weights;
  return m;
}

}  // namespace

TEST(Sensitivity, AllTwoBitsScoreOne) {
  const sq::ModelGraph m = twin_model(1);
  for (const auto& r : sq::sensitivity_scores(m, sq::BitPlan::uniform(m, 2))) {
    EXPECT_EQ(r.normalized_kl, 1.0);
  }
}

TEST(Sensitivity, LowerBitsTwinScoresHigher) {
  const sq::ModelGraph m = twin_model(2);
  for (int hi_bits : {4, 6, 8}) {
    for (int lo_bits : sq::kAllowedBits) {
      if (lo_bits >= hi_bits) continue;
      sq::BitPlan plan = sq::BitPlan::uniform(m, 8);
      plan.layers[0].bits_w = lo_bits;
      plan.layers[1].bits_w = hi_bits;
      const auto scores = sq::sensitivity_scores(m, plan);
      EXPECT_GE(scores[0].normalized_kl, scores[1].normalized_kl);
      EXPECT_EQ(scores[0].layer, "a");
      EXPECT_EQ(scores[1].layer_index, 2u);
    }
  }
}

TEST(Sensitivity, InvariantUnderPositiveRescaling) {
  sq::ModelGraph m = twin_model(5);
  sq::BitPlan plan = sq::BitPlan::uniform(m, 4);
  plan.layers[1].bits_w = 6;
  const auto before = sq::sensitivity_scores(m, plan);
  for (float& v : m.layers[0].weights->values()) v *= 4.0f;  // exact in binary
  for (float& v : m.layers[2].weights->values()) v *= 0.125f;
  const auto after = sq::sensitivity_scores(m, plan);
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_NEAR(before[i].normalized_kl, after[i].normalized_kl, 1e-12);
  }
}
