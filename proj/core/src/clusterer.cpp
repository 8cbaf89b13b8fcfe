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

#include "sigmaquant/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sigmaquant {

namespace {

void recenter(std::span<const double> features,
              const std::vector<std::size_t>& assignment,
              std::vector<double>& centroids) {
  std::vector<double> sum(centroids.size(), 0.0);
  std::vector<std::size_t> count(centroids.size(), 0);
  for (std::size_t i = 0; i < features.size(); ++i) {
    sum[assignment[i]] += features[i];
    ++count[assignment[i]];
  }
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    if (count[j] > 0) centroids[j] = sum[j] / static_cast<double>(count[j]);
  }
}

ClusterAssignment lloyd(std::span<const double> features,
                        std::vector<double> centroids, double lambda) {
  const std::size_t n = features.size();
  const std::size_t k = centroids.size();
  ClusterAssignment out;
  out.lambda = lambda;
  out.centroids = std::move(centroids);

  const double ideal = static_cast<double>(n) / static_cast<double>(k);
  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  out.assignment.assign(n, kUnassigned);
  std::vector<std::size_t> sizes(k, 0);

  for (out.rounds = 1; out.rounds <= kMaxKmeansRounds; ++out.rounds) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t from = out.assignment[i];
      if (from != kUnassigned) --sizes[from];
      std::size_t best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = features[i] - out.centroids[j];
        const double grown = static_cast<double>(sizes[j]) + 1.0 - ideal;
        const double now = static_cast<double>(sizes[j]) - ideal;
        const double cost = d * d + lambda * (grown * grown - now * now);
        if (cost < best_cost) {
          best_cost = cost;
          best = j;
        }
      }
      ++sizes[best];
      if (best != from) {
        out.assignment[i] = best;
        changed = true;
      }
    }
    recenter(features, out.assignment, out.centroids);
    if (!changed) break;
  }
  out.rounds = std::min(out.rounds, kMaxKmeansRounds);
  out.objective =
      cluster_objective(features, out.assignment, out.centroids, lambda);
  return out;
}

/// Centroids of the least-squares partition of the sorted features into k
/// contiguous runs (the exact unpenalized 1-D optimum), by dynamic
/// programming over prefix sums.
std::vector<double> segment_means(const std::vector<double>& sorted,
                                  std::size_t k) {
  const std::size_t n = sorted.size();
  const double shift = sorted[n / 2];
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sorted[i] - shift;
    s1[i + 1] = s1[i] + x;
    s2[i + 1] = s2[i] + x * x;
  }
  auto cost = [&](std::size_t a, std::size_t b) {
    const double sum = s1[b] - s1[a];
    return std::max(0.0, (s2[b] - s2[a]) - sum * sum / static_cast<double>(b - a));
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> cut(k + 1, std::vector<std::size_t>(n + 1, 0));
  dp[0][0] = 0.0;
  for (std::size_t c = 1; c <= k; ++c) {
    for (std::size_t b = c; b <= n - (k - c); ++b) {
      for (std::size_t a = c - 1; a < b; ++a) {
        if (dp[c - 1][a] == kInf) continue;
        const double v = dp[c - 1][a] + cost(a, b);
        if (v < dp[c][b]) {
          dp[c][b] = v;
          cut[c][b] = a;
        }
      }
    }
  }
  std::vector<double> means(k);
  std::size_t b = n;
  for (std::size_t c = k; c >= 1; --c) {
    const std::size_t a = cut[c][b];
    means[c - 1] = shift + (s1[b] - s1[a]) / static_cast<double>(b - a);
    b = a;
  }
  return means;
}

}  // namespace

std::vector<std::size_t> ClusterAssignment::sizes() const {
  std::vector<std::size_t> out(centroids.size(), 0);
  for (std::size_t c : assignment) ++out[c];
  return out;
}

double cluster_objective(std::span<const double> features,
                         std::span<const std::size_t> assignment,
                         std::span<const double> centroids, double lambda) {
  if (features.size() != assignment.size()) {
    throw Error("cluster_objective: one assignment per feature required");
  }
  const std::size_t k = centroids.size();
  std::vector<std::size_t> sizes(k, 0);
  double distortion = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (assignment[i] >= k) throw Error("cluster_objective: bad cluster id");
    const double d = features[i] - centroids[assignment[i]];
    distortion += d * d;
    ++sizes[assignment[i]];
  }
  const double ideal =
      static_cast<double>(features.size()) / static_cast<double>(k);
  double penalty = 0.0;
  for (std::size_t s : sizes) {
    const double dev = static_cast<double>(s) - ideal;
    penalty += dev * dev;
  }
  return distortion + lambda * penalty;
}

ClusterAssignment adaptive_kmeans(std::span<const double> features,
                                  std::size_t k, double lambda,
                                  std::uint64_t /*seed*/) {
  const std::size_t n = features.size();
  if (k == 0) throw Error("adaptive_kmeans: K must be positive");
  if (k > n) {
    throw Error("adaptive_kmeans: K = " + std::to_string(k) + " exceeds N = " +
                std::to_string(n));
  }
  if (!(lambda >= 0.0)) throw Error("adaptive_kmeans: lambda must be >= 0");
  for (double x : features) {
    if (!std::isfinite(x)) throw Error("adaptive_kmeans: non-finite feature");
  }

  std::vector<double> sorted(features.begin(), features.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> quantiles(k);
  for (std::size_t j = 0; j < k; ++j) {
    quantiles[j] = sorted[(2 * j + 1) * n / (2 * k)];
  }
  ClusterAssignment best = lloyd(features, std::move(quantiles), lambda);
  ClusterAssignment alt = lloyd(features, segment_means(sorted, k), lambda);
  if (alt.objective < best.objective) best = std::move(alt);
  return best;
}

std::vector<int> cluster_bitwidths(const ClusterAssignment& clusters,
                                   std::span<const int> bitset) {
  if (bitset.size() != clusters.k()) {
    throw Error("bit set size must equal the cluster count");
  }
  if (!std::is_sorted(bitset.begin(), bitset.end())) {
    throw Error("bit set must be ascending");
  }
  const std::vector<std::size_t> sizes = clusters.sizes();
  std::vector<double> distinct;
  for (std::size_t j = 0; j < clusters.k(); ++j) {
    if (sizes[j] > 0) distinct.push_back(clusters.centroids[j]);
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const std::size_t offset = bitset.size() - distinct.size();

  std::vector<int> bits(clusters.assignment.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const double mu = clusters.centroids[clusters.assignment[i]];
    const auto rank = static_cast<std::size_t>(
        std::lower_bound(distinct.begin(), distinct.end(), mu) -
        distinct.begin());
    bits[i] = bitset[offset + rank];
  }
  return bits;
}

BitPlan assign_bitwidths(const ClusterAssignment& clusters, const BitPlan& base,
                         std::span<const int> bitset) {
  if (base.layers.size() != clusters.assignment.size()) {
    throw Error("one clustered feature per plan layer required");
  }
  const std::vector<int> bits = cluster_bitwidths(clusters, bitset);
  BitPlan plan = base.bits_only();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    require_allowed_bits(bits[i]);
    plan.layers[i].bits_w = bits[i];
  }
  return plan;
}

}  // namespace sigmaquant
