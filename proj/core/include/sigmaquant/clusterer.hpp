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

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sigmaquant/bit_plan.hpp"

namespace sigmaquant {

inline constexpr std::size_t kMaxKmeansRounds = 100;

/// Result of size-penalized 1-D k-means.
///
/// `objective` is the penalized objective evaluated on (assignment,
/// centroids, lambda): within-cluster squared distances plus
/// lambda * sum_j (|C_j| - N/K)^2, empty clusters included.
struct ClusterAssignment {
  std::vector<std::size_t> assignment;  // feature index -> cluster id
  std::vector<double> centroids;        // K entries
  double lambda = 0.0;
  double objective = 0.0;
  std::size_t rounds = 0;

  std::size_t k() const { return centroids.size(); }
  std::vector<std::size_t> sizes() const;
};

/// Penalized k-means objective for an explicit assignment and centroids.
double cluster_objective(std::span<const double> features,
                         std::span<const std::size_t> assignment,
                         std::span<const double> centroids, double lambda);

/// Lloyd-style alternation with a cluster-size penalty.
///
/// Each round visits the points in index order, takes the point out of its
/// cluster, and puts it in the cluster minimizing
/// (x - mu_b)^2 + lambda * ((n_b + 1 - N/K)^2 - (n_b - N/K)^2), where n_b is
/// the current size of b; ties go to the lower cluster id. Centroids of
/// non-empty clusters are then moved to their means. Stops at an assignment
/// fixpoint or after kMaxKmeansRounds rounds.
///
/// The alternation runs from two starts and the lower objective wins (the
/// quantile start on ties): K evenly spaced quantiles of the sorted features,
/// sorted[floor((2j + 1) N / 2K)], and the means of the exact least-squares
/// split of the sorted features into K runs. The second start makes the
/// lambda = 0 result the global k-means optimum.
///
/// Initialization does not draw random numbers, so `seed` does not change the
/// result; it is part of the signature so callers can thread one seed
/// through every stage.
ClusterAssignment adaptive_kmeans(std::span<const double> features,
                                  std::size_t k, double lambda,
                                  std::uint64_t seed = 0);

/// Monotone cluster -> bitwidth map. Non-empty clusters are grouped by
/// centroid value (equal centroids share a group); groups sorted by ascending
/// centroid receive the largest `groups` entries of the ascending `bitset`,
/// smallest first. With K distinct groups this is bitset[0..K) in order.
/// Returns one bitwidth per feature.
std::vector<int> cluster_bitwidths(const ClusterAssignment& clusters,
                                   std::span<const int> bitset);

/// Applies cluster_bitwidths to the weight bits of `base` (one feature per
/// plan layer); calibration state is dropped.
BitPlan assign_bitwidths(const ClusterAssignment& clusters, const BitPlan& base,
                         std::span<const int> bitset);

}  // namespace sigmaquant
