// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace vistory {

struct KMeansResult {
  Eigen::MatrixXd centroids;             // k x dim
  std::vector<std::size_t> assignments;  // one per point
  std::size_t iterations = 0;
  double inertia = 0.0;                  // sum of squared distances to the assigned centroid
};

/// Lloyd's algorithm with k-means++ seeding. Points are rows.
///
/// Each iteration repairs empty clusters (the point farthest from its own
/// centroid, taken from a cluster with more than one member, moves to the
/// empty cluster), recomputes means, then reassigns. Stops when no
/// assignment changes or after max_iter iterations. Distance ties go to the
/// lowest centroid index. Throws InsufficientDataError when rows < k.
KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100);

/// Index of the nearest centroid (lowest index on ties).
std::size_t nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& point);

}  // namespace vistory
