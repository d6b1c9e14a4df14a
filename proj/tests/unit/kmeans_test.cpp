// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <gtest/gtest.h>

#include "vistory/errors.hpp"
#include "vistory/kmeans.hpp"
#include "vistory/random.hpp"

namespace vistory {
namespace {

Eigen::MatrixXd blobs(const std::vector<Eigen::Vector2d>& centres, int per_blob, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd points(static_cast<Eigen::Index>(centres.size()) * per_blob, 2);
  Eigen::Index row = 0;
  for (const auto& c : centres) {
    for (int i = 0; i < per_blob; ++i, ++row) {
      points(row, 0) = c.x() + spread * rng.normal();
      points(row, 1) = c.y() + spread * rng.normal();
    }
  }
  return points;
}

TEST(KMeans, SingleClusterIsTheMean) {
  const auto pts = blobs({{1.0, 2.0}}, 50, 0.5, 1);
  const auto r = kmeans(pts, 1, 0);
  EXPECT_LT((r.centroids.row(0) - pts.colwise().mean()).norm(), 1e-12);
  EXPECT_NEAR(r.inertia, (pts.rowwise() - pts.colwise().mean()).squaredNorm(), 1e-9);
}

TEST(KMeans, RecoversSeparatedBlobs) {
  const std::vector<Eigen::Vector2d> centres{{-10, 0}, {10, 0}, {0, 10}, {0, -10}};
  const auto pts = blobs(centres, 40, 0.3, 2);
  const auto r = kmeans(pts, 4, 7);
  for (int b = 0; b < 4; ++b) {
    std::set<std::size_t> labels;
    for (int i = 0; i < 40; ++i) labels.insert(r.assignments[static_cast<std::size_t>(b * 40 + i)]);
    EXPECT_EQ(labels.size(), 1u) << "blob " << b;
  }
  std::set<std::size_t> all(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(all.size(), 4u);
}

TEST(KMeans, AssignmentsAreNearestCentroids) {
  Rng rng(3);
  Eigen::MatrixXd pts(300, 3);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal();
  const auto r = kmeans(pts, 9, 4);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const auto a = r.assignments[static_cast<std::size_t>(i)];
    EXPECT_EQ(a, nearest_centroid(r.centroids, pts.row(i)));
    // Brute-force check that no other centroid is strictly closer.
    const double own = (pts.row(i) - r.centroids.row(static_cast<Eigen::Index>(a))).squaredNorm();
    for (Eigen::Index c = 0; c < r.centroids.rows(); ++c) {
      ASSERT_GE((pts.row(i) - r.centroids.row(c)).squaredNorm(), own);
    }
    inertia += own;
  }
  EXPECT_NEAR(r.inertia, inertia, 1e-9);
  // At convergence every centroid is the mean of its members.
  for (Eigen::Index c = 0; c < 9; ++c) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(3);
    int n = 0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (r.assignments[static_cast<std::size_t>(i)] == static_cast<std::size_t>(c)) {
        sum += pts.row(i);
        ++n;
      }
    }
    ASSERT_GT(n, 0);
    EXPECT_LT((sum / n - r.centroids.row(c)).norm(), 1e-9);
  }
}

TEST(KMeans, KEqualsRowsGivesSingletons) {
  Eigen::MatrixXd pts(5, 1);
  pts << 0, 1, 2, 3, 4;
  const auto r = kmeans(pts, 5, 1);
  std::set<std::size_t> all(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(all.size(), 5u);
  EXPECT_NEAR(r.inertia, 0.0, 1e-12);
}

TEST(KMeans, DuplicatePointsTerminate) {
  // Fewer distinct points than clusters: one cluster may stay empty.
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(10, 2);
  pts.row(9) << 1.0, 1.0;
  const auto r = kmeans(pts, 3, 5);
  EXPECT_LE(r.iterations, 100u);
  EXPECT_NE(r.assignments[9], r.assignments[0]);
  for (auto a : r.assignments) EXPECT_LT(a, 3u);
  EXPECT_NEAR(r.inertia, 0.0, 1e-12);
}

TEST(KMeans, DeterministicForSeed) {
  const auto pts = blobs({{0, 0}, {3, 3}, {6, 0}}, 30, 1.0, 6);
  const auto a = kmeans(pts, 3, 11);
  const auto b = kmeans(pts, 3, 11);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_TRUE(a.centroids == b.centroids);
}

TEST(KMeans, Errors) {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(3, 2);
  EXPECT_THROW(kmeans(pts, 4, 0), InsufficientDataError);
  EXPECT_THROW(kmeans(pts, 0, 0), ConfigError);
}

TEST(NearestCentroid, TiesGoToLowestIndex) {
  Eigen::MatrixXd c(3, 1);
  c << 1.0, -1.0, 1.0;
  Eigen::RowVectorXd p(1);
  p << 0.0;
  EXPECT_EQ(nearest_centroid(c, p), 0u);
}

}  // namespace
}  // namespace vistory
