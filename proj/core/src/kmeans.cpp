// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/kmeans.hpp"

#include <limits>
#include <string>

#include "vistory/errors.hpp"
#include "vistory/random.hpp"

namespace vistory {

namespace {

double squared_distance(const Eigen::MatrixXd& a, Eigen::Index ra, const Eigen::MatrixXd& b, Eigen::Index rb) {
  return (a.row(ra) - b.row(rb)).squaredNorm();
}

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, std::size_t k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), points.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  Eigen::Index chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
  for (std::size_t c = 0; c < k; ++c) {
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(chosen);
    if (c + 1 == k) break;
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, squared_distance(points, i, centroids, static_cast<Eigen::Index>(c)));
      total += d;
    }
    if (total <= 0.0) {
      chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
      continue;
    }
    const double target = rng.uniform() * total;
    double cumulative = 0.0;
    chosen = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      cumulative += d2[static_cast<std::size_t>(i)];
      if (cumulative > target && d2[static_cast<std::size_t>(i)] > 0.0) {
        chosen = i;
        break;
      }
    }
  }
  return centroids;
}

bool assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<std::size_t>& assignments) {
  bool changed = false;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const std::size_t best = nearest_centroid(centroids, points.row(i));
    auto& slot = assignments[static_cast<std::size_t>(i)];
    if (slot != best) {
      slot = best;
      changed = true;
    }
  }
  return changed;
}

void repair_empty(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids, std::vector<std::size_t>& assignments) {
  const auto k = static_cast<std::size_t>(centroids.rows());
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t a : assignments) ++sizes[a];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    double worst = -1.0;
    std::size_t victim = 0;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (sizes[assignments[i]] < 2) continue;
      const double d = squared_distance(points, static_cast<Eigen::Index>(i), centroids,
                                        static_cast<Eigen::Index>(assignments[i]));
      if (d > worst) {
        worst = d;
        victim = i;
      }
    }
    --sizes[assignments[victim]];
    assignments[victim] = c;
    sizes[c] = 1;
    centroids.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(victim));
  }
}

void update_means(const Eigen::MatrixXd& points, Eigen::MatrixXd& centroids, const std::vector<std::size_t>& assignments) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centroids.rows(), centroids.cols());
  std::vector<std::size_t> sizes(static_cast<std::size_t>(centroids.rows()), 0);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    sums.row(static_cast<Eigen::Index>(assignments[i])) += points.row(static_cast<Eigen::Index>(i));
    ++sizes[assignments[i]];
  }
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const std::size_t size = sizes[static_cast<std::size_t>(c)];
    if (size > 0) centroids.row(c) = sums.row(c) / static_cast<double>(size);
  }
}

}  // namespace

std::size_t nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& point) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (static_cast<std::size_t>(points.rows()) < k) {
    throw InsufficientDataError("k-means with k = " + std::to_string(k) + " on " + std::to_string(points.rows()) +
                                " points");
  }
  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(points.rows()), 0);
  assign(points, result.centroids, result.assignments);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    repair_empty(points, result.centroids, result.assignments);
    update_means(points, result.centroids, result.assignments);
    result.iterations = it;
    if (!assign(points, result.centroids, result.assignments)) break;
  }
  for (std::size_t i = 0; i < result.assignments.size(); ++i) {
    result.inertia += squared_distance(points, static_cast<Eigen::Index>(i), result.centroids,
                                       static_cast<Eigen::Index>(result.assignments[i]));
  }
  return result;
}

}  // namespace vistory
