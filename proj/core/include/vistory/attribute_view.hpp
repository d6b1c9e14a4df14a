// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vistory/core_types.hpp"
#include "vistory/kmeans.hpp"
#include "vistory/random.hpp"

namespace vistory {

struct ViewProvenance {
  std::size_t num_clusters = 0;      // N_K
  std::size_t num_subclusters = 0;   // N_S
  std::uint64_t seed = 0;
  std::uint64_t corpus_hash = 0;
  std::size_t corpus_size = 0;
  bool user_categories = false;
  std::size_t skipped_clusters = 0;  // empty clusters met while building
};

/// A pruned, smoothed set of generator/attribute pairs in which each
/// attribute region maps to one generator class.
struct AttributeView {
  std::vector<ClassId> retained_categories;  // ascending, unique
  std::vector<SamplePair> smoothed_pairs;    // grouped by category, ascending
  ViewProvenance provenance;

  std::size_t attribute_dim() const noexcept;
  std::size_t latent_dim() const noexcept;
  bool retains(ClassId id) const;
};

/// Outcome of clustering the attribute vectors and drawing one class per
/// cluster.
struct CategorySelection {
  KMeansResult clustering;
  /// Class drawn for each cluster; empty for a cluster without members.
  std::vector<std::optional<ClassId>> selected;
  /// Indices (into the input pairs) of pairs whose class was drawn in
  /// their own cluster, ascending.
  std::vector<std::size_t> survivors;
};

/// Row-per-pair matrix of attribute vectors.
Eigen::MatrixXd attribute_matrix(std::span<const SamplePair> pairs);

/// Draws a class with probability proportional to its count. Iterates in
/// ascending class order, consuming one uniform draw.
ClassId sample_category(const std::map<ClassId, std::size_t>& counts, Rng& rng);

/// Clusters the attribute vectors into `num_clusters` (k-means seeded with
/// `seed`) and draws one class per cluster from a stream derived from
/// `seed`.
CategorySelection select_stable_categories(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                           std::uint64_t seed);

/// Builds the view. Without `user_categories` the retained classes come
/// from select_stable_categories and only the surviving pairs are
/// smoothed. With them, the first clustering is skipped and every pair of
/// the listed classes is used. Each retained class is then split into
/// min(N_S, count) sub-clusters whose mean attribute and mean latent form
/// one smoothed pair.
AttributeView build_attribute_view(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                   std::size_t num_subclusters, std::uint64_t seed,
                                   const std::optional<std::vector<ClassId>>& user_categories = std::nullopt);

/// Distinct class count per cluster for a given assignment.
std::vector<std::size_t> distinct_classes_per_cluster(std::span<const SamplePair> pairs,
                                                      std::span<const std::size_t> assignments,
                                                      std::size_t num_clusters);

/// Clusters the attribute vectors into `num_clusters` and counts the
/// distinct classes found in each cluster.
std::vector<std::size_t> instability_histogram(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                               std::uint64_t seed);

double median(std::vector<std::size_t> counts);
double mean(std::span<const std::size_t> counts);

std::string serialize_view(const AttributeView& view);
AttributeView parse_view(std::string_view json_text);
void save_view(const std::filesystem::path& path, const AttributeView& view);
AttributeView load_view(const std::filesystem::path& path);

}  // namespace vistory
