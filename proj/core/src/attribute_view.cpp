// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/attribute_view.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <set>

#include "json_support.hpp"
#include "vistory/codec.hpp"
#include "vistory/errors.hpp"
#include "vistory/pair_corpus.hpp"

namespace vistory {

namespace {

constexpr std::string_view kArtifact = "attribute view";
constexpr std::uint64_t kSelectionStream = 1;
constexpr std::uint64_t kSubclusterStream = 2;

void check_consistent(std::span<const SamplePair> pairs) {
  if (pairs.empty()) return;
  const std::size_t na = pairs.front().attributes.size();
  const std::size_t d = pairs.front().generator.latent_dim();
  for (const auto& p : pairs) {
    if (p.attributes.size() != na) throw DimensionError("pair attributes", na, p.attributes.size());
    if (p.generator.latent_dim() != d) throw DimensionError("pair latent", d, p.generator.latent_dim());
  }
}

/// Smooths the members of one category into at most `num_subclusters` pairs.
std::size_t smooth_category(ClassId category, std::span<const SamplePair> pairs, std::span<const std::size_t> members,
                            std::size_t num_subclusters, std::uint64_t seed, std::vector<SamplePair>& out) {
  const std::size_t na = pairs.front().attributes.size();
  const std::size_t d = pairs.front().generator.latent_dim();
  Eigen::MatrixXd attrs(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(na));
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto values = pairs[members[i]].attributes.values();
    for (std::size_t j = 0; j < na; ++j) attrs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[j];
  }
  const std::size_t k = std::min(num_subclusters, members.size());
  const auto clustering = kmeans(attrs, k, derive_seed(derive_seed(seed, kSubclusterStream), category));

  std::vector<std::vector<double>> attr_sum(k, std::vector<double>(na, 0.0));
  std::vector<std::vector<double>> latent_sum(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const std::size_t c = clustering.assignments[i];
    const auto& pair = pairs[members[i]];
    for (std::size_t j = 0; j < na; ++j) attr_sum[c][j] += pair.attributes[j];
    const auto latent = pair.generator.latent();
    for (std::size_t j = 0; j < d; ++j) latent_sum[c][j] += latent[j];
    ++sizes[c];
  }
  std::size_t skipped = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) {
      ++skipped;
      continue;
    }
    const auto n = static_cast<double>(sizes[c]);
    for (double& v : attr_sum[c]) v /= n;
    for (double& v : latent_sum[c]) v /= n;
    out.push_back({GeneratorVector(category, std::move(latent_sum[c])), AttributeVector(std::move(attr_sum[c]))});
  }
  return skipped;
}

}  // namespace

std::size_t AttributeView::attribute_dim() const noexcept {
  return smoothed_pairs.empty() ? 0 : smoothed_pairs.front().attributes.size();
}

std::size_t AttributeView::latent_dim() const noexcept {
  return smoothed_pairs.empty() ? 0 : smoothed_pairs.front().generator.latent_dim();
}

bool AttributeView::retains(ClassId id) const {
  return std::binary_search(retained_categories.begin(), retained_categories.end(), id);
}

Eigen::MatrixXd attribute_matrix(std::span<const SamplePair> pairs) {
  const std::size_t na = pairs.empty() ? 0 : pairs.front().attributes.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(na));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].attributes.size() != na) throw DimensionError("pair attributes", na, pairs[i].attributes.size());
    for (std::size_t j = 0; j < na; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pairs[i].attributes[j];
  }
  return m;
}

ClassId sample_category(const std::map<ClassId, std::size_t>& counts, Rng& rng) {
  std::size_t total = 0;
  for (const auto& [id, count] : counts) total += count;
  if (total == 0) throw InsufficientDataError("cannot sample a category from an empty cluster");
  const double target = rng.uniform() * static_cast<double>(total);
  double cumulative = 0.0;
  ClassId last = counts.begin()->first;
  for (const auto& [id, count] : counts) {
    if (count == 0) continue;
    cumulative += static_cast<double>(count);
    last = id;
    if (target < cumulative) return id;
  }
  return last;
}

CategorySelection select_stable_categories(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                           std::uint64_t seed) {
  check_consistent(pairs);
  CategorySelection selection;
  selection.clustering = kmeans(attribute_matrix(pairs), num_clusters, seed);

  std::vector<std::map<ClassId, std::size_t>> counts(num_clusters);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ++counts[selection.clustering.assignments[i]][pairs[i].generator.class_id()];
  }
  Rng rng(derive_seed(seed, kSelectionStream));
  selection.selected.resize(num_clusters);
  for (std::size_t c = 0; c < num_clusters; ++c) {
    if (counts[c].empty()) {
      std::clog << "warning: attribute cluster " << c << " has no pairs; skipped\n";
      continue;
    }
    selection.selected[c] = sample_category(counts[c], rng);
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& chosen = selection.selected[selection.clustering.assignments[i]];
    if (chosen && *chosen == pairs[i].generator.class_id()) selection.survivors.push_back(i);
  }
  return selection;
}

AttributeView build_attribute_view(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                   std::size_t num_subclusters, std::uint64_t seed,
                                   const std::optional<std::vector<ClassId>>& user_categories) {
  if (num_clusters == 0) throw ConfigError("N_K must be at least 1");
  if (num_subclusters == 0) throw ConfigError("N_S must be at least 1");
  if (pairs.size() < num_clusters) {
    throw InsufficientDataError("attribute view needs at least N_K = " + std::to_string(num_clusters) +
                                " pairs, got " + std::to_string(pairs.size()));
  }
  check_consistent(pairs);

  AttributeView view;
  view.provenance.num_clusters = num_clusters;
  view.provenance.num_subclusters = num_subclusters;
  view.provenance.seed = seed;
  view.provenance.corpus_hash = corpus_hash(pairs);
  view.provenance.corpus_size = pairs.size();
  view.provenance.user_categories = user_categories.has_value();

  std::map<ClassId, std::vector<std::size_t>> members;
  if (user_categories) {
    const std::set<ClassId> wanted(user_categories->begin(), user_categories->end());
    if (wanted.empty()) throw ConfigError("user category list is empty");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const ClassId id = pairs[i].generator.class_id();
      if (wanted.count(id)) members[id].push_back(i);
    }
    for (ClassId id : wanted) {
      if (!members.count(id)) throw InsufficientDataError("category " + std::to_string(id) + " has no pairs in the corpus");
    }
  } else {
    const auto selection = select_stable_categories(pairs, num_clusters, seed);
    for (const auto& chosen : selection.selected) {
      if (!chosen) ++view.provenance.skipped_clusters;
    }
    for (std::size_t i : selection.survivors) members[pairs[i].generator.class_id()].push_back(i);
  }

  for (const auto& [category, indices] : members) {
    view.retained_categories.push_back(category);
    view.provenance.skipped_clusters +=
        smooth_category(category, pairs, indices, num_subclusters, seed, view.smoothed_pairs);
  }
  return view;
}

std::vector<std::size_t> distinct_classes_per_cluster(std::span<const SamplePair> pairs,
                                                      std::span<const std::size_t> assignments,
                                                      std::size_t num_clusters) {
  if (assignments.size() != pairs.size()) throw DimensionError("cluster assignments", pairs.size(), assignments.size());
  std::vector<std::set<ClassId>> classes(num_clusters);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (assignments[i] >= num_clusters) throw DomainError("cluster index outside [0, N_K)");
    classes[assignments[i]].insert(pairs[i].generator.class_id());
  }
  std::vector<std::size_t> counts;
  counts.reserve(num_clusters);
  for (const auto& s : classes) counts.push_back(s.size());
  return counts;
}

std::vector<std::size_t> instability_histogram(std::span<const SamplePair> pairs, std::size_t num_clusters,
                                               std::uint64_t seed) {
  check_consistent(pairs);
  const auto clustering = kmeans(attribute_matrix(pairs), num_clusters, seed);
  return distinct_classes_per_cluster(pairs, clustering.assignments, num_clusters);
}

double median(std::vector<std::size_t> counts) {
  if (counts.empty()) return 0.0;
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();
  if (n % 2 == 1) return static_cast<double>(counts[n / 2]);
  return 0.5 * static_cast<double>(counts[n / 2 - 1] + counts[n / 2]);
}

double mean(std::span<const std::size_t> counts) {
  if (counts.empty()) return 0.0;
  return static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0})) /
         static_cast<double>(counts.size());
}

std::string serialize_view(const AttributeView& view) {
  const auto& p = view.provenance;
  detail::json pairs = detail::json::array();
  for (const auto& pair : view.smoothed_pairs) {
    detail::json entry = detail::generator_to_json(pair.generator);
    entry["attributes"] = detail::f32_array(pair.attributes.values());
    pairs.push_back(std::move(entry));
  }
  const detail::json doc = {{"version", detail::kArtifactVersion},
                            {"kind", "attribute_view"},
                            {"provenance",
                             {{"nk", p.num_clusters},
                              {"ns", p.num_subclusters},
                              {"seed", p.seed},
                              {"corpus_hash", codec::hex64(p.corpus_hash)},
                              {"corpus_size", p.corpus_size},
                              {"user_categories", p.user_categories},
                              {"skipped_clusters", p.skipped_clusters}}},
                            {"retained_categories", view.retained_categories},
                            {"smoothed_pairs", pairs}};
  return doc.dump(2);
}

AttributeView parse_view(std::string_view json_text) {
  const auto doc = detail::parse_json(json_text, kArtifact);
  detail::require_header(doc, "attribute_view", kArtifact);
  AttributeView view;
  const auto prov = detail::get_field<detail::json>(doc, "provenance", kArtifact);
  auto& p = view.provenance;
  p.num_clusters = detail::get_field<std::size_t>(prov, "nk", kArtifact);
  p.num_subclusters = detail::get_field<std::size_t>(prov, "ns", kArtifact);
  p.seed = detail::get_field<std::uint64_t>(prov, "seed", kArtifact);
  const auto hash = detail::get_field<std::string>(prov, "corpus_hash", kArtifact);
  try {
    std::size_t used = 0;
    p.corpus_hash = std::stoull(hash, &used, 16);
    if (used != hash.size()) throw std::invalid_argument(hash);
  } catch (const std::logic_error&) {
    detail::throw_format(kArtifact, "corpus_hash is not a hex string");
  }
  p.corpus_size = detail::get_field<std::size_t>(prov, "corpus_size", kArtifact);
  p.user_categories = detail::get_field<bool>(prov, "user_categories", kArtifact);
  p.skipped_clusters = prov.value("skipped_clusters", std::size_t{0});

  view.retained_categories = detail::get_field<std::vector<ClassId>>(doc, "retained_categories", kArtifact);
  if (!std::is_sorted(view.retained_categories.begin(), view.retained_categories.end()) ||
      std::adjacent_find(view.retained_categories.begin(), view.retained_categories.end()) !=
          view.retained_categories.end()) {
    detail::throw_format(kArtifact, "retained_categories must be ascending and unique");
  }
  for (const auto& entry : detail::get_field<detail::json>(doc, "smoothed_pairs", kArtifact)) {
    try {
      GeneratorVector g = detail::generator_from_json(entry, kArtifact);
      AttributeVector a(detail::f32_vector(detail::get_field<detail::json>(entry, "attributes", kArtifact), kArtifact));
      if (!view.retains(g.class_id())) detail::throw_format(kArtifact, "smoothed pair outside the retained categories");
      view.smoothed_pairs.push_back({std::move(g), std::move(a)});
    } catch (const DomainError& e) {
      detail::throw_format(kArtifact, e.what());
    }
  }
  check_consistent(view.smoothed_pairs);
  return view;
}

void save_view(const std::filesystem::path& path, const AttributeView& view) {
  detail::write_text_file(path, serialize_view(view));
}

AttributeView load_view(const std::filesystem::path& path) {
  return parse_view(detail::read_text_file(path, kArtifact));
}

}  // namespace vistory
