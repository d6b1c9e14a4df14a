// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/pair_corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json_support.hpp"
#include "vistory/codec.hpp"
#include "vistory/errors.hpp"

namespace vistory {

namespace {

constexpr std::string_view kArtifact = "pair corpus";

}  // namespace

void write_pair_corpus(std::ostream& out, std::span<const SamplePair> pairs) {
  for (const auto& pair : pairs) {
    detail::json line = detail::generator_to_json(pair.generator);
    line["attributes"] = detail::f32_array(pair.attributes.values());
    out << line.dump() << '\n';
  }
}

void save_pair_corpus(const std::filesystem::path& path, std::span<const SamplePair> pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write pair corpus '" + path.string() + "'");
  write_pair_corpus(out, pairs);
  if (!out) throw IoError("failed writing pair corpus '" + path.string() + "'");
}

std::vector<SamplePair> read_pair_corpus(std::istream& in) {
  std::vector<SamplePair> pairs;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    detail::json doc;
    try {
      doc = detail::json::parse(line);
    } catch (const detail::json::parse_error& e) {
      throw ParseError(std::string(kArtifact) + ": " + e.what(), line_start + (e.byte > 0 ? e.byte - 1 : 0));
    }
    try {
      GeneratorVector generator = detail::generator_from_json(doc, kArtifact);
      AttributeVector attributes(detail::f32_vector(detail::get_field<detail::json>(doc, "attributes", kArtifact), kArtifact));
      if (!pairs.empty() && (attributes.size() != pairs.front().attributes.size() ||
                             generator.latent_dim() != pairs.front().generator.latent_dim())) {
        throw FormatError("pair corpus: inconsistent vector lengths at byte " + std::to_string(line_start));
      }
      pairs.push_back({std::move(generator), std::move(attributes)});
    } catch (const DomainError& e) {
      throw FormatError(std::string("pair corpus at byte ") + std::to_string(line_start) + ": " + e.what());
    }
  }
  return pairs;
}

std::vector<SamplePair> load_pair_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(std::string(kArtifact), "cannot open '" + path.string() + "'");
  return read_pair_corpus(in);
}

std::uint64_t corpus_hash(std::span<const SamplePair> pairs) {
  codec::Fnv1a h;
  h.update_u64(pairs.size());
  for (const auto& pair : pairs) {
    h.update_u64(pair.generator.class_id());
    h.update_u64(pair.generator.latent_dim());
    for (double v : pair.generator.latent()) h.update_f32(v);
    h.update_u64(pair.attributes.size());
    for (double v : pair.attributes) h.update_f32(v);
  }
  return h.digest();
}

}  // namespace vistory
