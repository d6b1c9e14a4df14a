// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/stylizer.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <numeric>

#include "json_support.hpp"
#include "vistory/errors.hpp"

namespace vistory {

namespace {

constexpr std::string_view kArtifact = "style palette";

struct PpmHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::size_t data_offset = 0;
};

bool parse_ppm_header(std::span<const std::uint8_t> bytes, PpmHeader& header) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') return false;
  std::size_t pos = 2;
  std::uint64_t fields[3] = {0, 0, 0};
  for (auto& field : fields) {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) return false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      field = field * 10 + static_cast<std::uint64_t>(bytes[pos] - '0');
      if (field > std::numeric_limits<std::uint32_t>::max()) return false;
      ++pos;
    }
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos]) || fields[2] != 255) return false;
  ++pos;
  header.width = static_cast<std::uint32_t>(fields[0]);
  header.height = static_cast<std::uint32_t>(fields[1]);
  header.data_offset = pos;
  return header.width > 0 && header.height > 0 &&
         bytes.size() - pos == static_cast<std::size_t>(header.width) * header.height * 3;
}

}  // namespace

void BandThresholds::validate() const {
  if (!(negative_below < positive_above)) throw ConfigError("negative threshold must be below the positive threshold");
}

std::string_view to_string(SentimentBand band) {
  switch (band) {
    case SentimentBand::kNegative: return "negative";
    case SentimentBand::kNeutral: return "neutral";
    case SentimentBand::kPositive: return "positive";
  }
  return "neutral";
}

SentimentBand sentiment_band(const AttributeVector& attributes, const BandThresholds& thresholds) {
  if (attributes.size() == 0) return SentimentBand::kNeutral;
  const double m = std::accumulate(attributes.begin(), attributes.end(), 0.0) / static_cast<double>(attributes.size());
  if (m < thresholds.negative_below) return SentimentBand::kNegative;
  if (m > thresholds.positive_above) return SentimentBand::kPositive;
  return SentimentBand::kNeutral;
}

std::string_view to_string(StyleSelection mode) {
  return mode == StyleSelection::kNearest ? "nearest" : "band";
}

StyleSelection style_selection_from_string(std::string_view tag) {
  if (tag == "nearest") return StyleSelection::kNearest;
  if (tag == "band") return StyleSelection::kBandGated;
  throw ConfigError("unknown style selection '" + std::string(tag) + "' (expected nearest or band)");
}

StylePalette build_style_palette(std::span<const StyleImage> styles, VisualAttributeEstimator& estimator,
                                 const BandThresholds& thresholds, double blend) {
  if (styles.empty()) throw InsufficientDataError("style palette needs at least one style image");
  thresholds.validate();
  if (!(blend >= 0.0 && blend <= 1.0)) throw ConfigError("blend must lie in [0, 1]");
  std::vector<ImageHandle> images;
  images.reserve(styles.size());
  for (const auto& s : styles) images.push_back(s.image);
  const auto attrs = estimator.estimate_batch(images);
  StylePalette palette;
  palette.thresholds = thresholds;
  palette.blend = blend;
  for (std::size_t i = 0; i < styles.size(); ++i) palette.entries.push_back({i, styles[i].path, attrs[i]});
  return palette;
}

std::size_t select_style(const StylePalette& palette, const AttributeVector& attributes) {
  if (palette.entries.empty()) throw InsufficientDataError("style palette is empty");
  bool gated = palette.selection == StyleSelection::kBandGated;
  const SentimentBand band = sentiment_band(attributes, palette.thresholds);
  if (gated) {
    gated = false;
    for (const auto& e : palette.entries) {
      if (sentiment_band(e.attributes, palette.thresholds) == band) gated = true;
    }
  }
  const StyleEntry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : palette.entries) {
    if (gated && sentiment_band(e.attributes, palette.thresholds) != band) continue;
    const double d = divergence(attributes, e.attributes);
    if (d < best_d || (d == best_d && best != nullptr && e.style_id < best->style_id)) {
      best_d = d;
      best = &e;
    }
  }
  return best->style_id;
}

const StyleEntry& style_entry(const StylePalette& palette, std::size_t style_id) {
  for (const auto& e : palette.entries) {
    if (e.style_id == style_id) return e;
  }
  throw DomainError("no style with id " + std::to_string(style_id));
}

std::string serialize_palette(const StylePalette& palette) {
  detail::json styles = detail::json::array();
  for (const auto& e : palette.entries) {
    styles.push_back({{"id", e.style_id}, {"path", e.path}, {"attributes", detail::f32_array(e.attributes.values())}});
  }
  const detail::json doc = {{"version", detail::kArtifactVersion},
                            {"kind", "style_palette"},
                            {"styles", styles},
                            {"thresholds",
                             {{"negative_below", palette.thresholds.negative_below},
                              {"positive_above", palette.thresholds.positive_above}}},
                            {"blend", palette.blend},
                            {"selection", to_string(palette.selection)}};
  return doc.dump(2);
}

StylePalette parse_palette(std::string_view json_text) {
  const auto doc = detail::parse_json(json_text, kArtifact);
  detail::require_header(doc, "style_palette", kArtifact);
  StylePalette palette;
  for (const auto& s : detail::get_field<detail::json>(doc, "styles", kArtifact)) {
    try {
      palette.entries.push_back({detail::get_field<std::size_t>(s, "id", kArtifact),
                                 detail::get_field<std::string>(s, "path", kArtifact),
                                 AttributeVector(detail::f32_vector(detail::get_field<detail::json>(s, "attributes", kArtifact), kArtifact))});
    } catch (const DomainError& e) {
      detail::throw_format(kArtifact, e.what());
    }
  }
  if (palette.entries.empty()) detail::throw_format(kArtifact, "palette has no styles");
  const auto thresholds = detail::get_field<detail::json>(doc, "thresholds", kArtifact);
  palette.thresholds.negative_below = detail::get_field<double>(thresholds, "negative_below", kArtifact);
  palette.thresholds.positive_above = detail::get_field<double>(thresholds, "positive_above", kArtifact);
  palette.blend = detail::get_field<double>(doc, "blend", kArtifact);
  try {
    palette.thresholds.validate();
    palette.selection = style_selection_from_string(doc.value("selection", std::string("nearest")));
  } catch (const ConfigError& e) {
    detail::throw_format(kArtifact, e.what());
  }
  return palette;
}

void save_palette(const std::filesystem::path& path, const StylePalette& palette) {
  detail::write_text_file(path, serialize_palette(palette));
}

StylePalette load_palette(const std::filesystem::path& path) {
  return parse_palette(detail::read_text_file(path, kArtifact));
}

ImageHandle read_image_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  ImageHandle image;
  image.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (image.payload.empty()) throw FormatError("image file '" + path.string() + "' is empty");
  PpmHeader header;
  if (parse_ppm_header(image.payload, header)) {
    image.format = "ppm";
    image.width = header.width;
    image.height = header.height;
    image.channels = 3;
  } else if (image.payload.size() >= 4 && std::memcmp(image.payload.data(), "SYNG", 4) == 0) {
    image.format = "synthetic";
    image.width = image.height = image.channels = 1;
  } else {
    image.format = path.extension().string();
    if (!image.format.empty() && image.format.front() == '.') image.format.erase(0, 1);
  }
  return image;
}

void write_image_file(const std::filesystem::path& path, const ImageHandle& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(image.payload.data()), static_cast<std::streamsize>(image.payload.size()));
  if (!out) throw IoError("failed writing image '" + path.string() + "'");
}

std::string image_extension(const ImageHandle& image) {
  if (image.format == "synthetic") return "syn";
  return image.format.empty() ? "bin" : image.format;
}

ImageHandle make_ppm(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw DimensionError("ppm pixels", static_cast<std::size_t>(width) * height * 3, rgb.size());
  }
  ImageHandle image;
  image.format = "ppm";
  image.width = width;
  image.height = height;
  image.channels = 3;
  const std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  image.payload.assign(header.begin(), header.end());
  image.payload.insert(image.payload.end(), rgb.begin(), rgb.end());
  return image;
}

std::span<const std::uint8_t> ppm_pixels(const ImageHandle& image) {
  PpmHeader header;
  if (!parse_ppm_header(image.payload, header)) throw FormatError("image is not a binary PPM");
  return std::span<const std::uint8_t>(image.payload).subspan(header.data_offset);
}

}  // namespace vistory
