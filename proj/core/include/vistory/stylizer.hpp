// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vistory/core_types.hpp"
#include "vistory/estimators.hpp"

namespace vistory {

struct BandThresholds {
  double negative_below = -0.5;
  double positive_above = 0.5;

  /// Throws ConfigError unless negative_below < positive_above.
  void validate() const;
};

enum class SentimentBand { kNegative, kNeutral, kPositive };

std::string_view to_string(SentimentBand band);

/// Classifies by the mean of the attribute entries. Values equal to a
/// threshold are neutral.
SentimentBand sentiment_band(const AttributeVector& attributes, const BandThresholds& thresholds = {});

enum class StyleSelection {
  kNearest,    // closest entry overall
  kBandGated,  // closest entry sharing the attribute's band; all entries if none does
};

std::string_view to_string(StyleSelection mode);
StyleSelection style_selection_from_string(std::string_view tag);

struct StyleEntry {
  std::size_t style_id = 0;
  std::string path;
  AttributeVector attributes;
};

struct StylePalette {
  std::vector<StyleEntry> entries;
  BandThresholds thresholds;
  double blend = 0.1;
  StyleSelection selection = StyleSelection::kNearest;
};

struct StyleImage {
  std::string path;
  ImageHandle image;
};

/// Estimates every style image; style ids follow input order. Throws
/// InsufficientDataError for an empty list.
StylePalette build_style_palette(std::span<const StyleImage> styles, VisualAttributeEstimator& estimator,
                                 const BandThresholds& thresholds = {}, double blend = 0.1);

/// Nearest entry by divergence under the palette's selection mode; ties go
/// to the lowest style id. Throws InsufficientDataError on an empty palette.
std::size_t select_style(const StylePalette& palette, const AttributeVector& attributes);
const StyleEntry& style_entry(const StylePalette& palette, std::size_t style_id);

std::string serialize_palette(const StylePalette& palette);
StylePalette parse_palette(std::string_view json_text);
void save_palette(const std::filesystem::path& path, const StylePalette& palette);
StylePalette load_palette(const std::filesystem::path& path);

/// Reads an image file into a handle. Binary PPM (P6) headers fill in the
/// dimensions; synthetic payloads are recognized by their magic; anything
/// else is passed through with the file extension as its format.
ImageHandle read_image_file(const std::filesystem::path& path);
void write_image_file(const std::filesystem::path& path, const ImageHandle& image);
/// File extension (without the dot) used when writing an image.
std::string image_extension(const ImageHandle& image);

/// Binary PPM helpers.
ImageHandle make_ppm(std::uint32_t width, std::uint32_t height, std::span<const std::uint8_t> rgb);
/// Pixel bytes of a P6 image. Throws FormatError on anything else.
std::span<const std::uint8_t> ppm_pixels(const ImageHandle& image);

}  // namespace vistory
