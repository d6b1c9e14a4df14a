// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>

#include "json_support.hpp"
#include "vistory/random.hpp"
#include "vistory/wav.hpp"

namespace vistory {

namespace {

constexpr std::string_view kBundleArtifact = "bundle";
constexpr std::uint64_t kNoiseStream = 7;

detail::json features_to_json(const audio::FeatureConfig& f) {
  return {{"sample_rate", f.sample_rate},
          {"fft_size", f.fft_size},
          {"hop_length", f.hop_length},
          {"mel_bands", f.mel_bands},
          {"mfcc_count", f.mfcc_count},
          {"chroma_bins", f.chroma_bins},
          {"cens_smoothing_window", f.cens_smoothing_window},
          {"cens_downsample", f.cens_downsample},
          {"tempogram_window", f.tempogram_window},
          {"window_ms", f.window_ms}};
}

audio::FeatureConfig features_from_json(const detail::json& doc) {
  audio::FeatureConfig f;
  const auto a = kBundleArtifact;
  f.sample_rate = detail::get_field<double>(doc, "sample_rate", a);
  f.fft_size = detail::get_field<std::size_t>(doc, "fft_size", a);
  f.hop_length = detail::get_field<std::size_t>(doc, "hop_length", a);
  f.mel_bands = detail::get_field<std::size_t>(doc, "mel_bands", a);
  f.mfcc_count = detail::get_field<std::size_t>(doc, "mfcc_count", a);
  f.chroma_bins = detail::get_field<std::size_t>(doc, "chroma_bins", a);
  f.cens_smoothing_window = detail::get_field<std::size_t>(doc, "cens_smoothing_window", a);
  f.cens_downsample = detail::get_field<std::size_t>(doc, "cens_downsample", a);
  f.tempogram_window = detail::get_field<std::size_t>(doc, "tempogram_window", a);
  f.window_ms = detail::get_field<double>(doc, "window_ms", a);
  try {
    f.validate();
  } catch (const ConfigError& e) {
    detail::throw_format(a, e.what());
  }
  return f;
}

double aggregate(std::vector<double>& values, Aggregation aggregation) {
  if (aggregation == Aggregation::kMean) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

detail::json frame_to_json(const ManifestFrame& frame) {
  detail::json out = {{"index", frame.index},
                      {"start_time", frame.start_time},
                      {"attributes", detail::f32_array(frame.attributes.values())},
                      {"band", to_string(frame.band)},
                      {"generator", detail::generator_to_json(frame.generator)}};
  out["style_id"] = frame.style_id ? detail::json(*frame.style_id) : detail::json(nullptr);
  out["image"] = frame.image_path ? detail::json(*frame.image_path) : detail::json(nullptr);
  return out;
}

void write_manifest(const StoryConfig& cfg, const FrameManifest& manifest) {
  if (cfg.output_dir.empty()) return;
  detail::write_text_file(cfg.output_dir / "manifest.json", serialize_manifest(manifest));
}

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

}  // namespace

BackendPair open_backend(std::string_view spec, const SyntheticSettings& synthetic, BridgeOptions options) {
  BackendPair pair;
  if (spec == "synthetic") {
    auto world = std::make_shared<const SyntheticBackendSpec>(
        SyntheticBackendSpec::create(synthetic.classes, synthetic.latent_dim, synthetic.seed));
    pair.generator = std::make_shared<SyntheticBackend>(world);
    pair.estimator = std::make_shared<SyntheticEstimator>(world);
    return pair;
  }
  constexpr std::string_view kBridgePrefix = "bridge:";
  if (spec.substr(0, kBridgePrefix.size()) == kBridgePrefix && spec.size() > kBridgePrefix.size()) {
    pair.session = BridgeSession::launch(std::string(spec.substr(kBridgePrefix.size())), options);
    pair.generator = std::make_shared<BridgeBackend>(pair.session);
    pair.estimator = std::make_shared<BridgeEstimator>(pair.session);
    return pair;
  }
  throw ConfigError("unknown backend '" + std::string(spec) + "' (expected synthetic or bridge:<command>)");
}

std::vector<AttributeVector> interval_attributes(std::span<const AttributeVector> window_attributes,
                                                 std::size_t windows_per_interval, Aggregation aggregation) {
  if (windows_per_interval == 0) throw ConfigError("an interval must span at least one window");
  std::vector<AttributeVector> out;
  if (window_attributes.empty()) return out;
  const std::size_t dim = window_attributes.front().size();
  for (std::size_t start = 0; start < window_attributes.size(); start += windows_per_interval) {
    const std::size_t end = std::min(start + windows_per_interval, window_attributes.size());
    std::vector<double> result(dim);
    std::vector<double> column(end - start);
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t i = start; i < end; ++i) {
        if (window_attributes[i].size() != dim) throw DimensionError("window attribute", dim, window_attributes[i].size());
        column[i - start] = window_attributes[i][j];
      }
      result[j] = aggregate(column, aggregation);
    }
    out.emplace_back(std::move(result));
  }
  return out;
}

void save_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bundle directory '" + dir.string() + "': " + ec.message());
  detail::json files = {{"audio_estimator", "audio_estimator.json"},
                        {"translator", "translator.json"},
                        {"view", "view.json"}};
  save_regressor(dir / "audio_estimator.json", bundle.audio_estimator);
  save_translator(dir / "translator.json", bundle.translator);
  save_view(dir / "view.json", bundle.view);
  if (bundle.palette) {
    files["palette"] = "palette.json";
    save_palette(dir / "palette.json", *bundle.palette);
  }
  if (bundle.dataset_stats) {
    files["dataset_stats"] = "dataset_stats.json";
    detail::write_text_file(dir / "dataset_stats.json", serialize_zscore_stats(*bundle.dataset_stats));
  }
  if (bundle.visual_stats) {
    files["visual_stats"] = "visual_stats.json";
    detail::write_text_file(dir / "visual_stats.json", serialize_zscore_stats(*bundle.visual_stats));
  }
  const detail::json doc = {{"version", detail::kArtifactVersion},
                            {"kind", "bundle"},
                            {"features", features_to_json(bundle.features)},
                            {"files", files}};
  detail::write_text_file(dir / "bundle.json", doc.dump(2));
}

Bundle load_bundle(const std::filesystem::path& dir) {
  const auto doc = detail::parse_json(detail::read_text_file(dir / "bundle.json", kBundleArtifact), kBundleArtifact);
  detail::require_header(doc, "bundle", kBundleArtifact);
  const auto files = detail::get_field<detail::json>(doc, "files", kBundleArtifact);
  auto file = [&](const char* key) { return dir / detail::get_field<std::string>(files, key, kBundleArtifact); };

  Bundle bundle;
  bundle.features = features_from_json(detail::get_field<detail::json>(doc, "features", kBundleArtifact));
  bundle.audio_estimator = load_regressor(file("audio_estimator"));
  bundle.translator = load_translator(file("translator"));
  bundle.view = load_view(file("view"));
  if (files.contains("palette")) bundle.palette = load_palette(file("palette"));
  if (files.contains("dataset_stats")) {
    bundle.dataset_stats = parse_zscore_stats(detail::read_text_file(file("dataset_stats"), "dataset z-score stats"));
  }
  if (files.contains("visual_stats")) {
    bundle.visual_stats = parse_zscore_stats(detail::read_text_file(file("visual_stats"), "visual z-score stats"));
  }
  if (bundle.audio_estimator.input_dim() != bundle.features.feature_dim()) {
    throw ArtifactError("audio estimator", "input width " + std::to_string(bundle.audio_estimator.input_dim()) +
                                               " does not match the feature layout " +
                                               std::to_string(bundle.features.feature_dim()));
  }
  if (bundle.translator.attribute_dim() != bundle.audio_estimator.output_dim()) {
    throw ArtifactError("translator", "attribute dimension differs from the audio estimator");
  }
  return bundle;
}

std::string serialize_manifest(const FrameManifest& manifest) {
  detail::json frames = detail::json::array();
  for (const auto& f : manifest.frames) frames.push_back(frame_to_json(f));
  detail::json doc = {{"version", detail::kArtifactVersion},
                      {"kind", "frame_manifest"},
                      {"song", manifest.song},
                      {"interval_seconds", manifest.interval_seconds},
                      {"aggregation", to_string(manifest.aggregation)},
                      {"zscore_scope", to_string(manifest.scope)},
                      {"noise_sigma", manifest.noise_sigma},
                      {"seed", manifest.seed},
                      {"status", manifest.failed_stage ? "failed" : "complete"},
                      {"frames", frames}};
  if (manifest.failed_stage) doc["error"] = {{"stage", *manifest.failed_stage}, {"message", manifest.error.value_or("")}};
  return doc.dump(2) + "\n";
}

StageError::StageError(std::string stage, const Error& cause)
    : Error("stage '" + stage + "': " + cause.what()), stage_(std::move(stage)), code_(cause.exit_code()) {}

StageError::StageError(std::string stage, const std::string& what, ExitCode code)
    : Error("stage '" + stage + "': " + what), stage_(std::move(stage)), code_(code) {}

std::vector<AttributeVector> story_attributes(const AudioSegment& segment, const Bundle& bundle,
                                              const StoryConfig& cfg) {
  const auto features = run_stage("features", [&] { return audio::extract_feature_sequence(segment, bundle.features, ""); });
  const auto window_attrs = run_stage("estimate", [&] { return predict_attributes(bundle.audio_estimator, features); });
  const auto aligned = run_stage("align", [&] {
    if (cfg.scope == ZScoreScope::kSongLevel) {
      return zscore_align(window_attrs, compute_zscore_stats(window_attrs, ZScoreScope::kSongLevel));
    }
    if (!bundle.dataset_stats) throw ConfigError("dataset-level alignment needs dataset statistics in the bundle");
    return zscore_align(window_attrs, *bundle.dataset_stats);
  });
  return run_stage("aggregate", [&] {
    cfg.validate(features.window_seconds);
    return interval_attributes(aligned, cfg.windows_per_interval(features.window_seconds), cfg.aggregation);
  });
}

FrameManifest generate_story(const std::filesystem::path& song, const Bundle& bundle, GeneratorBackend& backend,
                             const StoryConfig& cfg) {
  FrameManifest manifest;
  manifest.song = song.filename().string();
  manifest.interval_seconds = cfg.interval_seconds;
  manifest.aggregation = cfg.aggregation;
  manifest.scope = cfg.scope;
  manifest.noise_sigma = cfg.noise_sigma;
  manifest.seed = cfg.seed;

  if (!cfg.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw StageError("setup", "cannot create output directory: " + ec.message(), ExitCode::kData);
  }

  std::string stage = "load_audio";
  try {
    const auto segment = run_stage("load_audio", [&] { return audio::load_audio(song, bundle.features.sample_rate); });
    const auto intervals = story_attributes(segment, bundle, cfg);

    stage = "backend";
    const auto& tr = bundle.translator;
    if (tr.num_classes() != backend.num_classes() || tr.latent_dim() != backend.latent_dim()) {
      throw ConfigError("translator expects K = " + std::to_string(tr.num_classes()) + ", d = " +
                        std::to_string(tr.latent_dim()) + " but the backend has K = " +
                        std::to_string(backend.num_classes()) + ", d = " + std::to_string(backend.latent_dim()));
    }
    const auto caps = backend.capabilities();
    const bool write_images = caps.has_pixels && !cfg.output_dir.empty();

    stage = "translate";
    Rng noise(derive_seed(cfg.seed, kNoiseStream));
    std::vector<GeneratorVector> generators;
    std::vector<std::optional<std::size_t>> styles;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      AttributeVector target = intervals[i];
      if (bundle.visual_stats) target = zscore_unalign(std::span<const AttributeVector>(&target, 1), *bundle.visual_stats).front();
      generators.push_back(translate(tr, target, cfg.noise_sigma, noise));
      styles.push_back(bundle.palette ? std::optional<std::size_t>(select_style(*bundle.palette, target)) : std::nullopt);
    }

    const BandThresholds thresholds = bundle.palette ? bundle.palette->thresholds : BandThresholds{};
    std::map<std::size_t, ImageHandle> style_images;
    const std::size_t chunk = std::max<std::size_t>(1, caps.max_concurrent_requests);
    for (std::size_t start = 0; start < generators.size(); start += chunk) {
      const std::size_t count = std::min(chunk, generators.size() - start);
      stage = "generate";
      std::vector<ImageHandle> images;
      try {
        images = backend.generate_batch(std::span<const GeneratorVector>(generators.data() + start, count));
      } catch (const Error&) {
        // Locate the first failing frame so the manifest covers the ones before it.
        for (std::size_t i = start; i < start + count; ++i) {
          ImageHandle image = backend.generate(generators[i]);
          images.push_back(std::move(image));
          ManifestFrame frame{i, cfg.interval_seconds * static_cast<double>(i), intervals[i], generators[i], styles[i],
                              sentiment_band(intervals[i], thresholds), std::nullopt};
          manifest.frames.push_back(std::move(frame));
        }
        throw;
      }
      for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = start + k;
        ManifestFrame frame{i, cfg.interval_seconds * static_cast<double>(i), intervals[i], generators[i], styles[i],
                            sentiment_band(intervals[i], thresholds), std::nullopt};
        if (write_images) {
          ImageHandle image = std::move(images[k]);
          if (styles[i] && caps.supports_stylize) {
            stage = "stylize";
            const auto& entry = style_entry(*bundle.palette, *styles[i]);
            auto it = style_images.find(entry.style_id);
            if (it == style_images.end()) it = style_images.emplace(entry.style_id, read_image_file(entry.path)).first;
            image = backend.stylize(image, it->second, bundle.palette->blend);
          }
          stage = "write";
          char name[32];
          std::snprintf(name, sizeof name, "frame_%04zu.", i);
          const std::string file = name + image_extension(image);
          write_image_file(cfg.output_dir / file, image);
          frame.image_path = file;
        }
        manifest.frames.push_back(std::move(frame));
      }
    }
  } catch (const Error& e) {
    const auto* staged = dynamic_cast<const StageError*>(&e);
    manifest.failed_stage = staged ? staged->stage() : stage;
    manifest.error = e.what();
    try {
      write_manifest(cfg, manifest);
    } catch (const Error&) {
    }
    if (staged) throw;
    throw StageError(stage, e);
  }
  write_manifest(cfg, manifest);
  return manifest;
}

}  // namespace vistory
