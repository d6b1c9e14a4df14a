// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "vistory/attribute_view.hpp"
#include "vistory/audio_features.hpp"
#include "vistory/config.hpp"
#include "vistory/errors.hpp"
#include "vistory/estimators.hpp"
#include "vistory/feature_io.hpp"
#include "vistory/generator_backend.hpp"
#include "vistory/pair_corpus.hpp"
#include "vistory/pipeline.hpp"
#include "vistory/stylizer.hpp"
#include "vistory/translator.hpp"
#include "vistory/wav.hpp"

namespace {

using namespace vistory;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string backend = "synthetic";
  std::optional<std::size_t> synthetic_k;
  std::optional<std::size_t> synthetic_d;
  std::optional<std::uint64_t> synthetic_seed;
  double bridge_timeout_s = 30.0;
};

RunConfig load_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.synthetic_k) cfg.synthetic.classes = *g.synthetic_k;
  if (g.synthetic_d) cfg.synthetic.latent_dim = *g.synthetic_d;
  if (g.synthetic_seed) cfg.synthetic.seed = *g.synthetic_seed;
  if (g.seed) {
    cfg.audio_training.seed = *g.seed;
    cfg.view.seed = *g.seed;
    cfg.translator.seed = *g.seed;
    cfg.story.seed = *g.seed;
  }
  return cfg;
}

BackendPair backend_for(const Globals& g, const RunConfig& cfg) {
  BridgeOptions options;
  options.timeout = std::chrono::milliseconds(static_cast<long long>(g.bridge_timeout_s * 1000.0));
  return open_backend(g.backend, cfg.synthetic, options);
}

std::vector<ClassId> parse_class_list(const std::string& text) {
  std::vector<ClassId> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(static_cast<ClassId>(v));
    } catch (const std::logic_error&) {
      throw ConfigError("invalid class id '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty class list");
  return out;
}

/// "name=v,a" -> palette entry with an explicit attribute.
StyleEntry parse_style_at(const std::string& text, std::size_t id) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--style-at expects PATH=V,A, got '" + text + "'");
  std::vector<double> values;
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw ConfigError("invalid attribute value '" + item + "' in --style-at");
    }
  }
  return {id, text.substr(0, eq), AttributeVector(std::move(values))};
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void inspect_file(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    const Bundle b = load_bundle(path);
    std::cout << "bundle " << path.string() << "\n"
              << "  audio estimator: " << b.audio_estimator.input_dim() << " -> " << b.audio_estimator.output_dim() << "\n"
              << "  translator: K = " << b.translator.num_classes() << ", d = " << b.translator.latent_dim()
              << ", retained classes = " << b.translator.retained_classes.size() << "\n"
              << "  view: " << b.view.smoothed_pairs.size() << " smoothed pairs\n"
              << "  palette: " << (b.palette ? std::to_string(b.palette->entries.size()) + " styles" : "none") << "\n";
    return;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string(magic, 4) == "DSFT") {
    const auto m = audio::read_feature_matrix(path);
    std::cout << "feature matrix: " << m.rows() << " windows x " << m.cols() << " features\n";
    return;
  }
  if (path.extension() == ".jsonl") {
    const auto pairs = load_pair_corpus(path);
    std::set<ClassId> classes;
    for (const auto& p : pairs) classes.insert(p.generator.class_id());
    std::cout << "pair corpus: " << pairs.size() << " pairs, " << classes.size() << " classes";
    if (!pairs.empty()) {
      std::cout << ", d = " << pairs.front().generator.latent_dim() << ", N_a = " << pairs.front().attributes.size();
    }
    std::cout << ", hash " << std::hex << corpus_hash(pairs) << std::dec << "\n";
    return;
  }
  std::ifstream text_in(path, std::ios::binary);
  std::stringstream ss;
  ss << text_in.rdbuf();
  const std::string text = ss.str();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  const std::string kind = doc.value("kind", std::string());
  if (kind == "mlp_regressor") {
    const auto m = parse_regressor(text);
    std::cout << "audio estimator: " << m.input_dim() << " -> " << m.output_dim() << ", "
              << m.network.parameter_count() << " parameters\n";
    for (const auto& [k, v] : m.training_meta) std::cout << "  " << k << ": " << v << "\n";
  } else if (kind == "translation_model") {
    const auto m = parse_translator(text);
    std::cout << "translator: N_a = " << m.attribute_dim() << ", K = " << m.num_classes() << ", d = " << m.latent_dim()
              << ", retained classes = " << m.retained_classes.size() << "\n";
    for (const auto& [k, v] : m.training_meta) std::cout << "  " << k << ": " << v << "\n";
  } else if (kind == "attribute_view") {
    const auto v = parse_view(text);
    std::cout << "attribute view: " << v.retained_categories.size() << " categories, " << v.smoothed_pairs.size()
              << " smoothed pairs (N_K = " << v.provenance.num_clusters << ", N_S = " << v.provenance.num_subclusters
              << ", seed " << v.provenance.seed << ", corpus " << v.provenance.corpus_size << " pairs)\n";
  } else if (kind == "style_palette") {
    const auto p = parse_palette(text);
    std::cout << "style palette: " << p.entries.size() << " styles, blend " << p.blend << ", selection "
              << to_string(p.selection) << "\n";
    for (const auto& e : p.entries) {
      std::cout << "  " << e.style_id << " " << e.path << " [";
      for (std::size_t i = 0; i < e.attributes.size(); ++i) std::cout << (i ? ", " : "") << fmt(e.attributes[i]);
      std::cout << "] " << to_string(sentiment_band(e.attributes, p.thresholds)) << "\n";
    }
  } else if (kind == "frame_manifest") {
    std::cout << "frame manifest: " << doc.at("frames").size() << " frames, status " << doc.value("status", "") << "\n";
  } else if (kind == "zscore_stats") {
    const auto s = parse_zscore_stats(text);
    std::cout << "z-score stats (" << to_string(s.scope) << "): " << s.mean.size() << " dimensions\n";
  } else {
    throw FormatError("'" + path.string() + "' is not a recognised artifact");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Translate music into sequences of generator controls with matching affect"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every stochastic stage");
  app.add_option("--config", g.config_path, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--backend", g.backend, "synthetic or bridge:<command>");
  app.add_option("--synthetic-k", g.synthetic_k, "Classes of the synthetic backend");
  app.add_option("--synthetic-d", g.synthetic_d, "Latent dimension of the synthetic backend");
  app.add_option("--synthetic-seed", g.synthetic_seed, "Seed of the synthetic world");
  app.add_option("--bridge-timeout", g.bridge_timeout_s, "Bridge response timeout in seconds");

  // features
  std::string feat_in, feat_out;
  auto* features = app.add_subcommand("features", "Extract 500 ms feature windows from a WAV file");
  features->add_option("input", feat_in, "WAV file")->required();
  features->add_option("-o,--output", feat_out, "Feature matrix file (.dsft)")->required();

  // train-audio
  std::string ta_csv, ta_dir, ta_out, ta_stats;
  auto* train_audio = app.add_subcommand("train-audio", "Train the audio attribute regressor");
  train_audio->add_option("--annotations", ta_csv, "CSV with id,valence,arousal")->required();
  train_audio->add_option("--features-dir", ta_dir, "Directory of <id>.dsft files")->required();
  train_audio->add_option("-o,--output", ta_out, "Model file")->required();
  train_audio->add_option("--stats-out", ta_stats, "Write dataset-level z-score statistics of the predictions");

  // sample
  std::size_t sample_n = 0;
  std::string sample_out;
  auto* sample = app.add_subcommand("sample", "Sample generator space into a pair corpus");
  sample->add_option("-n,--count", sample_n, "Pairs to draw (default 50 * K)");
  sample->add_option("-o,--output", sample_out, "Pair corpus (.jsonl)")->required();

  // build-view
  std::string bv_pairs, bv_out, bv_classes, bv_stats;
  std::optional<std::size_t> bv_nk, bv_ns;
  auto* build_view = app.add_subcommand("build-view", "Build a stable attribute view from a pair corpus");
  build_view->add_option("--pairs", bv_pairs, "Pair corpus (.jsonl)")->required();
  build_view->add_option("--nk", bv_nk, "Attribute clusters N_K");
  build_view->add_option("--ns", bv_ns, "Sub-clusters per category N_S");
  build_view->add_option("--classes", bv_classes, "Comma-separated categories to keep (skips the first clustering)");
  build_view->add_option("--visual-stats-out", bv_stats, "Write z-score statistics of the corpus attributes");
  build_view->add_option("-o,--output", bv_out, "View file")->required();

  // train-translator
  std::string tt_view, tt_out;
  std::optional<std::size_t> tt_k, tt_epochs, tt_batch;
  std::optional<double> tt_lr, tt_lambda;
  auto* train_translator_cmd = app.add_subcommand("train-translator", "Train the attribute-to-generator translator");
  train_translator_cmd->add_option("--view", tt_view, "View file")->required();
  train_translator_cmd->add_option("--num-classes", tt_k, "K (default: the backend's)");
  train_translator_cmd->add_option("--epochs", tt_epochs, "Training epochs");
  train_translator_cmd->add_option("--lr", tt_lr, "Adam learning rate");
  train_translator_cmd->add_option("--lambda", tt_lambda, "Latent loss weight");
  train_translator_cmd->add_option("--batch-size", tt_batch, "Mini-batch size (0 = whole view)");
  train_translator_cmd->add_option("-o,--output", tt_out, "Model file")->required();

  // palette
  std::vector<std::string> pal_styles, pal_style_at;
  std::string pal_out, pal_selection;
  std::optional<double> pal_neg, pal_pos, pal_blend;
  auto* palette = app.add_subcommand("palette", "Map style images into the attribute space");
  palette->add_option("--style", pal_styles, "Style image, estimated by the backend");
  palette->add_option("--style-at", pal_style_at, "PATH=V,A style with an explicit attribute");
  palette->add_option("--negative-below", pal_neg, "Negative band threshold");
  palette->add_option("--positive-above", pal_pos, "Positive band threshold");
  palette->add_option("--blend", pal_blend, "Stylization blending factor");
  palette->add_option("--selection", pal_selection, "nearest or band");
  palette->add_option("-o,--output", pal_out, "Palette file")->required();

  // story
  std::string st_song, st_bundle, st_out, st_save, st_audio, st_translator, st_view, st_palette, st_dstats, st_vstats;
  std::string st_aggregation, st_scope;
  std::optional<double> st_interval, st_sigma;
  auto* story = app.add_subcommand("story", "Generate a visual story manifest for a song");
  story->add_option("--song", st_song, "WAV file")->required();
  story->add_option("--bundle", st_bundle, "Bundle directory");
  story->add_option("--audio-model", st_audio, "Audio estimator (instead of --bundle)");
  story->add_option("--translator", st_translator, "Translator (instead of --bundle)");
  story->add_option("--view", st_view, "View (instead of --bundle)");
  story->add_option("--palette", st_palette, "Style palette");
  story->add_option("--dataset-stats", st_dstats, "Dataset-level audio z-score statistics");
  story->add_option("--visual-stats", st_vstats, "Visual attribute z-score statistics");
  story->add_option("--save-bundle", st_save, "Write the artifacts used as a bundle directory");
  story->add_option("--interval", st_interval, "Interval length in seconds");
  story->add_option("--aggregation", st_aggregation, "mean or median");
  story->add_option("--scope", st_scope, "song or dataset z-score alignment");
  story->add_option("--sigma", st_sigma, "Latent noise sigma");
  story->add_option("-o,--output", st_out, "Output directory")->required();

  // inspect
  std::string insp_path;
  auto* inspect = app.add_subcommand("inspect", "Summarise an artifact");
  inspect->add_option("path", insp_path, "Artifact file or bundle directory")->required();

  // instability
  std::string inst_pairs;
  std::size_t inst_n = 0;
  std::optional<std::size_t> inst_nk;
  auto* instability = app.add_subcommand("instability", "Distinct classes per attribute cluster");
  instability->add_option("--pairs", inst_pairs, "Pair corpus (default: sample from the backend)");
  instability->add_option("-n,--count", inst_n, "Pairs to sample when --pairs is absent (default 50 * K)");
  instability->add_option("--nk", inst_nk, "Attribute clusters N_K");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    RunConfig cfg = load_config(g);

    if (*features) {
      const auto segment = audio::load_audio(feat_in, cfg.features.sample_rate);
      const auto seq = audio::extract_feature_sequence(segment, cfg.features, std::filesystem::path(feat_in).stem().string());
      audio::write_feature_matrix(feat_out, seq.windows);
      std::cout << "wrote " << seq.size() << " windows x " << seq.windows.cols() << " features to " << feat_out << "\n";
    } else if (*train_audio) {
      const auto data = load_annotated_dataset(ta_csv, ta_dir);
      const auto arch = default_audio_architecture(static_cast<std::size_t>(data.targets.cols()));
      const auto trained = train_mlp_regressor(data.features, data.targets, arch, cfg.audio_training);
      save_regressor(ta_out, trained.model);
      std::cout << "trained on " << data.features.rows() << " windows; final loss " << fmt(trained.loss_trace.back(), 6)
                << "\n";
      if (!ta_stats.empty()) {
        const Eigen::MatrixXd pred = predict(trained.model, data.features);
        std::vector<AttributeVector> rows;
        for (Eigen::Index r = 0; r < pred.rows(); ++r) {
          std::vector<double> v(static_cast<std::size_t>(pred.cols()));
          for (Eigen::Index c = 0; c < pred.cols(); ++c) v[static_cast<std::size_t>(c)] = pred(r, c);
          rows.emplace_back(std::move(v));
        }
        std::ofstream(ta_stats) << serialize_zscore_stats(compute_zscore_stats(rows, ZScoreScope::kDatasetLevel));
      }
    } else if (*sample) {
      auto backend = backend_for(g, cfg);
      const std::size_t n = sample_n ? sample_n : (cfg.view.samples ? cfg.view.samples : 50 * backend.generator->num_classes());
      try {
        const auto pairs = sample_generator_space(*backend.generator, *backend.estimator, n, cfg.view.seed);
        save_pair_corpus(sample_out, pairs);
        std::cout << "wrote " << pairs.size() << " pairs to " << sample_out << "\n";
      } catch (const PartialFailureError& e) {
        save_pair_corpus(sample_out, e.completed());
        std::cerr << "partial corpus of " << e.completed().size() << " pairs written to " << sample_out << "\n";
        throw;
      }
    } else if (*build_view) {
      const auto pairs = load_pair_corpus(bv_pairs);
      const std::size_t nk = bv_nk.value_or(cfg.view.num_clusters);
      const std::size_t ns = bv_ns.value_or(cfg.view.num_subclusters);
      std::optional<std::vector<ClassId>> classes;
      if (!bv_classes.empty()) classes = parse_class_list(bv_classes);
      const auto view = build_attribute_view(pairs, nk, ns, cfg.view.seed, classes);
      save_view(bv_out, view);
      std::cout << "retained " << view.retained_categories.size() << " categories, " << view.smoothed_pairs.size()
                << " smoothed pairs\n";
      if (!bv_stats.empty()) {
        std::vector<AttributeVector> attrs;
        attrs.reserve(pairs.size());
        for (const auto& p : pairs) attrs.push_back(p.attributes);
        std::ofstream(bv_stats) << serialize_zscore_stats(compute_zscore_stats(attrs, ZScoreScope::kDatasetLevel));
      }
    } else if (*train_translator_cmd) {
      const auto view = load_view(tt_view);
      std::size_t k = 0;
      if (tt_k) {
        k = *tt_k;
      } else {
        k = backend_for(g, cfg).generator->num_classes();
      }
      TranslatorConfig tc = cfg.translator;
      if (tt_epochs) tc.epochs = *tt_epochs;
      if (tt_lr) tc.learning_rate = *tt_lr;
      if (tt_lambda) tc.latent_loss_weight = *tt_lambda;
      if (tt_batch) tc.batch_size = *tt_batch;
      const auto trained = vistory::train_translator(view, k, tc);
      save_translator(tt_out, trained.model);
      std::cout << "trained " << tc.epochs << " epochs on " << view.smoothed_pairs.size() << " pairs; final loss "
                << fmt(trained.loss_trace.back(), 6) << "\n";
    } else if (*palette) {
      BandThresholds thresholds = cfg.thresholds;
      if (pal_neg) thresholds.negative_below = *pal_neg;
      if (pal_pos) thresholds.positive_above = *pal_pos;
      const double blend = pal_blend.value_or(cfg.blend);
      StylePalette result;
      if (!pal_styles.empty()) {
        auto backend = backend_for(g, cfg);
        std::vector<StyleImage> images;
        for (const auto& path : pal_styles) images.push_back({path, read_image_file(path)});
        result = build_style_palette(images, *backend.estimator, thresholds, blend);
      } else if (pal_style_at.empty()) {
        throw InsufficientDataError("palette needs at least one --style or --style-at");
      }
      result.thresholds = thresholds;
      result.blend = blend;
      thresholds.validate();
      for (const auto& spec : pal_style_at) result.entries.push_back(parse_style_at(spec, result.entries.size()));
      result.selection = pal_selection.empty() ? cfg.selection : style_selection_from_string(pal_selection);
      save_palette(pal_out, result);
      std::cout << "palette with " << result.entries.size() << " styles written to " << pal_out << "\n";
    } else if (*story) {
      Bundle bundle;
      if (!st_bundle.empty()) {
        bundle = load_bundle(st_bundle);
      } else {
        if (st_audio.empty() || st_translator.empty() || st_view.empty()) {
          throw ConfigError("story needs --bundle or all of --audio-model, --translator and --view");
        }
        bundle.features = cfg.features;
        bundle.audio_estimator = load_regressor(st_audio);
        bundle.translator = load_translator(st_translator);
        bundle.view = load_view(st_view);
      }
      if (!st_palette.empty()) bundle.palette = load_palette(st_palette);
      auto read_stats = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ArtifactError("z-score stats", "cannot open '" + path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_zscore_stats(ss.str());
      };
      if (!st_dstats.empty()) bundle.dataset_stats = read_stats(st_dstats);
      if (!st_vstats.empty()) bundle.visual_stats = read_stats(st_vstats);
      if (!st_save.empty()) save_bundle(st_save, bundle);

      StoryConfig sc = cfg.story;
      if (st_interval) sc.interval_seconds = *st_interval;
      if (!st_aggregation.empty()) sc.aggregation = aggregation_from_string(st_aggregation);
      if (!st_scope.empty()) sc.scope = zscore_scope_from_string(st_scope);
      if (st_sigma) sc.noise_sigma = *st_sigma;
      sc.output_dir = st_out;
      auto backend = backend_for(g, cfg);
      const auto manifest = generate_story(st_song, bundle, *backend.generator, sc);
      std::cout << "wrote " << manifest.frames.size() << " frames to " << (sc.output_dir / "manifest.json").string() << "\n";
    } else if (*inspect) {
      inspect_file(insp_path);
    } else if (*instability) {
      std::vector<SamplePair> pairs;
      if (!inst_pairs.empty()) {
        pairs = load_pair_corpus(inst_pairs);
      } else {
        auto backend = backend_for(g, cfg);
        const std::size_t n = inst_n ? inst_n : 50 * backend.generator->num_classes();
        pairs = sample_generator_space(*backend.generator, *backend.estimator, n, cfg.view.seed);
      }
      const std::size_t nk = inst_nk.value_or(cfg.view.num_clusters);
      const auto counts = instability_histogram(pairs, nk, cfg.view.seed);
      for (std::size_t c = 0; c < counts.size(); ++c) std::cout << "cluster " << c << ": " << counts[c] << " classes\n";
      std::cout << "median " << fmt(median(counts), 1) << ", mean " << fmt(mean(counts), 2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
