// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json_support.hpp"
#include "vistory/errors.hpp"
#include "vistory/feature_io.hpp"
#include "vistory/random.hpp"

namespace vistory {

namespace {

constexpr std::string_view kRegressorArtifact = "audio estimator";
constexpr std::string_view kStatsArtifact = "z-score stats";

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

void TrainingConfig::validate() const {
  if (schedule.empty()) throw ConfigError("training schedule is empty");
  for (const auto& phase : schedule) {
    if (phase.epochs == 0) throw ConfigError("training phase with zero epochs");
    if (!(phase.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }
  if (batch_size == 0) throw ConfigError("batch size must be positive");
}

std::size_t TrainingConfig::total_epochs() const noexcept {
  std::size_t n = 0;
  for (const auto& phase : schedule) n += phase.epochs;
  return n;
}

std::vector<nn::LayerSpec> default_audio_architecture(std::size_t attribute_dim) {
  return {{256, nn::Activation::kSigmoid}, {attribute_dim, nn::Activation::kIdentity}};
}

TrainedRegressor train_mlp_regressor(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                                     std::span<const nn::LayerSpec> architecture, const TrainingConfig& cfg) {
  cfg.validate();
  if (features.rows() != targets.rows()) {
    throw DimensionError("training targets", static_cast<std::size_t>(features.rows()),
                         static_cast<std::size_t>(targets.rows()));
  }
  const auto rows = static_cast<std::size_t>(features.rows());
  if (rows < cfg.batch_size) {
    throw InsufficientDataError("training set has " + std::to_string(rows) + " rows, fewer than the batch size " +
                                std::to_string(cfg.batch_size));
  }
  if (architecture.empty() || architecture.back().units != static_cast<std::size_t>(targets.cols())) {
    throw DimensionError("regressor output", static_cast<std::size_t>(targets.cols()),
                         architecture.empty() ? 0 : architecture.back().units);
  }

  Rng init_rng(derive_seed(cfg.seed, 0));
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  TrainedRegressor result;
  result.model.network = nn::Mlp::random(static_cast<std::size_t>(features.cols()), architecture, init_rng);
  nn::Adam adam(cfg.adam);
  auto params = nn::parameters(result.model.network);

  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  nn::Mlp::Trace trace;
  std::size_t epoch = 0;
  for (const auto& phase : cfg.schedule) {
    for (std::size_t e = 0; e < phase.epochs; ++e, ++epoch) {
      shuffle_rng.shuffle(std::span<std::size_t>(order));
      double epoch_loss = 0.0;
      for (std::size_t start = 0; start < rows; start += cfg.batch_size) {
        const std::size_t count = std::min(cfg.batch_size, rows - start);
        const std::span<const std::size_t> batch(order.data() + start, count);
        const Eigen::MatrixXd x = gather_rows(features, batch);
        const Eigen::MatrixXd y = gather_rows(targets, batch);
        const Eigen::MatrixXd out = result.model.network.forward(x, trace);
        const nn::LossResult loss = nn::mse_loss(out, y);
        if (!std::isfinite(loss.value)) throw TrainingDivergedError("audio regressor loss is not finite", epoch);
        epoch_loss += loss.value * static_cast<double>(count);
        const auto grads = result.model.network.backward(trace, loss.grad);
        adam.step(params, nn::gradients(grads), phase.learning_rate);
      }
      result.loss_trace.push_back(epoch_loss / static_cast<double>(rows));
    }
  }

  auto& meta = result.model.training_meta;
  meta["loss"] = "mse";
  meta["optimizer"] = "adam";
  meta["epochs"] = std::to_string(cfg.total_epochs());
  meta["batch_size"] = std::to_string(cfg.batch_size);
  meta["seed"] = std::to_string(cfg.seed);
  meta["rows"] = std::to_string(rows);
  meta["final_loss"] = std::to_string(result.loss_trace.back());
  return result;
}

Eigen::MatrixXd predict(const MlpRegressor& model, const Eigen::MatrixXd& features) {
  return model.network.forward(features);
}

std::vector<AttributeVector> predict_attributes(const MlpRegressor& model, const audio::FeatureSequence& features) {
  if (static_cast<std::size_t>(features.windows.cols()) != model.input_dim()) {
    throw DimensionError("feature width", model.input_dim(), static_cast<std::size_t>(features.windows.cols()));
  }
  const Eigen::MatrixXd out = predict(model, features.windows);
  std::vector<AttributeVector> result;
  result.reserve(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    std::vector<double> values(static_cast<std::size_t>(out.cols()));
    for (Eigen::Index c = 0; c < out.cols(); ++c) values[static_cast<std::size_t>(c)] = out(r, c);
    result.emplace_back(std::move(values));
  }
  return result;
}

std::string_view to_string(ZScoreScope scope) {
  return scope == ZScoreScope::kSongLevel ? "song" : "dataset";
}

ZScoreScope zscore_scope_from_string(std::string_view tag) {
  if (tag == "song" || tag == "song_level") return ZScoreScope::kSongLevel;
  if (tag == "dataset" || tag == "dataset_level") return ZScoreScope::kDatasetLevel;
  throw ConfigError("unknown z-score scope '" + std::string(tag) + "'");
}

ZScoreStats compute_zscore_stats(std::span<const AttributeVector> vectors, ZScoreScope scope) {
  if (vectors.size() < 2) throw InsufficientDataError("z-score statistics need at least two vectors");
  const std::size_t dim = vectors.front().size();
  ZScoreStats stats;
  stats.scope = scope;
  stats.mean.assign(dim, 0.0);
  stats.stddev.assign(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DimensionError("z-score input", dim, v.size());
    for (std::size_t i = 0; i < dim; ++i) stats.mean[i] += v[i];
  }
  const auto n = static_cast<double>(vectors.size());
  for (double& m : stats.mean) m /= n;
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < dim; ++i) stats.stddev[i] += (v[i] - stats.mean[i]) * (v[i] - stats.mean[i]);
  }
  for (double& s : stats.stddev) s = std::max(std::sqrt(s / n), ZScoreStats::kStdFloor);
  return stats;
}

std::vector<AttributeVector> zscore_align(std::span<const AttributeVector> vectors, const ZScoreStats& stats) {
  std::vector<AttributeVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != stats.mean.size()) throw DimensionError("z-score align", stats.mean.size(), v.size());
    std::vector<double> values(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) values[i] = (v[i] - stats.mean[i]) / stats.stddev[i];
    out.emplace_back(std::move(values));
  }
  return out;
}

std::vector<AttributeVector> zscore_unalign(std::span<const AttributeVector> vectors, const ZScoreStats& stats) {
  std::vector<AttributeVector> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != stats.mean.size()) throw DimensionError("z-score unalign", stats.mean.size(), v.size());
    std::vector<double> values(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) values[i] = v[i] * stats.stddev[i] + stats.mean[i];
    out.emplace_back(std::move(values));
  }
  return out;
}

double gradient_check(const nn::Mlp& model, const Eigen::MatrixXd& inputs,
                      const std::function<nn::LossResult(const Eigen::MatrixXd&)>& loss, double step) {
  nn::Mlp probe = model;
  nn::Mlp::Trace trace;
  const Eigen::MatrixXd out = probe.forward(inputs, trace);
  const auto grads = probe.backward(trace, loss(out).grad);
  return nn::finite_difference_check(nn::parameters(probe), nn::gradients(grads),
                                     [&] { return loss(probe.forward(inputs)).value; }, step);
}

std::vector<AttributeVector> VisualAttributeEstimator::estimate_batch(std::span<const ImageHandle> images) {
  std::vector<AttributeVector> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(estimate(image));
  return out;
}

AnnotatedDataset load_annotated_dataset(const std::filesystem::path& annotations_csv,
                                        const std::filesystem::path& features_dir) {
  std::ifstream in(annotations_csv);
  if (!in) throw IoError("cannot open annotations " + annotations_csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("annotations: empty file");
  const auto header = split_csv_line(line);
  if (header.size() != 3 || header[0] != "id" || header[1] != "valence" || header[2] != "arousal") {
    throw FormatError("annotations: expected header 'id,valence,arousal'");
  }

  std::vector<Eigen::MatrixXd> blocks;
  std::vector<std::array<double, 2>> labels;
  AnnotatedDataset data;
  std::size_t line_no = 1;
  Eigen::Index total_rows = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw FormatError("annotations line " + std::to_string(line_no) + ": expected 3 fields");
    double valence = 0.0, arousal = 0.0;
    try {
      valence = std::stod(fields[1]);
      arousal = std::stod(fields[2]);
    } catch (const std::exception&) {
      throw FormatError("annotations line " + std::to_string(line_no) + ": non-numeric annotation");
    }
    Eigen::MatrixXd block = audio::read_feature_matrix(features_dir / (fields[0] + ".dsft"));
    if (width >= 0 && block.cols() != width) {
      throw DimensionError("feature file " + fields[0], static_cast<std::size_t>(width),
                           static_cast<std::size_t>(block.cols()));
    }
    width = block.cols();
    total_rows += block.rows();
    for (Eigen::Index r = 0; r < block.rows(); ++r) data.row_ids.push_back(fields[0]);
    labels.push_back({valence, arousal});
    blocks.push_back(std::move(block));
  }
  if (blocks.empty()) throw InsufficientDataError("annotations: no rows");

  data.features.resize(total_rows, width);
  data.targets.resize(total_rows, 2);
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    data.features.middleRows(row, blocks[b].rows()) = blocks[b];
    for (Eigen::Index r = 0; r < blocks[b].rows(); ++r) {
      data.targets(row + r, 0) = labels[b][0];
      data.targets(row + r, 1) = labels[b][1];
    }
    row += blocks[b].rows();
  }
  return data;
}

std::string serialize_regressor(const MlpRegressor& model) {
  detail::json doc = {{"version", detail::kArtifactVersion}, {"kind", "mlp_regressor"}};
  const detail::json network = detail::mlp_to_json(model.network);
  detail::json arch = detail::json::array();
  for (const auto& layer : model.network.layers()) {
    arch.push_back({{"inputs", layer.inputs()}, {"outputs", layer.outputs()}, {"activation", nn::to_string(layer.activation)}});
  }
  doc["arch"] = {{"input_dim", model.network.input_dim()}, {"layers", arch}};
  doc["weights"] = network["layers"];
  doc["training_meta"] = model.training_meta;
  return doc.dump(2);
}

MlpRegressor parse_regressor(std::string_view json_text) {
  const auto doc = detail::parse_json(json_text, kRegressorArtifact);
  detail::require_header(doc, "mlp_regressor", kRegressorArtifact);
  const auto arch = detail::get_field<detail::json>(doc, "arch", kRegressorArtifact);
  detail::json network = {{"input_dim", detail::get_field<std::size_t>(arch, "input_dim", kRegressorArtifact)},
                          {"layers", detail::get_field<detail::json>(doc, "weights", kRegressorArtifact)}};
  MlpRegressor model;
  model.network = detail::mlp_from_json(network, kRegressorArtifact);
  if (doc.contains("training_meta")) {
    model.training_meta = detail::get_field<std::map<std::string, std::string>>(doc, "training_meta", kRegressorArtifact);
  }
  return model;
}

void save_regressor(const std::filesystem::path& path, const MlpRegressor& model) {
  detail::write_text_file(path, serialize_regressor(model));
}

MlpRegressor load_regressor(const std::filesystem::path& path) {
  return parse_regressor(detail::read_text_file(path, kRegressorArtifact));
}

std::string serialize_zscore_stats(const ZScoreStats& stats) {
  const detail::json doc = {{"version", detail::kArtifactVersion},
                            {"kind", "zscore_stats"},
                            {"scope", to_string(stats.scope)},
                            {"mean", stats.mean},
                            {"std", stats.stddev}};
  return doc.dump(2);
}

ZScoreStats parse_zscore_stats(std::string_view json_text) {
  const auto doc = detail::parse_json(json_text, kStatsArtifact);
  detail::require_header(doc, "zscore_stats", kStatsArtifact);
  ZScoreStats stats;
  stats.scope = zscore_scope_from_string(detail::get_field<std::string>(doc, "scope", kStatsArtifact));
  stats.mean = detail::get_field<std::vector<double>>(doc, "mean", kStatsArtifact);
  stats.stddev = detail::get_field<std::vector<double>>(doc, "std", kStatsArtifact);
  if (stats.mean.size() != stats.stddev.size()) throw DimensionError("z-score stats", stats.mean.size(), stats.stddev.size());
  for (double& s : stats.stddev) s = std::max(s, ZScoreStats::kStdFloor);
  return stats;
}

}  // namespace vistory
