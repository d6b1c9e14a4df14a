// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/translator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json_support.hpp"
#include "vistory/errors.hpp"

namespace vistory {

namespace {

constexpr std::string_view kArtifact = "translator";

Eigen::MatrixXd rows_of(std::span<const AttributeVector> vectors) {
  const std::size_t na = vectors.empty() ? 0 : vectors.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(na));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != na) throw DimensionError("attribute vector", na, vectors[i].size());
    for (std::size_t j = 0; j < na; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i][j];
  }
  return m;
}

ClassId masked_argmax(const TranslationModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& probabilities) {
  ClassId best = model.retained_classes.front();
  double best_p = -std::numeric_limits<double>::infinity();
  for (ClassId id : model.retained_classes) {
    const double p = probabilities(static_cast<Eigen::Index>(id));
    if (p > best_p) {
      best_p = p;
      best = id;
    }
  }
  return best;
}

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

}  // namespace

void TranslatorConfig::validate() const {
  if (epochs == 0) throw ConfigError("translator epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("translator learning rate must be positive");
  if (!(latent_loss_weight >= 0.0)) throw ConfigError("latent loss weight must be non-negative");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
}

TranslationModel make_translator(std::size_t attribute_dim, std::size_t num_classes, std::size_t latent_dim,
                                 std::vector<ClassId> retained_classes, std::uint64_t seed) {
  if (attribute_dim == 0 || num_classes == 0 || latent_dim == 0) {
    throw ConfigError("translator dimensions must be positive");
  }
  std::sort(retained_classes.begin(), retained_classes.end());
  retained_classes.erase(std::unique(retained_classes.begin(), retained_classes.end()), retained_classes.end());
  if (retained_classes.empty()) throw ConfigError("translator needs at least one retained class");
  if (retained_classes.back() >= num_classes) throw DomainError("retained class outside [0, K)");

  Rng rng(derive_seed(seed, 0));
  const nn::LayerSpec trunk_specs[] = {{64, nn::Activation::kSigmoid}, {256, nn::Activation::kSigmoid}};
  TranslationModel model;
  model.trunk = nn::Mlp::random(attribute_dim, trunk_specs, rng);
  model.class_head = nn::make_dense(256, num_classes, nn::Activation::kSoftmax, rng);
  model.latent_head = nn::make_dense(256, latent_dim, nn::Activation::kIdentity, rng);
  model.retained_classes = std::move(retained_classes);
  return model;
}

TranslatorOutputs forward(const TranslationModel& model, const Eigen::MatrixXd& attributes) {
  if (static_cast<std::size_t>(attributes.cols()) != model.attribute_dim()) {
    throw DimensionError("translator input", model.attribute_dim(), static_cast<std::size_t>(attributes.cols()));
  }
  TranslatorOutputs out;
  out.hidden = model.trunk.forward(attributes, out.trunk_trace);
  out.probabilities = model.class_head.forward(out.hidden);
  out.latents = model.latent_head.forward(out.hidden);
  return out;
}

CompositeLoss composite_loss(const TranslatorOutputs& outputs, std::span<const ClassId> classes,
                             const Eigen::MatrixXd& latent_targets, double latent_weight) {
  if (latent_targets.rows() != outputs.latents.rows() || latent_targets.cols() != outputs.latents.cols()) {
    throw DimensionError("latent targets", static_cast<std::size_t>(outputs.latents.size()),
                         static_cast<std::size_t>(latent_targets.size()));
  }
  const nn::LossResult ce = nn::cross_entropy_loss(outputs.probabilities, classes);
  const auto rows = static_cast<double>(outputs.latents.rows());
  const Eigen::MatrixXd diff = outputs.latents - latent_targets;
  CompositeLoss loss;
  loss.cross_entropy = ce.value;
  loss.latent_error = diff.squaredNorm() / rows;
  loss.value = loss.cross_entropy + latent_weight * loss.latent_error;
  loss.grad_probabilities = ce.grad;
  loss.grad_latents = (2.0 * latent_weight / rows) * diff;
  return loss;
}

std::vector<std::span<double>> parameters(TranslationModel& model) {
  auto params = nn::parameters(model.trunk);
  nn::append_parameters(model.class_head, params);
  nn::append_parameters(model.latent_head, params);
  return params;
}

std::vector<nn::DenseGrad> composite_gradients(const TranslationModel& model, const TranslatorOutputs& outputs,
                                               const CompositeLoss& loss) {
  Eigen::MatrixXd grad_hidden_class;
  Eigen::MatrixXd grad_hidden_latent;
  nn::DenseGrad class_grad = nn::dense_backward(model.class_head, outputs.hidden, outputs.probabilities,
                                                loss.grad_probabilities, &grad_hidden_class);
  nn::DenseGrad latent_grad =
      nn::dense_backward(model.latent_head, outputs.hidden, outputs.latents, loss.grad_latents, &grad_hidden_latent);
  auto grads = model.trunk.backward(outputs.trunk_trace, grad_hidden_class + grad_hidden_latent);
  grads.push_back(std::move(class_grad));
  grads.push_back(std::move(latent_grad));
  return grads;
}

double translator_gradient_check(TranslationModel model, const Eigen::MatrixXd& attributes,
                                 std::span<const ClassId> classes, const Eigen::MatrixXd& latent_targets,
                                 double latent_weight, double step) {
  const auto outputs = forward(model, attributes);
  const auto loss = composite_loss(outputs, classes, latent_targets, latent_weight);
  const auto grads = composite_gradients(model, outputs, loss);
  return nn::finite_difference_check(parameters(model), nn::gradients(grads), [&] {
    return composite_loss(forward(model, attributes), classes, latent_targets, latent_weight).value;
  }, step);
}

TrainedTranslator train_translator(const AttributeView& view, std::size_t num_classes, const TranslatorConfig& cfg) {
  cfg.validate();
  if (view.smoothed_pairs.empty()) throw InsufficientDataError("attribute view has no smoothed pairs");
  for (ClassId id : view.retained_categories) {
    if (id >= num_classes) throw DomainError("view class " + std::to_string(id) + " outside [0, K)");
  }
  const std::size_t n = view.smoothed_pairs.size();
  const std::size_t na = view.attribute_dim();
  const std::size_t d = view.latent_dim();

  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(na));
  Eigen::MatrixXd latents(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<ClassId> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pair = view.smoothed_pairs[i];
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < na; ++j) inputs(r, static_cast<Eigen::Index>(j)) = pair.attributes[j];
    const auto z = pair.generator.latent();
    for (std::size_t j = 0; j < d; ++j) latents(r, static_cast<Eigen::Index>(j)) = z[j];
    classes[i] = pair.generator.class_id();
  }

  TrainedTranslator result;
  result.model = make_translator(na, num_classes, d, view.retained_categories, cfg.seed);
  auto& model = result.model;
  auto params = parameters(model);
  nn::Adam adam(cfg.adam);
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd x;
  Eigen::MatrixXd z;
  std::vector<ClassId> y;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) shuffle_rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      x.resize(static_cast<Eigen::Index>(count), inputs.cols());
      z.resize(static_cast<Eigen::Index>(count), latents.cols());
      y.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto src = static_cast<Eigen::Index>(order[start + i]);
        x.row(static_cast<Eigen::Index>(i)) = inputs.row(src);
        z.row(static_cast<Eigen::Index>(i)) = latents.row(src);
        y[i] = classes[order[start + i]];
      }
      const auto outputs = forward(model, x);
      const auto loss = composite_loss(outputs, y, z, cfg.latent_loss_weight);
      if (!std::isfinite(loss.value)) throw TrainingDivergedError("translator loss is not finite", epoch);
      const auto grads = composite_gradients(model, outputs, loss);
      adam.step(params, nn::gradients(grads), cfg.learning_rate);
      epoch_loss += loss.value;
      ++steps;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(steps));
  }

  auto& meta = model.training_meta;
  meta["loss"] = "cross_entropy+lambda*l2";
  meta["epochs"] = std::to_string(cfg.epochs);
  meta["learning_rate"] = std::to_string(cfg.learning_rate);
  meta["latent_loss_weight"] = std::to_string(cfg.latent_loss_weight);
  meta["batch_size"] = std::to_string(batch);
  meta["seed"] = std::to_string(cfg.seed);
  meta["pairs"] = std::to_string(n);
  meta["final_loss"] = std::to_string(result.loss_trace.back());
  return result;
}

GeneratorVector translate(const TranslationModel& model, const AttributeVector& attributes, double sigma, Rng& rng) {
  if (attributes.size() != model.attribute_dim()) {
    throw DimensionError("translator input", model.attribute_dim(), attributes.size());
  }
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(attributes.size()));
  for (std::size_t j = 0; j < attributes.size(); ++j) x(0, static_cast<Eigen::Index>(j)) = attributes[j];
  const auto out = forward(model, x);
  std::vector<double> latent = row_vector(out.latents, 0);
  if (sigma > 0.0) {
    for (double& v : latent) v += sigma * rng.normal();
  }
  return GeneratorVector(masked_argmax(model, out.probabilities.row(0)), std::move(latent));
}

std::vector<GeneratorVector> translate_all(const TranslationModel& model, std::span<const AttributeVector> attributes) {
  std::vector<GeneratorVector> result;
  if (attributes.empty()) return result;
  const Eigen::MatrixXd x = rows_of(attributes);
  if (static_cast<std::size_t>(x.cols()) != model.attribute_dim()) {
    throw DimensionError("translator input", model.attribute_dim(), static_cast<std::size_t>(x.cols()));
  }
  const auto out = forward(model, x);
  result.reserve(attributes.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    result.emplace_back(masked_argmax(model, out.probabilities.row(r)), row_vector(out.latents, r));
  }
  return result;
}

RoundTrip roundtrip_divergence(const TranslationModel& model, GeneratorBackend& backend,
                               VisualAttributeEstimator& estimator, std::span<const AttributeVector> attributes) {
  RoundTrip rt;
  if (attributes.empty()) return rt;
  const auto generators = translate_all(model, attributes);
  const auto images = backend.generate_batch(generators);
  const auto recovered = estimator.estimate_batch(images);
  rt.divergences.reserve(attributes.size());
  for (std::size_t i = 0; i < attributes.size(); ++i) {
    const double d = divergence(attributes[i], recovered[i]);
    rt.divergences.push_back(d);
    rt.mean += d;
    rt.max = std::max(rt.max, d);
  }
  rt.mean /= static_cast<double>(attributes.size());
  return rt;
}

std::string serialize_translator(const TranslationModel& model) {
  const detail::json doc = {{"version", detail::kArtifactVersion},
                            {"kind", "translation_model"},
                            {"trunk", detail::mlp_to_json(model.trunk)},
                            {"heads", {{"class", detail::layer_to_json(model.class_head)},
                                       {"latent", detail::layer_to_json(model.latent_head)}}},
                            {"retained_classes", model.retained_classes},
                            {"training_meta", model.training_meta}};
  return doc.dump(2);
}

TranslationModel parse_translator(std::string_view json_text) {
  const auto doc = detail::parse_json(json_text, kArtifact);
  detail::require_header(doc, "translation_model", kArtifact);
  TranslationModel model;
  model.trunk = detail::mlp_from_json(detail::get_field<detail::json>(doc, "trunk", kArtifact), kArtifact);
  const auto heads = detail::get_field<detail::json>(doc, "heads", kArtifact);
  model.class_head = detail::layer_from_json(detail::get_field<detail::json>(heads, "class", kArtifact), kArtifact);
  model.latent_head = detail::layer_from_json(detail::get_field<detail::json>(heads, "latent", kArtifact), kArtifact);
  const auto hidden = static_cast<Eigen::Index>(model.trunk.output_dim());
  if (model.class_head.inputs() != hidden || model.latent_head.inputs() != hidden) {
    detail::throw_format(kArtifact, "head inputs do not match the trunk output");
  }
  if (model.class_head.activation != nn::Activation::kSoftmax) detail::throw_format(kArtifact, "class head must be softmax");
  model.retained_classes = detail::get_field<std::vector<ClassId>>(doc, "retained_classes", kArtifact);
  if (model.retained_classes.empty() || !std::is_sorted(model.retained_classes.begin(), model.retained_classes.end()) ||
      model.retained_classes.back() >= model.num_classes()) {
    detail::throw_format(kArtifact, "retained_classes must be non-empty, ascending and below K");
  }
  if (doc.contains("training_meta")) {
    model.training_meta = detail::get_field<std::map<std::string, std::string>>(doc, "training_meta", kArtifact);
  }
  return model;
}

void save_translator(const std::filesystem::path& path, const TranslationModel& model) {
  detail::write_text_file(path, serialize_translator(model));
}

TranslationModel load_translator(const std::filesystem::path& path) {
  return parse_translator(detail::read_text_file(path, kArtifact));
}

}  // namespace vistory
