// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "json_support.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "vistory/codec.hpp"
#include "vistory/errors.hpp"

namespace vistory::detail {

json parse_json(std::string_view text, std::string_view artifact) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(artifact) + ": malformed JSON", e.byte);
  }
}

std::string read_text_file(const std::filesystem::path& path, std::string_view artifact) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError(std::string(artifact), "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void throw_format(std::string_view artifact, const std::string& what) {
  throw FormatError(std::string(artifact) + ": " + what);
}

void require_header(const json& doc, std::string_view kind, std::string_view artifact) {
  if (!doc.is_object()) throw_format(artifact, "expected a JSON object");
  if (!doc.contains("version")) throw_format(artifact, "missing version");
  const auto version = get_field<int>(doc, "version", artifact);
  if (version != kArtifactVersion) {
    throw VersionError(std::string(artifact) + ": unsupported version " + std::to_string(version) +
                       " (expected " + std::to_string(kArtifactVersion) + ")");
  }
  const auto found = get_field<std::string>(doc, "kind", artifact);
  if (found != kind) throw_format(artifact, "expected kind '" + std::string(kind) + "', found '" + found + "'");
}

json layer_to_json(const nn::DenseLayer& layer) {
  // Row-major weights regardless of Eigen's storage order.
  std::vector<double> weights;
  weights.reserve(static_cast<std::size_t>(layer.weights.size()));
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) weights.push_back(layer.weights(r, c));
  }
  std::vector<double> bias(layer.bias.data(), layer.bias.data() + layer.bias.size());
  return json{{"inputs", layer.inputs()},
              {"outputs", layer.outputs()},
              {"activation", nn::to_string(layer.activation)},
              {"weights", codec::encode_f32_base64(weights)},
              {"bias", codec::encode_f32_base64(bias)}};
}

nn::DenseLayer layer_from_json(const json& doc, std::string_view artifact) {
  nn::DenseLayer layer;
  const auto inputs = get_field<Eigen::Index>(doc, "inputs", artifact);
  const auto outputs = get_field<Eigen::Index>(doc, "outputs", artifact);
  if (inputs <= 0 || outputs <= 0) throw_format(artifact, "layer dimensions must be positive");
  try {
    layer.activation = nn::activation_from_string(get_field<std::string>(doc, "activation", artifact));
  } catch (const FormatError& e) {
    throw_format(artifact, e.what());
  }
  const auto weights = codec::decode_f32_base64(get_field<std::string>(doc, "weights", artifact));
  const auto bias = codec::decode_f32_base64(get_field<std::string>(doc, "bias", artifact));
  if (weights.size() != static_cast<std::size_t>(inputs * outputs) ||
      bias.size() != static_cast<std::size_t>(outputs)) {
    throw_format(artifact, "weight array sizes do not match layer dimensions");
  }
  layer.weights.resize(outputs, inputs);
  for (Eigen::Index r = 0; r < outputs; ++r) {
    for (Eigen::Index c = 0; c < inputs; ++c) layer.weights(r, c) = weights[static_cast<std::size_t>(r * inputs + c)];
  }
  layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), outputs);
  return layer;
}

json mlp_to_json(const nn::Mlp& mlp) {
  json layers = json::array();
  for (const auto& layer : mlp.layers()) layers.push_back(layer_to_json(layer));
  return json{{"input_dim", mlp.input_dim()}, {"layers", layers}};
}

nn::Mlp mlp_from_json(const json& doc, std::string_view artifact) {
  const auto input_dim = get_field<std::size_t>(doc, "input_dim", artifact);
  std::vector<nn::DenseLayer> layers;
  for (const auto& layer : get_field<json>(doc, "layers", artifact)) layers.push_back(layer_from_json(layer, artifact));
  try {
    return nn::Mlp(input_dim, std::move(layers));
  } catch (const DimensionError& e) {
    throw_format(artifact, e.what());
  }
}

json f32_array(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(static_cast<float>(v));
  return out;
}

std::vector<double> f32_vector(const json& doc, std::string_view artifact) {
  if (!doc.is_array()) throw_format(artifact, "expected a number array");
  std::vector<double> out;
  out.reserve(doc.size());
  for (const auto& v : doc) {
    if (!v.is_number()) throw_format(artifact, "expected a number array");
    out.push_back(static_cast<double>(v.get<float>()));
  }
  return out;
}

json generator_to_json(const GeneratorVector& generator) {
  return json{{"class_id", generator.class_id()}, {"latent", f32_array(generator.latent())}};
}

GeneratorVector generator_from_json(const json& doc, std::string_view artifact) {
  return GeneratorVector(get_field<ClassId>(doc, "class_id", artifact),
                         f32_vector(get_field<json>(doc, "latent", artifact), artifact));
}

}  // namespace vistory::detail
