// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#include "vistory/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vistory/errors.hpp"

namespace vistory::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kSoftmax:
      return "softmax";
  }
  return "identity";
}

Activation activation_from_string(std::string_view tag) {
  if (tag == "identity") return Activation::kIdentity;
  if (tag == "sigmoid") return Activation::kSigmoid;
  if (tag == "softmax") return Activation::kSoftmax;
  throw FormatError("unknown activation '" + std::string(tag) + "'");
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return pre;
    case Activation::kSigmoid:
      return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    case Activation::kSoftmax: {
      Eigen::MatrixXd out(pre.rows(), pre.cols());
      for (Eigen::Index r = 0; r < pre.rows(); ++r) {
        const double peak = pre.row(r).maxCoeff();
        out.row(r) = (pre.row(r).array() - peak).exp().matrix();
        out.row(r) /= out.row(r).sum();
      }
      return out;
    }
  }
  return pre;
}

Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& grad_y,
                                    Activation activation) {
  switch (activation) {
    case Activation::kIdentity:
      return grad_y;
    case Activation::kSigmoid:
      return (grad_y.array() * y.array() * (1.0 - y.array())).matrix();
    case Activation::kSoftmax: {
      // Jacobian-vector product: dz = y * (g - <g, y>).
      const Eigen::VectorXd inner = (grad_y.array() * y.array()).rowwise().sum();
      return (y.array() * (grad_y.colwise() - inner).array()).matrix();
    }
  }
  return grad_y;
}

Eigen::MatrixXd DenseLayer::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd pre = x * weights.transpose();
  pre.rowwise() += bias.transpose();
  return activate(pre, activation);
}

DenseGrad dense_backward(const DenseLayer& layer, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::MatrixXd& grad_y, Eigen::MatrixXd* grad_x) {
  const Eigen::MatrixXd grad_pre = activation_backward(y, grad_y, layer.activation);
  DenseGrad grad;
  grad.weights = grad_pre.transpose() * x;
  grad.bias = grad_pre.colwise().sum().transpose();
  if (grad_x != nullptr) *grad_x = grad_pre * layer.weights;
  return grad;
}

DenseLayer make_dense(std::size_t inputs, std::size_t outputs, Activation activation, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(inputs + outputs));
  DenseLayer layer;
  layer.weights.resize(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(inputs));
  // Filled row by row so the draw order does not depend on storage order.
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
  }
  layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outputs));
  layer.activation = activation;
  return layer;
}

Mlp::Mlp(std::size_t input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  auto expected = static_cast<Eigen::Index>(input_dim_);
  for (const auto& layer : layers_) {
    if (layer.inputs() != expected) {
      throw DimensionError("mlp layer input", static_cast<std::size_t>(expected),
                           static_cast<std::size_t>(layer.inputs()));
    }
    if (layer.bias.size() != layer.outputs()) {
      throw DimensionError("mlp layer bias", static_cast<std::size_t>(layer.outputs()),
                           static_cast<std::size_t>(layer.bias.size()));
    }
    expected = layer.outputs();
  }
}

Mlp Mlp::random(std::size_t input_dim, std::span<const LayerSpec> specs, Rng& rng) {
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  for (const auto& spec : specs) {
    layers.push_back(make_dense(in, spec.units, spec.activation, rng));
    in = spec.units;
  }
  return Mlp(input_dim, std::move(layers));
}

std::size_t Mlp::output_dim() const noexcept {
  return layers_.empty() ? input_dim_ : static_cast<std::size_t>(layers_.back().outputs());
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim_) {
    throw DimensionError("mlp input", input_dim_, static_cast<std::size_t>(x.cols()));
  }
  Eigen::MatrixXd h = x;
  for (const auto& layer : layers_) h = layer.forward(h);
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Trace& trace) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim_) {
    throw DimensionError("mlp input", input_dim_, static_cast<std::size_t>(x.cols()));
  }
  trace.activations.clear();
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(x);
  for (const auto& layer : layers_) trace.activations.push_back(layer.forward(trace.activations.back()));
  return trace.activations.back();
}

std::vector<DenseGrad> Mlp::backward(const Trace& trace, const Eigen::MatrixXd& grad_output,
                                     Eigen::MatrixXd* grad_input) const {
  std::vector<DenseGrad> grads(layers_.size());
  Eigen::MatrixXd grad = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Eigen::MatrixXd grad_x;
    const bool need_input = i > 0 || grad_input != nullptr;
    grads[i] = dense_backward(layers_[i], trace.activations[i], trace.activations[i + 1], grad,
                              need_input ? &grad_x : nullptr);
    grad = std::move(grad_x);
  }
  if (grad_input != nullptr) *grad_input = std::move(grad);
  return grads;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

void append_parameters(DenseLayer& layer, std::vector<std::span<double>>& out) {
  out.emplace_back(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()));
  out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
}

void append_parameters(const DenseGrad& grad, std::vector<std::span<const double>>& out) {
  out.emplace_back(grad.weights.data(), static_cast<std::size_t>(grad.weights.size()));
  out.emplace_back(grad.bias.data(), static_cast<std::size_t>(grad.bias.size()));
}

std::vector<std::span<double>> parameters(Mlp& mlp) {
  std::vector<std::span<double>> out;
  for (auto& layer : mlp.mutable_layers()) append_parameters(layer, out);
  return out;
}

std::vector<std::span<const double>> gradients(const std::vector<DenseGrad>& grads) {
  std::vector<std::span<const double>> out;
  for (const auto& g : grads) append_parameters(g, out);
  return out;
}

LossResult mse_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols()) {
    throw DimensionError("mse target", static_cast<std::size_t>(output.size()),
                         static_cast<std::size_t>(target.size()));
  }
  const Eigen::MatrixXd diff = output - target;
  const auto count = static_cast<double>(diff.size());
  return {diff.squaredNorm() / count, 2.0 * diff / count};
}

LossResult cross_entropy_loss(const Eigen::MatrixXd& probabilities, std::span<const std::size_t> labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size()) {
    throw DimensionError("cross-entropy labels", static_cast<std::size_t>(probabilities.rows()), labels.size());
  }
  LossResult result;
  result.grad = Eigen::MatrixXd::Zero(probabilities.rows(), probabilities.cols());
  const auto rows = static_cast<double>(labels.size());
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const auto col = static_cast<Eigen::Index>(labels[r]);
    if (col >= probabilities.cols()) throw DomainError("cross-entropy label out of range");
    const double p = std::max(probabilities(row, col), 1e-300);
    result.value -= std::log(p) / rows;
    result.grad(row, col) = -1.0 / (p * rows);
  }
  return result;
}

LossResult linear_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& weights) {
  const auto rows = static_cast<double>(output.rows());
  return {output.cwiseProduct(weights).sum() / rows, weights / rows};
}

void Adam::step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<const double>>& grads, double learning_rate) {
  if (params.size() != grads.size()) throw DimensionError("adam tensors", params.size(), grads.size());
  if (first_.empty()) {
    for (const auto& p : params) {
      first_.emplace_back(p.size(), 0.0);
      second_.emplace_back(p.size(), 0.0);
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(settings_.beta1, t);
  const double correction2 = 1.0 - std::pow(settings_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = first_[k];
    auto& v = second_[k];
    const auto& g = grads[k];
    auto& p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (g[i] == 0.0) continue;
      m[i] = settings_.beta1 * m[i] + (1.0 - settings_.beta1) * g[i];
      v[i] = settings_.beta2 * v[i] + (1.0 - settings_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + settings_.epsilon);
    }
  }
}

double finite_difference_check(const std::vector<std::span<double>>& params,
                               const std::vector<std::span<const double>>& analytic,
                               const std::function<double()>& loss, double step) {
  if (params.size() != analytic.size()) throw DimensionError("gradient check tensors", params.size(), analytic.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& p = params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double original = p[i];
      p[i] = original + step;
      const double up = loss();
      p[i] = original - step;
      const double down = loss();
      p[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = analytic[k][i];
      const double err = std::abs(exact - numeric) / std::max(1.0, std::abs(exact) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace vistory::nn
