// Copyright 2026 The vistory Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vistory/random.hpp"

namespace vistory::nn {

enum class Activation { kIdentity, kSigmoid, kSoftmax };

std::string_view to_string(Activation activation);
/// Throws FormatError on an unknown tag.
Activation activation_from_string(std::string_view tag);

/// Fully connected layer y = act(W x + b). Batches are row-major in the
/// sense that each row of an input matrix is one sample.
struct DenseLayer {
  Eigen::MatrixXd weights;  // outputs x inputs
  Eigen::VectorXd bias;     // outputs
  Activation activation = Activation::kIdentity;

  Eigen::Index inputs() const noexcept { return weights.cols(); }
  Eigen::Index outputs() const noexcept { return weights.rows(); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
};

struct DenseGrad {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct LayerSpec {
  std::size_t units = 0;
  Activation activation = Activation::kIdentity;
};

/// Glorot-uniform weights, zero bias.
DenseLayer make_dense(std::size_t inputs, std::size_t outputs, Activation activation, Rng& rng);

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation activation);

/// Gradient w.r.t. the pre-activation given the activation output `y` and
/// the gradient w.r.t. `y`.
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& grad_y,
                                    Activation activation);

/// Backprop through one layer. `x` is the layer input and `y` its output.
DenseGrad dense_backward(const DenseLayer& layer, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const Eigen::MatrixXd& grad_y, Eigen::MatrixXd* grad_x);

/// A chain of dense layers.
class Mlp {
 public:
  struct Trace {
    /// activations[0] is the input, activations[i + 1] the output of layer i.
    std::vector<Eigen::MatrixXd> activations;
  };

  Mlp() = default;
  /// Throws DimensionError when layer shapes do not chain.
  Mlp(std::size_t input_dim, std::vector<DenseLayer> layers);

  static Mlp random(std::size_t input_dim, std::span<const LayerSpec> specs, Rng& rng);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept;
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Trace& trace) const;

  std::vector<DenseGrad> backward(const Trace& trace, const Eigen::MatrixXd& grad_output,
                                  Eigen::MatrixXd* grad_input = nullptr) const;

  std::size_t parameter_count() const noexcept;

 private:
  std::size_t input_dim_ = 0;
  std::vector<DenseLayer> layers_;
};

/// Views over the parameter storage of layers / gradients in a fixed order
/// (W then b for each layer). Used by the optimizer and the gradient check.
void append_parameters(DenseLayer& layer, std::vector<std::span<double>>& out);
void append_parameters(const DenseGrad& grad, std::vector<std::span<const double>>& out);
std::vector<std::span<double>> parameters(Mlp& mlp);
std::vector<std::span<const double>> gradients(const std::vector<DenseGrad>& grads);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d value / d output
};

/// Mean over all elements of (output - target)^2.
LossResult mse_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target);

/// Mean over rows of -log p[label]. `probabilities` are softmax outputs.
LossResult cross_entropy_loss(const Eigen::MatrixXd& probabilities, std::span<const std::size_t> labels);

/// Sum of weights .* output, divided by the row count.
LossResult linear_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& weights);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Elements whose gradient is exactly zero are
/// left untouched (neither parameter nor moments move).
class Adam {
 public:
  explicit Adam(AdamSettings settings = {}) : settings_(settings) {}

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads, double learning_rate);

  std::size_t steps() const noexcept { return step_; }

 private:
  AdamSettings settings_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t step_ = 0;
};

/// Compares analytic gradients with central finite differences of `loss`
/// over every parameter. Returns max |g_a - g_fd| / max(1, |g_a| + |g_fd|).
/// Parameters are restored before returning.
double finite_difference_check(const std::vector<std::span<double>>& params,
                               const std::vector<std::span<const double>>& analytic,
                               const std::function<double()>& loss, double step = 1e-5);

}  // namespace vistory::nn
