#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfc/rng.hpp"

namespace mfc {

enum class HiddenActivation { Tanh, Identity };
enum class OutputActivation { Identity, ScaledTanh };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

/// Fully connected feedforward network. Hidden layers use `hidden`; the last
/// layer is either affine or offset + scale * tanh(.).
struct MLPParams {
  std::vector<DenseLayer> layers;
  HiddenActivation hidden = HiddenActivation::Tanh;
  OutputActivation output = OutputActivation::Identity;
  double output_scale = 1.0;
  double output_offset = 0.0;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  /// Layer widths including input and output.
  std::vector<std::size_t> widths() const;
  bool all_finite() const;
};

struct MLPSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  HiddenActivation hidden = HiddenActivation::Tanh;
  OutputActivation output = OutputActivation::Identity;
  double output_scale = 1.0;
  double output_offset = 0.0;
  /// Init bound of the last layer; 0 keeps the fan-in rule.
  double last_layer_init = 0.0;
};

/// Weights and biases uniform in +-1/sqrt(fan_in).
MLPParams make_mlp(const MLPSpec& spec, Rng& rng);

/// Evaluates the network on one input. Throws DimensionMismatch.
Eigen::VectorXd mlp_forward(const MLPParams& params, const Eigen::VectorXd& input);
/// Column-wise batch evaluation.
Eigen::MatrixXd mlp_forward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs);

struct MLPGradients {
  std::vector<DenseLayer> layers;  // same shapes as the network, summed over the batch
  Eigen::MatrixXd input;           // d(upstream . output)/d(input), one column per sample
};

/// Reverse-mode gradient of sum_k upstream(:,k) . f(inputs(:,k)) with respect
/// to every parameter and every input.
MLPGradients mlp_backward_batch(const MLPParams& params, const Eigen::MatrixXd& inputs,
                                const Eigen::MatrixXd& upstream);
MLPGradients mlp_backward(const MLPParams& params, const Eigen::VectorXd& input,
                          const Eigen::VectorXd& upstream);

struct AdamState {
  std::vector<DenseLayer> first;
  std::vector<DenseLayer> second;
  std::size_t step = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const MLPParams& params, double learning_rate);

/// One bias-corrected Adam descent step. Throws NonFiniteGradient, ShapeMismatch.
void adam_update(MLPParams& params, const MLPGradients& grads, AdamState& state);

/// target <- tau * source + (1 - tau) * target. Throws ShapeMismatch.
void soft_update(MLPParams& target, const MLPParams& source, double tau);

/// Flat parameter view in layer order (weights column-major, then bias).
std::vector<double> flatten(const MLPParams& params);
std::vector<double> flatten(const std::vector<DenseLayer>& layers);
void unflatten(MLPParams& params, std::span<const double> flat);

/// Text checkpoint: a header line with activation settings and layer widths,
/// then each layer's weights row by row followed by its bias.
void save_checkpoint(const MLPParams& params, std::ostream& out);
MLPParams load_checkpoint(std::istream& in);
void save_checkpoint(const MLPParams& params, const std::string& path);
MLPParams load_checkpoint(const std::string& path);

}  // namespace mfc
