#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fingan/data_model.hpp"

// Small dense feedforward networks with hand-written backpropagation and Adam.
// Batches are b x features matrices; weights are stored as out x in.
namespace fingan::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class ActivationKind { ReLU, LeakyReLU, Sigmoid, Softmax, Tanh, Identity };

struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double slope = 0.2;  // LeakyReLU only

  static Activation relu() { return {ActivationKind::ReLU}; }
  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::LeakyReLU, slope}; }
  static Activation sigmoid() { return {ActivationKind::Sigmoid}; }
  static Activation softmax() { return {ActivationKind::Softmax}; }
  static Activation tanh() { return {ActivationKind::Tanh}; }
  static Activation identity() { return {ActivationKind::Identity}; }

  bool operator==(const Activation&) const = default;
};

// A contiguous block of a layer's units with its own activation. A layer with
// segments models parallel output branches on a shared trunk (e.g. one softmax
// head per categorical column next to a sigmoid head for numerics); the
// branch outputs are concatenated in segment order.
struct Segment {
  std::size_t width = 0;
  Activation activation;

  bool operator==(const Segment&) const = default;
};

struct LayerSpec {
  std::size_t width = 0;
  Activation activation;          // used when `segments` is empty
  std::vector<Segment> segments;  // must partition `width` when present

  bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  bool operator==(const NetworkSpec&) const = default;

  void validate() const;
  std::size_t output_dim() const { return layers.empty() ? input_dim : layers.back().width; }

  Json to_json() const;
  static NetworkSpec from_json(const Json& j);
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct NetworkState {
  NetworkSpec spec;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  std::uint64_t step = 0;

  std::size_t parameter_count() const;
  bool all_finite() const;
};

struct Activations {
  Matrix input;
  std::vector<Matrix> pre;   // z = a_prev W^T + b
  std::vector<Matrix> post;  // activation(z)

  const Matrix& output() const { return post.empty() ? input : post.back(); }
};

// Sum-reduced over the batch rows.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;  // gradient w.r.t. the network input, b x input_dim

  static Gradients zeros_like(const NetworkState& state);
  Gradients& operator+=(const Gradients& other);
  bool all_finite() const;
};

NetworkState init_network(const NetworkSpec& spec, std::uint64_t seed);

Activations forward(const NetworkState& state, const Matrix& batch);
Matrix predict(const NetworkState& state, const Matrix& batch);

// grad_output is dLoss/d(output activations), b x output_dim.
Gradients backward(const NetworkState& state, const Activations& acts, const Matrix& grad_output);

// Gradient w.r.t. the network input only; skips the parameter gradients.
Matrix backward_input(const NetworkState& state, const Activations& acts, const Matrix& grad_output);

void adam_step(NetworkState& state, const Gradients& grads, const AdamConfig& config);

// Clamp every weight and bias into [-limit, limit].
void clip_parameters(NetworkState& state, double limit);
double max_abs_parameter(const NetworkState& state);

inline constexpr double kProbabilityFloor = 1e-7;

struct LossResult {
  double loss = 0.0;
  Vector grad;  // dLoss/dp, already divided by the batch size
};

// Mean binary cross-entropy with predictions clamped to
// [kProbabilityFloor, 1 - kProbabilityFloor].
LossResult bce_loss(const Vector& predictions, const Vector& targets);

Json to_json(const NetworkState& state);
NetworkState state_from_json(const Json& j);

}  // namespace fingan::nn
