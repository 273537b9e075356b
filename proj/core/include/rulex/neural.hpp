#pragma once

// One-hidden-layer feed-forward network with logistic units on both layers,
// trained by per-pattern gradient descent with momentum on squared error.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulex/schema.hpp"

namespace rulex {

struct TrainConfig {
  double learning_rate = 0.2;
  double momentum = 0.9;
  std::size_t max_epochs = 5000;
  double target_mse = 0.01;
  std::size_t hidden_size = 0;  // 0 selects default_hidden_size(input)
  double init_scale = 0.5;      // weights ~ U(-init_scale/sqrt(fan_in), +init_scale/sqrt(fan_in))
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

/// 2 * ceil(sqrt(input_size)).
std::size_t default_hidden_size(std::size_t input_size);

struct Network {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::size_t output_size = 0;
  std::vector<double> input_weights;   // hidden_size x input_size, row-major
  std::vector<double> hidden_bias;     // hidden_size
  std::vector<double> output_weights;  // output_size x hidden_size, row-major
  std::vector<double> output_bias;     // output_size

  static Network zeros(std::size_t input, std::size_t hidden, std::size_t output);
  void validate() const;
  bool operator==(const Network&) const = default;
};

Network init_network(std::size_t input, std::size_t hidden, std::size_t output, const TrainConfig& config);
/// Sizes from the schema: total predictive bits in, target levels out.
Network init_network(const AttributeSchema& schema, const TrainConfig& config);

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

struct Activations {
  std::vector<double> hidden;
  std::vector<double> output;
};

Activations forward_pass(const Network& net, std::span<const double> input);
std::vector<double> forward(const Network& net, std::span<const double> input);
std::vector<double> forward(const Network& net, std::span<const std::uint8_t> bits);

/// Half squared error 0.5 * sum_k (y_k - t_k)^2 of one pattern.
double pattern_loss(const Network& net, std::span<const double> input, std::span<const double> target);
/// Gradient of pattern_loss laid out like the network's parameters.
Network pattern_gradient(const Network& net, std::span<const double> input, std::span<const double> target);

/// Mean over patterns and outputs of (y - onehot(target))^2.
double dataset_mse(const Network& net, std::span<const EncodedVector> data);
std::size_t predict(const Network& net, std::span<const std::uint8_t> bits);
double training_accuracy(const Network& net, std::span<const EncodedVector> data);

struct TrainResult {
  Network network;
  std::vector<double> mse_history;  // full-dataset mse after each epoch
  std::size_t epochs = 0;
  double final_mse = 0.0;
  bool converged = false;
};

/// Runs until full-dataset mse <= target_mse or max_epochs. Throws
/// NumericError if the loss stops being finite.
TrainResult train(Network net, std::span<const EncodedVector> data, const TrainConfig& config);

/// forward(net, chromosome)[class_index]; the GA fitness of one class.
double class_score(const Network& net, std::span<const std::uint8_t> chromosome, std::size_t class_index);

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& doc);

}  // namespace rulex
