#include "rulex/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"

namespace rulex {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be finite and > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0,1)");
  if (max_epochs < 1) throw ValidationError("max epochs must be >= 1");
  if (!(target_mse > 0.0)) throw ValidationError("target mse must be > 0");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) throw ValidationError("init scale must be >= 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"momentum", momentum},   {"max_epochs", max_epochs},
          {"target_mse", target_mse},       {"hidden_size", hidden_size}, {"init_scale", init_scale},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  TrainConfig c;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.momentum = doc.value("momentum", c.momentum);
    c.max_epochs = doc.value("max_epochs", c.max_epochs);
    c.target_mse = doc.value("target_mse", c.target_mse);
    c.hidden_size = doc.value("hidden_size", c.hidden_size);
    c.init_scale = doc.value("init_scale", c.init_scale);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed training config: ") + e.what());
  }
  return c;
}

std::size_t default_hidden_size(std::size_t input_size) {
  return 2 * static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(input_size))));
}

Network Network::zeros(std::size_t input, std::size_t hidden, std::size_t output) {
  Network n;
  n.input_size = input;
  n.hidden_size = hidden;
  n.output_size = output;
  n.input_weights.assign(hidden * input, 0.0);
  n.hidden_bias.assign(hidden, 0.0);
  n.output_weights.assign(output * hidden, 0.0);
  n.output_bias.assign(output, 0.0);
  return n;
}

void Network::validate() const {
  if (input_size == 0 || hidden_size == 0 || output_size == 0) throw ValidationError("network sizes must be positive");
  if (input_weights.size() != hidden_size * input_size || hidden_bias.size() != hidden_size ||
      output_weights.size() != output_size * hidden_size || output_bias.size() != output_size) {
    throw ValidationError("network parameter arrays do not match its sizes");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(input_weights) || !finite(hidden_bias) || !finite(output_weights) || !finite(output_bias)) {
    throw NumericError("network contains non-finite weights");
  }
}

Network init_network(std::size_t input, std::size_t hidden, std::size_t output, const TrainConfig& config) {
  config.validate();
  Network net = Network::zeros(input, hidden, output);
  net.validate();
  Rng rng(derive_seed(config.seed, "init"));
  auto fill = [&](std::vector<double>& v, std::size_t fan_in) {
    const double r = config.init_scale / std::sqrt(static_cast<double>(fan_in));
    if (r == 0.0) return;
    std::uniform_real_distribution<double> dist(-r, r);
    for (double& w : v) w = dist(rng);
  };
  fill(net.input_weights, input);
  fill(net.hidden_bias, input);
  fill(net.output_weights, hidden);
  fill(net.output_bias, hidden);
  return net;
}

Network init_network(const AttributeSchema& schema, const TrainConfig& config) {
  const std::size_t input = schema.total_predictive_bits();
  const std::size_t hidden = config.hidden_size ? config.hidden_size : default_hidden_size(input);
  return init_network(input, hidden, schema.target_bits(), config);
}

Activations forward_pass(const Network& net, std::span<const double> input) {
  if (input.size() != net.input_size) {
    throw ValidationError("input length " + std::to_string(input.size()) + " does not match network input size " +
                          std::to_string(net.input_size));
  }
  Activations a;
  a.hidden.resize(net.hidden_size);
  for (std::size_t j = 0; j < net.hidden_size; ++j) {
    const double* row = &net.input_weights[j * net.input_size];
    double u = net.hidden_bias[j];
    for (std::size_t i = 0; i < net.input_size; ++i) u += row[i] * input[i];
    a.hidden[j] = sigmoid(u);
  }
  a.output.resize(net.output_size);
  for (std::size_t k = 0; k < net.output_size; ++k) {
    const double* row = &net.output_weights[k * net.hidden_size];
    double u = net.output_bias[k];
    for (std::size_t j = 0; j < net.hidden_size; ++j) u += row[j] * a.hidden[j];
    a.output[k] = sigmoid(u);
  }
  return a;
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
  return forward_pass(net, input).output;
}

std::vector<double> forward(const Network& net, std::span<const std::uint8_t> bits) {
  const std::vector<double> input(bits.begin(), bits.end());
  return forward(net, input);
}

double pattern_loss(const Network& net, std::span<const double> input, std::span<const double> target) {
  const auto y = forward(net, input);
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) loss += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
  return loss;
}

namespace {

// Back-propagates one pattern into `grad` (overwritten).
void backprop(const Network& net, std::span<const double> input, std::span<const double> target,
              const Activations& a, Network& grad, std::vector<double>& delta_out, std::vector<double>& delta_hidden) {
  delta_out.resize(net.output_size);
  for (std::size_t k = 0; k < net.output_size; ++k) {
    const double y = a.output[k];
    delta_out[k] = (y - target[k]) * y * (1.0 - y);
  }
  delta_hidden.assign(net.hidden_size, 0.0);
  for (std::size_t k = 0; k < net.output_size; ++k) {
    const double* row = &net.output_weights[k * net.hidden_size];
    for (std::size_t j = 0; j < net.hidden_size; ++j) delta_hidden[j] += delta_out[k] * row[j];
  }
  for (std::size_t j = 0; j < net.hidden_size; ++j) {
    const double h = a.hidden[j];
    delta_hidden[j] *= h * (1.0 - h);
  }
  for (std::size_t k = 0; k < net.output_size; ++k) {
    double* row = &grad.output_weights[k * net.hidden_size];
    for (std::size_t j = 0; j < net.hidden_size; ++j) row[j] = delta_out[k] * a.hidden[j];
    grad.output_bias[k] = delta_out[k];
  }
  for (std::size_t j = 0; j < net.hidden_size; ++j) {
    double* row = &grad.input_weights[j * net.input_size];
    for (std::size_t i = 0; i < net.input_size; ++i) row[i] = delta_hidden[j] * input[i];
    grad.hidden_bias[j] = delta_hidden[j];
  }
}

}  // namespace

Network pattern_gradient(const Network& net, std::span<const double> input, std::span<const double> target) {
  if (target.size() != net.output_size) throw ValidationError("target length does not match network output size");
  const Activations a = forward_pass(net, input);
  Network grad = Network::zeros(net.input_size, net.hidden_size, net.output_size);
  std::vector<double> d_out;
  std::vector<double> d_hidden;
  backprop(net, input, target, a, grad, d_out, d_hidden);
  return grad;
}

double dataset_mse(const Network& net, std::span<const EncodedVector> data) {
  if (data.empty()) throw ValidationError("cannot compute mse of an empty dataset");
  double total = 0.0;
  for (const auto& ev : data) {
    const auto y = forward(net, std::span<const std::uint8_t>(ev.bits));
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double t = k == ev.target_index ? 1.0 : 0.0;
      total += (y[k] - t) * (y[k] - t);
    }
  }
  return total / static_cast<double>(data.size() * net.output_size);
}

std::size_t predict(const Network& net, std::span<const std::uint8_t> bits) {
  const auto y = forward(net, bits);
  return static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
}

double training_accuracy(const Network& net, std::span<const EncodedVector> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ev : data) hits += predict(net, std::span<const std::uint8_t>(ev.bits)) == ev.target_index;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train(Network net, std::span<const EncodedVector> data, const TrainConfig& config) {
  config.validate();
  net.validate();
  if (data.empty()) throw ValidationError("training dataset is empty");

  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  inputs.reserve(data.size());
  targets.reserve(data.size());
  for (const auto& ev : data) {
    if (ev.bits.size() != net.input_size) throw ValidationError("encoded vector width does not match network input size");
    if (ev.target_index >= net.output_size) throw ValidationError("target index exceeds network output size");
    inputs.emplace_back(ev.bits.begin(), ev.bits.end());
    std::vector<double> t(net.output_size, 0.0);
    t[ev.target_index] = 1.0;
    targets.push_back(std::move(t));
  }

  Network grad = Network::zeros(net.input_size, net.hidden_size, net.output_size);
  Network velocity = grad;
  std::vector<double> d_out;
  std::vector<double> d_hidden;
  auto step = [&](std::vector<double>& w, std::vector<double>& v, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = config.momentum * v[i] - config.learning_rate * g[i];
      w[i] += v[i];
    }
  };

  Rng rng(derive_seed(config.seed, "train"));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const Activations a = forward_pass(net, inputs[idx]);
      backprop(net, inputs[idx], targets[idx], a, grad, d_out, d_hidden);
      step(net.input_weights, velocity.input_weights, grad.input_weights);
      step(net.hidden_bias, velocity.hidden_bias, grad.hidden_bias);
      step(net.output_weights, velocity.output_weights, grad.output_weights);
      step(net.output_bias, velocity.output_bias, grad.output_bias);
    }
    const double mse = dataset_mse(net, data);
    if (!std::isfinite(mse)) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                         " (non-finite loss); try a smaller learning rate");
    }
    result.mse_history.push_back(mse);
    result.epochs = epoch + 1;
    if (mse <= config.target_mse) {
      result.converged = true;
      break;
    }
  }
  net.validate();
  result.final_mse = result.mse_history.back();
  result.network = std::move(net);
  return result;
}

double class_score(const Network& net, std::span<const std::uint8_t> chromosome, std::size_t class_index) {
  if (class_index >= net.output_size) {
    throw ValidationError("class index " + std::to_string(class_index) + " out of range");
  }
  return forward(net, chromosome)[class_index];
}

nlohmann::json network_to_json(const Network& net) {
  return {{"sizes", {{"input", net.input_size}, {"hidden", net.hidden_size}, {"output", net.output_size}}},
          {"input_weights", net.input_weights},
          {"hidden_bias", net.hidden_bias},
          {"output_weights", net.output_weights},
          {"output_bias", net.output_bias}};
}

Network network_from_json(const nlohmann::json& doc) {
  Network net;
  try {
    const auto& sizes = doc.at("sizes");
    net.input_size = sizes.at("input").get<std::size_t>();
    net.hidden_size = sizes.at("hidden").get<std::size_t>();
    net.output_size = sizes.at("output").get<std::size_t>();
    net.input_weights = doc.at("input_weights").get<std::vector<double>>();
    net.hidden_bias = doc.at("hidden_bias").get<std::vector<double>>();
    net.output_weights = doc.at("output_weights").get<std::vector<double>>();
    net.output_bias = doc.at("output_bias").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed network document: ") + e.what());
  }
  net.validate();
  return net;
}

}  // namespace rulex
