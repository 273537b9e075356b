#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rulex/errors.hpp"
#include "rulex/neural.hpp"

using namespace rulex;

namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

Network random_net(std::size_t in, std::size_t hid, std::size_t out, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Network n = Network::zeros(in, hid, out);
  for (auto* v : {&n.input_weights, &n.hidden_bias, &n.output_weights, &n.output_bias})
    for (auto& w : *v) w = u(rng);
  return n;
}

std::vector<std::vector<double>*> params(Network& n) {
  return {&n.input_weights, &n.hidden_bias, &n.output_weights, &n.output_bias};
}

}  // namespace

TEST(Forward, ZeroNetGivesHalf) {
  const Network n = Network::zeros(5, 3, 4);
  const std::vector<std::uint8_t> x = {1, 0, 1, 1, 0};
  for (double y : forward(n, std::span<const std::uint8_t>(x))) EXPECT_EQ(y, 0.5);
}

TEST(Forward, OneOneOneHandEvaluation) {
  Network n = Network::zeros(1, 1, 1);
  n.input_weights = {1.0};
  n.output_weights = {1.0};
  const std::vector<double> x = {1.0};
  const auto a = forward_pass(n, x);
  EXPECT_NEAR(a.hidden[0], 0.7310585786300049, 1e-12);
  EXPECT_NEAR(a.output[0], 0.6750375273768237, 1e-12);
  EXPECT_NEAR(a.output[0], logistic(logistic(1.0)), 1e-15);
}

TEST(Forward, OutputsInOpenUnitInterval) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution bit(0.5);
  for (int trial = 0; trial < 10000; ++trial) {
    const Network n = random_net(8, 4, 3, rng, 3.0);
    std::vector<std::uint8_t> x(8);
    for (auto& b : x) b = bit(rng);
    for (double y : forward(n, std::span<const std::uint8_t>(x))) {
      ASSERT_GT(y, 0.0);
      ASSERT_LT(y, 1.0);
    }
  }
}

TEST(Forward, LengthMismatch) {
  const Network n = Network::zeros(3, 2, 2);
  const std::vector<std::uint8_t> x = {1, 0};
  EXPECT_THROW(forward(n, std::span<const std::uint8_t>(x)), ValidationError);
}

TEST(Init, DeterministicAndScaled) {
  TrainConfig c;
  c.seed = 17;
  const auto a = init_network(10, 4, 3, c);
  const auto b = init_network(10, 4, 3, c);
  EXPECT_EQ(a, b);
  for (double w : a.input_weights) EXPECT_LE(std::abs(w), c.init_scale / std::sqrt(10.0));
  c.seed = 18;
  EXPECT_NE(init_network(10, 4, 3, c), a);
  c.init_scale = 0.0;
  const auto z = init_network(10, 4, 3, c);
  EXPECT_EQ(z, Network::zeros(10, 4, 3));
}

TEST(Init, DefaultSchemaSizes) {
  const auto n = init_network(default_student_schema(), TrainConfig{});
  EXPECT_EQ(n.input_size, 76u);
  EXPECT_EQ(n.hidden_size, 18u);
  EXPECT_EQ(n.output_size, 4u);
  EXPECT_EQ(default_hidden_size(76), 18u);
  EXPECT_EQ(default_hidden_size(9), 6u);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double eps = 1e-4;
  for (int draw = 0; draw < 5; ++draw) {
    Network n = random_net(6, 3, 2, rng, 1.0);
    std::vector<double> x(6), t = {1.0, 0.0};
    for (auto& v : x) v = u(rng);
    Network g = pattern_gradient(n, x, t);
    auto gp = params(g);
    auto np = params(n);
    for (std::size_t p = 0; p < np.size(); ++p) {
      for (std::size_t i = 0; i < np[p]->size(); ++i) {
        const double keep = (*np[p])[i];
        (*np[p])[i] = keep + eps;
        const double up = pattern_loss(n, x, t);
        (*np[p])[i] = keep - eps;
        const double down = pattern_loss(n, x, t);
        (*np[p])[i] = keep;
        const double numeric = (up - down) / (2 * eps);
        EXPECT_NEAR((*gp[p])[i], numeric, 1e-7 + 1e-5 * std::abs(numeric));
      }
    }
  }
}

TEST(Gradient, OutputWeightMonotoneLink) {
  std::mt19937_64 rng(8);
  Network n = random_net(4, 3, 2, rng, 1.0);
  const std::vector<double> x = {1, 0, 1, 1};
  const auto base = forward_pass(n, x);
  n.output_weights[1 * 3 + 2] += 0.1;
  EXPECT_GE(forward_pass(n, x).output[1], base.output[1]);
}

TEST(Train, SinglePatternMemorized) {
  TrainConfig c;
  c.max_epochs = 500;
  c.target_mse = 1e-6;
  const std::vector<EncodedVector> data = {{{1, 0, 0, 1}, 1}};
  const auto r = train(init_network(4, 3, 2, c), data, c);
  EXPECT_LT(r.final_mse, 0.01);
  EXPECT_EQ(r.final_mse, dataset_mse(r.network, data));
}

TEST(Train, SeparableToyTask) {
  // T = t2 iff A = a2 and B = b2.
  const std::vector<EncodedVector> data = {
      {{1, 0, 1, 0}, 0}, {{1, 0, 0, 1}, 0}, {{0, 1, 1, 0}, 0}, {{0, 1, 0, 1}, 1}};
  TrainConfig c;
  const auto r = train(init_network(4, default_hidden_size(4), 2, c), data, c);
  for (const auto& ev : data) EXPECT_EQ(predict(r.network, ev.bits), ev.target_index);
  EXPECT_EQ(training_accuracy(r.network, data), 1.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.mse_history.size(), r.epochs);
}

TEST(Train, DeterministicGivenSeed) {
  const std::vector<EncodedVector> data = {{{1, 0, 1, 0}, 0}, {{0, 1, 0, 1}, 1}, {{1, 0, 0, 1}, 1}};
  TrainConfig c;
  c.max_epochs = 50;
  const auto a = train(init_network(4, 3, 2, c), data, c);
  const auto b = train(init_network(4, 3, 2, c), data, c);
  EXPECT_EQ(a.network, b.network);
  EXPECT_EQ(a.mse_history, b.mse_history);
}

TEST(Train, Errors) {
  TrainConfig c;
  EXPECT_THROW(train(init_network(4, 3, 2, c), std::vector<EncodedVector>{}, c), ValidationError);
  const std::vector<EncodedVector> wide = {{{1, 0, 1}, 0}};
  EXPECT_THROW(train(init_network(4, 3, 2, c), wide, c), ValidationError);
  // Logistic outputs bound the loss, so a huge step saturates instead of
  // overflowing; a non-finite step is rejected up front.
  TrainConfig huge = c;
  huge.learning_rate = 1e308;
  huge.max_epochs = 50;
  const std::vector<EncodedVector> data = {{{1, 0, 1, 0}, 0}, {{0, 1, 0, 1}, 1}};
  const auto r = train(init_network(4, 3, 2, huge), data, huge);
  EXPECT_TRUE(std::isfinite(r.final_mse));
  EXPECT_LE(r.final_mse, 1.0);
  huge.learning_rate = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train(init_network(4, 3, 2, c), data, huge), ValidationError);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.max_epochs = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.target_mse = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_EQ(TrainConfig::from_json(TrainConfig{}.to_json()).to_json(), TrainConfig{}.to_json());
}

TEST(ClassScore, EqualsForwardComponent) {
  std::mt19937_64 rng(5);
  const Network n = random_net(6, 4, 3, rng, 2.0);
  const std::vector<std::uint8_t> x = {1, 1, 0, 0, 1, 0};
  const auto y = forward(n, std::span<const std::uint8_t>(x));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(class_score(n, x, k), y[k]);
  EXPECT_THROW(class_score(n, x, 3), ValidationError);
  EXPECT_EQ(class_score(Network::zeros(6, 4, 3), x, 1), 0.5);
}

TEST(Persist, JsonRoundTripIsExact) {
  std::mt19937_64 rng(6);
  const Network n = random_net(7, 3, 2, rng, 1.0);
  const auto back = network_from_json(nlohmann::json::parse(network_to_json(n).dump()));
  EXPECT_EQ(back, n);
  auto bad = network_to_json(n);
  bad["sizes"]["hidden"] = 4;
  EXPECT_THROW(network_from_json(bad), ValidationError);
}
