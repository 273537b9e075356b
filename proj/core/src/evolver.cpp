#include "rulex/evolver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "rulex/errors.hpp"

namespace rulex {

void GaConfig::validate() const {
  if (population_size < 2) throw ValidationError("GA population must be >= 2");
  if (elitism >= population_size) throw ValidationError("GA elitism must be smaller than the population");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ValidationError("crossover probability must lie in [0,1]");
  if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ValidationError("mutation probability must lie in [0,1]");
  if (tournament_size < 1) throw ValidationError("tournament size must be >= 1");
  if (threads < 1) throw ValidationError("GA threads must be >= 1");
}

nlohmann::json GaConfig::to_json() const {
  return {{"population_size", population_size}, {"generations", generations}, {"crossover_rate", crossover_rate},
          {"mutation_rate", mutation_rate},     {"tournament_size", tournament_size}, {"elitism", elitism},
          {"seed", seed}};
}

GaConfig GaConfig::from_json(const nlohmann::json& doc) {
  GaConfig c;
  try {
    c.population_size = doc.value("population_size", c.population_size);
    c.generations = doc.value("generations", c.generations);
    c.crossover_rate = doc.value("crossover_rate", c.crossover_rate);
    c.mutation_rate = doc.value("mutation_rate", c.mutation_rate);
    c.tournament_size = doc.value("tournament_size", c.tournament_size);
    c.elitism = doc.value("elitism", c.elitism);
    c.seed = doc.value("seed", c.seed);
    c.threads = doc.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed GA config: ") + e.what());
  }
  return c;
}

std::size_t select_tournament(std::span<const double> fitness, std::size_t k, Rng& rng) {
  if (fitness.empty() || k < 1) throw ValidationError("tournament needs a non-empty population and k >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, fitness.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t draw = 1; draw < k; ++draw) {
    const std::size_t c = pick(rng);
    if (fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best)) best = c;
  }
  return best;
}

std::pair<Bits, Bits> crossover_point(const Bits& a, const Bits& b, std::size_t cut) {
  if (a.size() != b.size()) throw ValidationError("crossover parents differ in length");
  if (cut < 1 || cut >= a.size()) {
    throw ValidationError("crossover cut " + std::to_string(cut) + " outside [1, " + std::to_string(a.size()) + ")");
  }
  Bits c1(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(cut));
  c1.insert(c1.end(), b.begin() + static_cast<std::ptrdiff_t>(cut), b.end());
  Bits c2(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(cut));
  c2.insert(c2.end(), a.begin() + static_cast<std::ptrdiff_t>(cut), a.end());
  return {std::move(c1), std::move(c2)};
}

Bits mutate_bits(Bits chromosome, double p, Rng& rng) {
  if (p <= 0.0) return chromosome;
  std::bernoulli_distribution flip(std::min(p, 1.0));
  for (auto& bit : chromosome) {
    if (flip(rng)) bit ^= 1U;
  }
  return chromosome;
}

std::string bits_to_string(std::span<const std::uint8_t> bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s += b ? '1' : '0';
  return s;
}

namespace {

std::vector<double> evaluate(const FitnessFn& fitness, const std::vector<Bits>& population, std::size_t threads) {
  std::vector<double> out(population.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fitness(population[i]);
  };
  if (threads <= 1 || population.size() < 2 * threads) {
    work(0, population.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (population.size() + threads - 1) / threads;
    for (std::size_t begin = 0; begin < population.size(); begin += chunk) {
      pool.emplace_back(work, begin, std::min(begin + chunk, population.size()));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i])) {
      throw NumericError("fitness returned a non-finite value for chromosome " + bits_to_string(population[i]));
    }
  }
  return out;
}

std::size_t argmax(const std::vector<double>& v) {
  // First maximum: lowest index wins ties.
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

EvolutionResult evolve(const FitnessFn& fitness, std::size_t bit_length, const GaConfig& config) {
  config.validate();
  if (bit_length < 1) throw ValidationError("chromosome length must be >= 1");
  const std::size_t n = config.population_size;

  std::vector<Bits> population(n, Bits(bit_length));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(config.seed, "ga-init", i));
    std::bernoulli_distribution coin(0.5);
    for (auto& bit : population[i]) bit = coin(rng) ? 1 : 0;
  }
  std::vector<double> fit = evaluate(fitness, population, config.threads);

  EvolutionResult result;
  std::size_t best = argmax(fit);
  result.best = population[best];
  result.best_fitness = fit[best];
  result.history.push_back(fit[best]);

  std::vector<std::size_t> ranked(n);
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

    std::vector<Bits> next;
    next.reserve(n + 1);
    for (std::size_t e = 0; e < config.elitism; ++e) next.push_back(population[ranked[e]]);

    const std::uint64_t gen_seed = derive_seed(config.seed, "ga-generation", gen);
    for (std::size_t pair = 0; next.size() < n; ++pair) {
      Rng rng(derive_seed(gen_seed, "breed", pair));
      const Bits& mother = population[select_tournament(fit, config.tournament_size, rng)];
      const Bits& father = population[select_tournament(fit, config.tournament_size, rng)];
      std::bernoulli_distribution do_cross(config.crossover_rate);
      const bool cross = do_cross(rng) && bit_length > 1;
      std::pair<Bits, Bits> children{mother, father};
      if (cross) {
        std::uniform_int_distribution<std::size_t> cut(1, bit_length - 1);
        children = crossover_point(mother, father, cut(rng));
      }
      next.push_back(mutate_bits(std::move(children.first), config.mutation_rate, rng));
      if (next.size() < n) next.push_back(mutate_bits(std::move(children.second), config.mutation_rate, rng));
    }
    population = std::move(next);
    fit = evaluate(fitness, population, config.threads);

    best = argmax(fit);
    result.history.push_back(fit[best]);
    if (fit[best] > result.best_fitness) {
      result.best_fitness = fit[best];
      result.best = population[best];
    }
  }
  result.generations = config.generations;
  return result;
}

nlohmann::json evolution_to_json(const EvolutionResult& result) {
  return {{"best", bits_to_string(result.best)},
          {"best_fitness", result.best_fitness},
          {"generations", result.generations},
          {"history", result.history}};
}

}  // namespace rulex
