#pragma once

// Generational genetic algorithm over fixed-length bit strings: tournament
// selection, single-point crossover, per-bit mutation and elitism.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulex/hashing.hpp"
#include "rulex/schema.hpp"

namespace rulex {

struct GaConfig {
  std::size_t population_size = 100;
  std::size_t generations = 200;
  double crossover_rate = 0.8;
  double mutation_rate = 0.02;  // per bit
  std::size_t tournament_size = 3;
  std::size_t elitism = 2;
  std::uint64_t seed = 1;
  std::size_t threads = 1;  // fitness evaluation workers; results do not depend on it

  void validate() const;
  nlohmann::json to_json() const;
  static GaConfig from_json(const nlohmann::json& doc);
};

/// Must be pure: the same bits always give the same finite value.
using FitnessFn = std::function<double(std::span<const std::uint8_t>)>;

struct EvolutionResult {
  Bits best;
  double best_fitness = 0.0;
  std::vector<double> history;  // population best per generation, initial population first
  std::size_t generations = 0;
};

/// Throws ValidationError on a bad config and NumericError (naming the
/// chromosome) if fitness returns a non-finite value.
EvolutionResult evolve(const FitnessFn& fitness, std::size_t bit_length, const GaConfig& config);

/// Index of the fittest of k uniform draws with replacement; ties go to the
/// lowest population index.
std::size_t select_tournament(std::span<const double> fitness, std::size_t k, Rng& rng);

/// Children swap suffixes at `cut` (1 <= cut < length).
std::pair<Bits, Bits> crossover_point(const Bits& a, const Bits& b, std::size_t cut);

/// Flips each bit independently with probability p.
Bits mutate_bits(Bits chromosome, double p, Rng& rng);

std::string bits_to_string(std::span<const std::uint8_t> bits);
nlohmann::json evolution_to_json(const EvolutionResult& result);

}  // namespace rulex
