#include <benchmark/benchmark.h>

#include "rulex/neural.hpp"
#include "rulex/pipeline.hpp"
#include "rulex/psychostats.hpp"
#include "rulex/rulekit.hpp"
#include "rulex/synthgen.hpp"

using namespace rulex;

namespace {

// Default 97-record cohort and its encoding, built once.
struct Fixture {
  Cohort cohort = generate_default_cohort(CohortOptions{});
  std::vector<EncodedVector> encoded = encode_records(cohort.dataset.records, default_student_schema());
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

const Network& trained_network() {
  static const Network net = [] {
    TrainConfig c;
    return train(init_network(default_student_schema(), c), fixture().encoded, c).network;
  }();
  return net;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const Network& net = trained_network();
  const auto& bits = fixture().encoded.front().bits;
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, std::span<const std::uint8_t>(bits)));
}
BENCHMARK(BM_Forward);

static void BM_TrainEpochs(benchmark::State& state) {
  TrainConfig c;
  c.max_epochs = static_cast<std::size_t>(state.range(0));
  c.target_mse = 1e-12;
  const Network start = init_network(default_student_schema(), c);
  for (auto _ : state) benchmark::DoNotOptimize(train(start, fixture().encoded, c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * static_cast<int64_t>(fixture().encoded.size()));
}
BENCHMARK(BM_TrainEpochs)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_EvolveClassScore(benchmark::State& state) {
  const Network& net = trained_network();
  GaConfig ga;
  ga.threads = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        evolve([&](std::span<const std::uint8_t> b) { return class_score(net, b, 0); }, net.input_size, ga));
  }
}
BENCHMARK(BM_EvolveClassScore)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_ExtractRuleset(benchmark::State& state) {
  const Network& net = trained_network();
  ExtractionConfig c;
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_ruleset(net, fixture().cohort.dataset.records, default_student_schema(), c));
  }
}
BENCHMARK(BM_ExtractRuleset)->Unit(benchmark::kMillisecond)->Iterations(3);

static void BM_StatsReport(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_stats_report(fixture().cohort.dataset, default_student_schema()));
  }
}
BENCHMARK(BM_StatsReport)->Unit(benchmark::kMillisecond);

static void BM_SampleCohort(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_population(default_population_spec(n, n, 7)));
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_SampleCohort)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
