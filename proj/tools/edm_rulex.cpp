// edm-rulex: generate -> train -> extract -> stats -> report over one run
// directory. Exit codes: 0 ok, 2 validation, 3 numeric, 4 io.

#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rulex/errors.hpp"
#include "rulex/pipeline.hpp"

namespace {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, data, schema, spec;
  std::optional<std::size_t> n, hidden, epochs, pop, generations, budget, threads;
  std::optional<double> noise, confidence, epsilon, learning_rate, target_mse;
  bool planted = false;
};

void add_options(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config, "JSON run config; flags override its keys")->check(CLI::ExistingFile);
  cmd.add_option("--seed", o.seed, "master seed (u64)");
  cmd.add_option("--out", o.out, "run directory");
  cmd.add_option("--data", o.data, "dataset CSV (default: <out>/cohort.csv)");
  cmd.add_option("--schema", o.schema, "schema JSON (default: <out>/cohort.schema.json or built-in)");
}

rulex::RunConfig resolve(const Overrides& o) {
  rulex::RunConfig c;
  if (!o.config.empty()) c = rulex::RunConfig::from_json(rulex::parse_json_file(o.config));
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out_dir = *o.out;
  if (o.data) c.data_path = *o.data;
  if (o.schema) c.schema_path = *o.schema;
  if (o.spec) c.spec = *o.spec;
  if (o.n) c.n = *o.n;
  if (o.planted) c.planted = true;
  if (o.noise) c.noise = *o.noise;
  if (o.hidden) c.train.hidden_size = *o.hidden;
  if (o.epochs) c.train.max_epochs = *o.epochs;
  if (o.learning_rate) c.train.learning_rate = *o.learning_rate;
  if (o.target_mse) c.train.target_mse = *o.target_mse;
  if (o.pop) c.rules.ga.population_size = *o.pop;
  if (o.generations) c.rules.ga.generations = *o.generations;
  if (o.threads) c.rules.ga.threads = *o.threads;
  if (o.confidence) c.rules.min_confidence = *o.confidence;
  if (o.epsilon) c.rules.epsilon = *o.epsilon;
  if (o.budget) c.rules.per_class_budget = *o.budget;
  return c;
}

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("edm-rulex");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("EDM_RULEX_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Rule extraction from neural networks over student-model data"};
  app.require_subcommand(1);
  Overrides o;

  auto* gen = app.add_subcommand("generate", "write a synthetic cohort");
  add_options(*gen, o);
  gen->add_option("--spec", o.spec, "generator spec (paper-default)");
  gen->add_option("--n", o.n, "cohort size, split 49:48 by gender");
  gen->add_flag("--planted", o.planted, "label the target with {Unit 1=F -> F; Unit 2=F -> F; else P}");
  gen->add_option("--noise", o.noise, "label flip probability for --planted");

  auto* trn = app.add_subcommand("train", "train the network on a dataset");
  add_options(*trn, o);
  trn->add_option("--hidden", o.hidden, "hidden units (0 = 2*ceil(sqrt(inputs)))");
  trn->add_option("--epochs", o.epochs, "maximum epochs");
  trn->add_option("--learning-rate", o.learning_rate, "learning rate");
  trn->add_option("--target-mse", o.target_mse, "stop once the dataset mse reaches this");

  auto* ext = app.add_subcommand("extract", "extract IF-THEN rules from a trained model");
  add_options(*ext, o);
  ext->add_option("--pop", o.pop, "GA population size");
  ext->add_option("--generations", o.generations, "GA generations");
  ext->add_option("--threads", o.threads, "GA fitness workers");
  ext->add_option("--confidence", o.confidence, "minimum rule confidence");
  ext->add_option("--epsilon", o.epsilon, "confidence slack for term elimination");
  ext->add_option("--budget", o.budget, "maximum rules per class");

  auto* sts = app.add_subcommand("stats", "compute the statistics report");
  add_options(*sts, o);

  auto* rep = app.add_subcommand("report", "summarize a run directory");
  add_options(*rep, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    const rulex::RunConfig config = resolve(o);
    rulex::StageResult result;
    if (gen->parsed()) {
      result = rulex::cmd_generate(config);
    } else if (trn->parsed()) {
      result = rulex::cmd_train(config);
    } else if (ext->parsed()) {
      result = rulex::cmd_extract(config);
    } else if (sts->parsed()) {
      result = rulex::cmd_stats(config);
    } else {
      result = rulex::cmd_report(config);
    }
    for (const auto& w : result.warnings) spdlog::warn("{}", w);
    for (const auto& p : result.written) spdlog::info("wrote {}", p.generic_string());
    return kOk;
  } catch (const rulex::ValidationError& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const rulex::NumericError& e) {
    spdlog::error("{}", e.what());
    return kNumeric;
  } catch (const rulex::IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("malformed artifact: {}", e.what());
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kIo;
  }
}
