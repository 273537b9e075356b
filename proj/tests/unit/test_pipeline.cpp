#include <gtest/gtest.h>

#include <filesystem>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"
#include "rulex/pipeline.hpp"
#include "rulex/synthgen.hpp"

using namespace rulex;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rulex_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig quick_config(const fs::path& dir) {
  RunConfig c;
  c.out_dir = dir;
  c.rules.ga.population_size = 40;
  c.rules.ga.generations = 40;
  return c;
}

void run_all(const RunConfig& c) {
  cmd_generate(c);
  cmd_train(c);
  cmd_extract(c);
  cmd_stats(c);
  cmd_report(c);
}

}  // namespace

TEST(RunConfig, ValidationAndOverlay) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n = 3;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.spec = "other";
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.noise = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);

  const auto doc = nlohmann::json::parse(R"({"seed": 99, "n": 120, "train": {"max_epochs": 10},
                                            "rules": {"per_class_budget": 3}})");
  const auto o = RunConfig::from_json(doc);
  EXPECT_EQ(o.seed, 99u);
  EXPECT_EQ(o.n, 120u);
  EXPECT_EQ(o.train.max_epochs, 10u);
  EXPECT_EQ(o.train.learning_rate, TrainConfig{}.learning_rate);
  EXPECT_EQ(o.rules.per_class_budget, 3u);
  EXPECT_THROW(RunConfig::from_json(nlohmann::json::array()), ValidationError);
  // Stage seeds derive from the master seed.
  EXPECT_EQ(o.effective_train().seed, derive_seed(99, "network"));
  EXPECT_EQ(o.effective_rules().seed, derive_seed(99, "rules"));
}

TEST(Pipeline, GenerateRejectsBadSizeWithoutWriting) {
  const auto dir = scratch("bad_n");
  RunConfig c;
  c.out_dir = dir;
  c.n = 0;
  EXPECT_THROW(cmd_generate(c), ValidationError);
  EXPECT_FALSE(fs::exists(dir / artifact::kCohort));
}

TEST(Pipeline, FullRunIsDeterministic) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_all(quick_config(a));
  run_all(quick_config(b));
  for (auto name : {artifact::kCohort, artifact::kCohortMeta, artifact::kModel, artifact::kTrainLog,
                    artifact::kRuleset, artifact::kRulesText, artifact::kStats, artifact::kReport}) {
    EXPECT_EQ(read_text_file(a / name), read_text_file(b / name)) << name;
  }
  const auto rules = read_text_file(a / artifact::kRulesText);
  EXPECT_NE(rules.find("Otherwise → Then Reasoning = "), std::string::npos);
  const auto report = read_text_file(a / artifact::kReport);
  EXPECT_NE(report.find("Provenance"), std::string::npos);

  auto other = quick_config(scratch("det_c"));
  other.seed = 8;
  cmd_generate(other);
  EXPECT_NE(read_text_file(a / artifact::kCohort), read_text_file(other.out_dir / artifact::kCohort));
}

TEST(Pipeline, ReportNamesMissingArtifacts) {
  const auto dir = scratch("missing");
  const auto c = quick_config(dir);
  cmd_generate(c);
  try {
    cmd_report(c);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::string(artifact::kModel)), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::string(artifact::kRuleset)), std::string::npos) << msg;
  }
}

TEST(Pipeline, TamperedCohortBreaksProvenance) {
  const auto dir = scratch("tamper");
  const auto c = quick_config(dir);
  run_all(c);
  auto text = read_text_file(dir / artifact::kCohort);
  text += text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n'));
  write_text_file(dir / artifact::kCohort, text);
  EXPECT_THROW(cmd_report(c), ValidationError);
}

TEST(Pipeline, ExtractRejectsForeignSchema) {
  const auto dir = scratch("schema");
  const auto c = quick_config(dir);
  cmd_generate(c);
  cmd_train(c);
  auto model = parse_json_file(dir / artifact::kModel);
  model["schema_hash"] = "0000000000000000";
  write_text_file(dir / artifact::kModel, dump_json(model));
  EXPECT_THROW(cmd_extract(c), ValidationError);
}

TEST(Stats, DefaultCohortShowsPublishedDirection) {
  CohortOptions o;
  o.seed = 5;
  const auto cohort = generate_default_cohort(o);
  const auto report = compute_stats_report(cohort.dataset, default_student_schema());
  const auto& means = report.at("gender_t_test").at("means");
  EXPECT_GT(means.at("Fe").get<double>(), means.at("Ma").get<double>());
  ASSERT_EQ(report.at("manova").size(), 3u);
  for (const auto& block : report.at("manova")) {
    const double lambda = block.at("multivariate").at("statistic").get<double>();
    EXPECT_GT(lambda, 0.0);
    EXPECT_LE(lambda, 1.0);
  }
}

TEST(Stats, TooFewRecordsIsInsufficientData) {
  CohortOptions o;
  const auto cohort = generate_default_cohort(o);
  Dataset tiny = cohort.dataset;
  tiny.records.resize(2);
  try {
    compute_stats_report(tiny, default_student_schema());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient data"), std::string::npos);
  }
}
