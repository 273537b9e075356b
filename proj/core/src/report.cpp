#include <cmath>
#include <cstdio>
#include <map>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"
#include "rulex/pipeline.hpp"
#include "rulex/psychostats.hpp"
#include "rulex/synthgen.hpp"

namespace rulex {
namespace fs = std::filesystem;
namespace {

// Published summary figures the report compares against.
struct PublishedAnova {
  const char* name;
  double ss_h, df_h, ss_e, df_e;
  double f, eta;  // as printed
};

constexpr PublishedAnova kLearningSkillAnova[] = {
    {"Management of dispersants", 18.05, 1, 1177.3, 95, 1.46, 0.02},
    {"Management of study time", 114.19, 1, 669.36, 95, 16.2, 0.15},
    {"Summing and taking notes", 106.23, 1, 436.02, 95, 23.2, 0.2},
    {"Preparing for examinations", 20.77, 1, 199.30, 95, 9.88, 0.1},
    {"Organization of information", 43.08, 1, 317.29, 95, 12.9, 0.12},
    {"Continuation of study", 36.03, 1, 325.72, 95, 10.5, 0.10},
    {"Use of computer & Internet", 177.97, 1, 1088.9, 95, 15.5, 0.14},
    {"Total", 3102.3, 1, 12041.8, 95, 24.5, 0.21},
};

constexpr double kWilksPairs[][2] = {{0.68, 0.32}, {0.56, 0.44}, {0.82, 0.18}};

constexpr stats::SampleSummary kReasoningMale{11.84, 2.86, 49};
constexpr stats::SampleSummary kReasoningFemale{13.73, 1.67, 48};
constexpr double kReasoningT = 3.99;

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::string num(const nlohmann::json& v, const char* format = "%.4f") {
  return v.is_number() ? fmt(format, v.get<double>()) : std::string("n/a");
}

std::string df_text(const nlohmann::json& df) {
  std::string out;
  for (std::size_t i = 0; i < df.size(); ++i) {
    if (i > 0) out += ", ";
    out += num(df[i], "%.4g");
  }
  return out;
}

struct Comparisons {
  std::string text;
  std::size_t passed = 0;
  std::size_t total = 0;

  void add(bool ok, const std::string& line) {
    text += std::string(ok ? "  [PASS] " : "  [FAIL] ") + line + "\n";
    passed += ok;
    ++total;
  }
};

}  // namespace

StageResult cmd_report(const RunConfig& config) {
  const fs::path dir = config.out_dir;
  const fs::path data = config.data_path.value_or(dir / artifact::kCohort);
  const bool own_cohort = !config.data_path.has_value();

  std::vector<std::pair<std::string, fs::path>> required;
  required.emplace_back(own_cohort ? std::string(artifact::kCohort) : data.generic_string(), data);
  if (own_cohort) required.emplace_back(std::string(artifact::kCohortMeta), dir / artifact::kCohortMeta);
  for (auto name : {artifact::kModel, artifact::kTrainLog, artifact::kRuleset, artifact::kRulesText, artifact::kStats}) {
    required.emplace_back(std::string(name), dir / name);
  }
  std::string missing;
  for (const auto& [name, path] : required) {
    if (!fs::exists(path)) missing += (missing.empty() ? "" : ", ") + name;
  }
  if (!missing.empty()) throw IoError("missing artifacts in '" + dir.generic_string() + "': " + missing);

  const std::string cohort_text = read_text_file(data);
  const std::string model_text = read_text_file(dir / artifact::kModel);
  const std::string dataset_hash = content_hash(cohort_text);
  const std::string model_hash = content_hash(model_text);
  const nlohmann::json model = nlohmann::json::parse(model_text, nullptr, false);
  const nlohmann::json ruleset = parse_json_file(dir / artifact::kRuleset);
  const nlohmann::json stats = parse_json_file(dir / artifact::kStats);
  const nlohmann::json train_log = parse_json_file(dir / artifact::kTrainLog);
  if (model.is_discarded()) throw ValidationError("'" + (dir / artifact::kModel).generic_string() + "' is not valid JSON");
  const nlohmann::json meta = own_cohort ? parse_json_file(dir / artifact::kCohortMeta) : nlohmann::json::object();

  // Provenance chain: each recorded upstream hash must match the file on disk.
  struct Link {
    std::string artifact, field, expected;
    const nlohmann::json* doc;
  };
  std::vector<Link> links = {{std::string(artifact::kModel), "dataset_hash", dataset_hash, &model},
                             {std::string(artifact::kRuleset), "dataset_hash", dataset_hash, &ruleset},
                             {std::string(artifact::kRuleset), "model_hash", model_hash, &ruleset},
                             {std::string(artifact::kStats), "dataset_hash", dataset_hash, &stats}};
  if (own_cohort) links.push_back({std::string(artifact::kCohortMeta), "dataset_hash", dataset_hash, &meta});
  const std::string schema_hash = model.value("schema_hash", std::string());
  links.push_back({std::string(artifact::kRuleset), "schema_hash", schema_hash, &ruleset});
  links.push_back({std::string(artifact::kStats), "schema_hash", schema_hash, &stats});
  links.push_back({std::string(artifact::kTrainLog), "config_hash", model.value("config_hash", std::string()), &train_log});

  std::string provenance;
  std::string mismatches;
  for (const auto& l : links) {
    const std::string recorded = l.doc->value(l.field, std::string());
    const bool ok = !recorded.empty() && recorded == l.expected;
    provenance += fmt("  %-18s %-13s %s\n", l.artifact.c_str(), l.field.c_str(), ok ? "ok" : "MISMATCH");
    if (!ok) {
      mismatches += (mismatches.empty() ? "" : "; ") + l.artifact + " " + l.field + " " +
                    (recorded.empty() ? "<absent>" : recorded) + " != " + l.expected;
    }
  }
  if (!mismatches.empty()) throw ValidationError("hash mismatch: " + mismatches);

  std::string out;
  out += "edm-rulex run report\n\n";

  out += "Artifacts\n";
  for (const auto& [name, path] : required) {
    out += fmt("  %-18s %s\n", name.c_str(), content_hash(read_text_file(path)).c_str());
  }
  out += "\nProvenance\n" + provenance;

  out += "\nConfiguration\n";
  if (own_cohort) {
    out += "  generate  config " + meta.value("config_hash", std::string("n/a")) + "  seed " +
           std::to_string(meta.value("seed", std::uint64_t{0})) + "  spec " + meta.value("spec", std::string("n/a")) +
           "  generator " + meta.value("generator", std::string("n/a")) + "\n";
  }
  const auto& tc = model.at("train_config");
  out += "  train     config " + model.value("config_hash", std::string("n/a")) + "  seed " +
         std::to_string(tc.value("seed", std::uint64_t{0})) + "  hidden " +
         std::to_string(model.at("network").at("sizes").value("hidden", std::size_t{0})) + "\n";
  const auto& ec = ruleset.at("extraction_config");
  out += "  extract   config " + ruleset.value("config_hash", std::string("n/a")) + "  seed " +
         std::to_string(ec.value("seed", std::uint64_t{0})) + "  population " +
         std::to_string(ec.at("ga").value("population_size", std::size_t{0})) + "  generations " +
         std::to_string(ec.at("ga").value("generations", std::size_t{0})) + "  confidence " +
         num(ec.at("min_confidence"), "%.2f") + "\n";

  const auto& tr = model.at("training");
  out += "\nTraining\n";
  out += "  epochs " + std::to_string(tr.value("epochs", std::size_t{0})) + "  final mse " + num(tr.at("final_mse"), "%.6f") +
         "  converged " + (tr.value("converged", false) ? "yes" : "no") + "  accuracy " +
         num(tr.at("accuracy"), "%.4f") + "\n";

  out += "\nRules\n";
  std::size_t idx = 0;
  for (const auto& r : ruleset.at("rules")) {
    out += fmt("  %2zu. ", ++idx) + r.value("text", std::string()) + fmt("  [support %zu, confidence %.3f]\n",
           r.value("support", std::size_t{0}), r.value("confidence", 0.0));
  }
  out += "  default: " + ruleset.value("default", std::string()) + "\n";
  out += "  rule-set training accuracy " + num(ruleset.at("training_accuracy")) + "\n";

  out += "\nStatistics\n";
  for (const auto& row : stats.at("gender_t_test").at("rows")) {
    out += "  t test  " + row.value("name", std::string()) + ": t = " + num(row["statistic"]) + ", df = " +
           df_text(row["df"]) + ", p = " + num(row["p"], "%.3g") + ", d = " + num(row["effect_size"]) + "\n";
  }
  for (const auto& block : stats.at("manova")) {
    const auto& mv = block.at("multivariate");
    out += "  MANOVA " + block.value("block", std::string()) + ": Wilks lambda = " + num(mv["statistic"]) + ", F(" +
           df_text(mv["df"]) + ") = " + num(block["f"]) + ", p = " + num(mv["p"], "%.3g") +
           ", eta^2 = " + num(mv["effect_size"]) + "\n";
    for (const auto& row : block.at("univariate")) {
      out += fmt("    %-32s F = %s, p = %s, eta^2 = %s\n", row.value("name", std::string()).c_str(),
                 num(row["statistic"]).c_str(), num(row["p"], "%.3g").c_str(), num(row["effect_size"]).c_str());
    }
  }
  for (const auto& g : stats.at("partial_correlations")) {
    for (const auto& row : g.at("rows")) {
      out += "  partial r (" + g.value("group", std::string()) + ", controlling " + g.value("control", std::string()) +
             ") " + row.value("name", std::string()) + " = " + num(row["statistic"]) + ", df = " + df_text(row["df"]) +
             ", p = " + num(row["p"], "%.3g") + "\n";
    }
  }
  for (const auto& row : stats.at("reliability")) {
    out += "  alpha " + row.value("name", std::string()) + " = " + num(row["statistic"]) + "\n";
  }

  Comparisons cmp;
  {
    const auto t = stats::t_test_from_summary(kReasoningMale, kReasoningFemale, stats::TTestMethod::welch);
    cmp.add(std::abs(t.t - kReasoningT) <= 0.05 && t.p < 0.01,
            fmt("reasoning t from published summaries (Welch): %.3f vs %.2f +-0.05, p = %.2g", t.t, kReasoningT, t.p));
  }
  for (const auto& row : kLearningSkillAnova) {
    const auto a = stats::anova_from_sums(row.ss_h, row.df_h, row.ss_e, row.df_e);
    cmp.add(std::abs(a.f - row.f) <= 0.1 && std::abs(a.eta_squared - row.eta) <= 0.01,
            fmt("univariate %s: F %.3f vs %.2f +-0.1, eta^2 %.3f vs %.2f +-0.01", row.name, a.f, row.f,
                a.eta_squared, row.eta));
  }
  for (const auto& pair : kWilksPairs) {
    const double eta = stats::wilks_eta_squared(pair[0]);
    cmp.add(std::abs(eta - pair[1]) <= 0.005, fmt("Wilks identity: 1 - %.2f = %.3f vs %.2f +-0.005", pair[0], eta, pair[1]));
  }
  if (own_cohort && meta.value("spec", std::string()) == "paper-default" && meta.value("planted", nlohmann::json()).is_null()) {
    std::map<std::pair<std::string, std::string>, nlohmann::json> observed;
    for (const auto& d : stats.at("descriptives")) {
      observed[{d.value("dimension", std::string()), d.value("group", std::string())}] = d;
    }
    const auto& n = meta.at("n");
    const PopulationSpec target = default_population_spec(n.value("Ma", std::size_t{0}), n.value("Fe", std::size_t{0}),
                                                          meta.value("seed", std::uint64_t{0}));
    for (const auto& g : target.groups) {
      for (std::size_t j = 0; j < target.dimensions.size(); ++j) {
        const auto it = observed.find({target.dimensions[j], g.label});
        if (it == observed.end()) continue;
        const double got = it->second.value("mean", 0.0);
        const double want = g.mean(static_cast<Eigen::Index>(j));
        const double se3 = 3.0 * g.sd(static_cast<Eigen::Index>(j)) / std::sqrt(static_cast<double>(g.n));
        cmp.add(std::abs(got - want) <= se3, fmt("cohort mean %s (%s): %.3f vs %.3f +-%.3f", target.dimensions[j].c_str(),
                                                 g.label.c_str(), got, want, se3));
      }
    }
  }
  out += "\nPublished-target comparisons\n" + cmp.text;
  out += fmt("  %zu of %zu comparisons pass\n", cmp.passed, cmp.total);

  const fs::path path = dir / artifact::kReport;
  write_text_file(path, out);
  StageResult result{{path}, {}};
  if (cmp.passed != cmp.total) {
    result.warnings.push_back(std::to_string(cmp.total - cmp.passed) + " published-target comparisons failed");
  }
  return result;
}

}  // namespace rulex
