#include "rulex/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"
#include "rulex/psychostats.hpp"
#include "rulex/synthgen.hpp"

namespace rulex {
namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.generic_string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory '" + path.parent_path().generic_string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.generic_string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write to '" + path.generic_string() + "' failed");
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

nlohmann::json parse_json_file(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.generic_string() + "' is not valid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (spec != "paper-default") throw ValidationError("unknown generator spec '" + spec + "' (expected paper-default)");
  if (n < 4) throw ValidationError("cohort size must be at least 4, got " + std::to_string(n));
  if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("noise must lie in [0,1]");
  train.validate();
  rules.validate();
}

RunConfig RunConfig::from_json(const nlohmann::json& doc, RunConfig base) {
  if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
  try {
    if (doc.contains("out")) base.out_dir = doc.at("out").get<std::string>();
    if (doc.contains("schema")) base.schema_path = doc.at("schema").get<std::string>();
    if (doc.contains("data")) base.data_path = doc.at("data").get<std::string>();
    base.spec = doc.value("spec", base.spec);
    base.n = doc.value("n", base.n);
    base.planted = doc.value("planted", base.planted);
    base.noise = doc.value("noise", base.noise);
    base.seed = doc.value("seed", base.seed);
    if (doc.contains("train")) {
      nlohmann::json merged = base.train.to_json();
      merged.update(doc.at("train"));
      base.train = TrainConfig::from_json(merged);
    }
    if (doc.contains("ga")) {
      nlohmann::json merged = base.rules.ga.to_json();
      merged.update(doc.at("ga"));
      base.rules.ga = GaConfig::from_json(merged);
    }
    if (doc.contains("rules")) {
      const auto& r = doc.at("rules");
      base.rules.min_confidence = r.value("min_confidence", base.rules.min_confidence);
      base.rules.epsilon = r.value("epsilon", base.rules.epsilon);
      base.rules.per_class_budget = r.value("per_class_budget", base.rules.per_class_budget);
      base.rules.prune = r.value("prune", base.rules.prune);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run config: ") + e.what());
  }
  return base;
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) { return from_json(doc, RunConfig{}); }

TrainConfig RunConfig::effective_train() const {
  TrainConfig t = train;
  t.seed = derive_seed(seed, "network");
  return t;
}

ExtractionConfig RunConfig::effective_rules() const {
  ExtractionConfig r = rules;
  r.seed = derive_seed(seed, "rules");
  r.ga.seed = r.seed;
  return r;
}

nlohmann::json RunConfig::generate_section() const {
  return {{"spec", spec}, {"n", n}, {"seed", seed}, {"planted", planted}, {"noise", noise}};
}

nlohmann::json RunConfig::train_section() const { return effective_train().to_json(); }

nlohmann::json RunConfig::extract_section() const { return effective_rules().to_json(); }

// ---------------------------------------------------------------------------
// Stages

namespace {

std::string section_hash(const nlohmann::json& section) { return content_hash(section.dump()); }

fs::path data_file(const RunConfig& c) { return c.data_path.value_or(c.out_dir / artifact::kCohort); }

AttributeSchema resolve_schema(const RunConfig& c) {
  fs::path path;
  if (c.schema_path) {
    path = *c.schema_path;
  } else if (fs::exists(c.out_dir / artifact::kCohortSchema)) {
    path = c.out_dir / artifact::kCohortSchema;
  } else {
    return default_student_schema();
  }
  return load_schema(read_text_file(path));
}

struct LoadedData {
  AttributeSchema schema;
  Dataset dataset;
  std::string hash;
};

LoadedData load_data(const RunConfig& c) {
  AttributeSchema schema = resolve_schema(c);
  const std::string text = read_text_file(data_file(c));
  Dataset dataset = parse_dataset_csv(text, schema);
  if (dataset.records.empty()) throw ValidationError("dataset '" + data_file(c).generic_string() + "' has no records");
  return {std::move(schema), std::move(dataset), content_hash(text)};
}

}  // namespace

StageResult cmd_generate(const RunConfig& config) {
  config.validate();
  const auto [n_male, n_female] = split_by_published_ratio(config.n);
  CohortOptions options;
  options.n_male = n_male;
  options.n_female = n_female;
  options.seed = config.seed;
  if (config.planted) options.planted = unit_failure_rules(config.noise);
  const Cohort cohort = generate_default_cohort(options);

  const AttributeSchema& schema = default_student_schema();
  const std::string csv = write_dataset_csv(cohort.dataset, schema);
  nlohmann::json meta = cohort.metadata;
  meta["rows"] = cohort.dataset.records.size();
  meta["config_hash"] = section_hash(config.generate_section());
  meta["dataset_hash"] = content_hash(csv);

  StageResult result;
  for (auto [name, text] : {std::pair<std::string_view, std::string>{artifact::kCohort, csv},
                            {artifact::kCohortMeta, dump_json(meta)},
                            {artifact::kCohortSchema, dump_json(schema.to_json())}}) {
    const fs::path path = config.out_dir / name;
    write_text_file(path, text);
    result.written.push_back(path);
  }
  return result;
}

StageResult cmd_train(const RunConfig& config) {
  config.validate();
  const LoadedData in = load_data(config);
  const TrainConfig tc = config.effective_train();
  const std::vector<EncodedVector> encoded = encode_records(in.dataset.records, in.schema);
  const TrainResult trained = train(init_network(in.schema, tc), encoded, tc);
  if (!std::isfinite(trained.final_mse)) throw NumericError("training diverged: mean squared error is not finite");

  const double accuracy = training_accuracy(trained.network, encoded);
  nlohmann::json model = {
      {"network", network_to_json(trained.network)},
      {"training",
       {{"epochs", trained.epochs},
        {"final_mse", trained.final_mse},
        {"converged", trained.converged},
        {"accuracy", accuracy}}},
      {"train_config", tc.to_json()},
      {"master_seed", config.seed},
      {"generator", kGeneratorId},
      {"config_hash", section_hash(config.train_section())},
      {"dataset_hash", in.hash},
      {"schema_hash", in.schema.hash()},
  };
  nlohmann::json log = {{"epochs", trained.epochs},
                        {"final_mse", trained.final_mse},
                        {"converged", trained.converged},
                        {"target_mse", tc.target_mse},
                        {"mse", trained.mse_history},
                        {"config_hash", section_hash(config.train_section())}};

  StageResult result;
  if (!trained.converged) {
    result.warnings.push_back("training stopped at the epoch limit with mse " + std::to_string(trained.final_mse) +
                              " above target " + std::to_string(tc.target_mse));
  }
  for (auto [name, doc] : {std::pair<std::string_view, const nlohmann::json*>{artifact::kModel, &model},
                           {artifact::kTrainLog, &log}}) {
    const fs::path path = config.out_dir / name;
    write_text_file(path, dump_json(*doc));
    result.written.push_back(path);
  }
  return result;
}

StageResult cmd_extract(const RunConfig& config) {
  config.validate();
  const fs::path model_path = config.out_dir / artifact::kModel;
  const std::string model_text = read_text_file(model_path);
  nlohmann::json model;
  try {
    model = nlohmann::json::parse(model_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + model_path.generic_string() + "' is not valid JSON: " + e.what());
  }
  const AttributeSchema schema = resolve_schema(config);
  const std::string recorded = model.value("schema_hash", std::string());
  if (recorded != schema.hash()) {
    throw ValidationError("schema hash mismatch: model was trained on schema " + recorded + ", dataset schema is " +
                          schema.hash());
  }
  const LoadedData in = load_data(config);
  const Network net = network_from_json(model.at("network"));
  const ExtractionConfig rc = config.effective_rules();
  const RuleSet set = extract_ruleset(net, in.dataset.records, in.schema, rc);

  nlohmann::json doc = ruleset_to_json(set, in.schema);
  doc["training_accuracy"] = set.accuracy(in.dataset.records, in.schema);
  doc["extraction_config"] = rc.to_json();
  doc["master_seed"] = config.seed;
  doc["config_hash"] = section_hash(config.extract_section());
  doc["model_hash"] = content_hash(model_text);
  doc["dataset_hash"] = in.hash;
  doc["schema_hash"] = in.schema.hash();

  std::string text;
  for (const Rule& r : set.rules) text += format_rule(r, in.schema) + "\n";
  const Attribute& target = in.schema.target_attribute();
  text += "Otherwise → Then " + target.name + " = " + target.levels[set.default_class] + "\n";

  StageResult result;
  const fs::path json_path = config.out_dir / artifact::kRuleset;
  const fs::path text_path = config.out_dir / artifact::kRulesText;
  write_text_file(json_path, dump_json(doc));
  write_text_file(text_path, text);
  result.written = {json_path, text_path};
  return result;
}

StageResult cmd_stats(const RunConfig& config) {
  const LoadedData in = load_data(config);
  nlohmann::json report = compute_stats_report(in.dataset, in.schema);
  report["dataset_hash"] = in.hash;
  report["schema_hash"] = in.schema.hash();
  const fs::path path = config.out_dir / artifact::kStats;
  write_text_file(path, dump_json(report));
  return {{path}, {}};
}

// ---------------------------------------------------------------------------
// Stats report

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json stat_row(const std::string& name, double statistic, std::vector<double> df, double p,
                        double effect) {
  return {{"name", name},
          {"statistic", finite_or_null(statistic)},
          {"df", std::move(df)},
          {"p", finite_or_null(p)},
          {"effect_size", finite_or_null(effect)}};
}

struct GroupedColumns {
  std::string group_attribute;
  std::vector<std::string> labels;                 // two group labels
  std::vector<std::vector<std::size_t>> members;   // record indices per group
  const Dataset* dataset = nullptr;

  std::optional<std::vector<double>> column(std::string_view dim, std::size_t g) const {
    const auto idx = dataset->raw_column(dim);
    if (!idx) return std::nullopt;
    std::vector<double> out;
    out.reserve(members[g].size());
    for (std::size_t i : members[g]) out.push_back(dataset->records[i].raw[*idx]);
    return out;
  }

  bool has_all(const std::vector<std::string>& dims) const {
    return std::all_of(dims.begin(), dims.end(), [&](const auto& d) { return dataset->raw_column(d).has_value(); });
  }

  std::vector<double> block_total(const std::vector<std::string>& dims, std::size_t g) const {
    std::vector<double> total(members[g].size(), 0.0);
    for (const auto& d : dims) {
      const auto col = *column(d, g);
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += col[i];
    }
    return total;
  }

  Eigen::MatrixXd block_matrix(const std::vector<std::string>& dims, std::size_t g) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(members[g].size()), static_cast<Eigen::Index>(dims.size()));
    for (std::size_t j = 0; j < dims.size(); ++j) {
      const auto col = *column(dims[j], g);
      for (std::size_t i = 0; i < col.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    return m;
  }
};

double cohen_d(const std::vector<double>& a, const std::vector<double>& b) {
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * stats::variance(a) + (nb - 1.0) * stats::variance(b)) / (na + nb - 2.0);
  return pooled > 0.0 ? (stats::mean(b) - stats::mean(a)) / std::sqrt(pooled) : 0.0;
}

}  // namespace

nlohmann::json compute_stats_report(const Dataset& dataset, const AttributeSchema& schema) {
  const MeasureBlocks& blocks = default_measure_blocks();
  const auto group_pos = schema.find(blocks.gender);
  if (!group_pos) throw ValidationError("dataset schema has no '" + blocks.gender + "' attribute to group by");
  const Attribute& group_attr = schema.attribute(*group_pos);
  if (group_attr.levels.size() != 2) throw ValidationError("grouping attribute must have exactly two levels");
  if (!dataset.raw_column(blocks.reasoning)) {
    throw ValidationError("dataset has no raw '" + blocks.reasoning + "' column; statistics need raw scores");
  }

  GroupedColumns cols;
  cols.group_attribute = group_attr.name;
  cols.labels = group_attr.levels;
  cols.members.resize(2);
  cols.dataset = &dataset;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    cols.members[dataset.records[i].levels[*group_pos]].push_back(i);
  }

  struct Block {
    std::string key;
    const std::vector<std::string>* dims;
  };
  const std::vector<Block> block_list = {{"learning_skills", &blocks.learning_skills},
                                         {"motivation", &blocks.motivation},
                                         {"interaction", &blocks.interaction}};
  std::size_t widest = 1;
  for (const auto& b : block_list) {
    if (cols.has_all(*b.dims)) widest = std::max(widest, b.dims->size());
  }
  const std::size_t n_total = dataset.records.size();
  for (std::size_t g = 0; g < 2; ++g) {
    if (cols.members[g].size() < 4) {
      throw ValidationError("insufficient data: group '" + cols.labels[g] + "' has " +
                            std::to_string(cols.members[g].size()) + " records, at least 4 are needed");
    }
  }
  if (n_total < widest + 3) {
    throw ValidationError("insufficient data: " + std::to_string(n_total) + " records for a " +
                          std::to_string(widest) + "-variable MANOVA");
  }

  nlohmann::json report;
  report["group_attribute"] = cols.group_attribute;
  report["groups"] = nlohmann::json::array();
  for (std::size_t g = 0; g < 2; ++g) report["groups"].push_back({{"label", cols.labels[g]}, {"n", cols.members[g].size()}});

  {
    const auto a = *cols.column(blocks.reasoning, 0);
    const auto b = *cols.column(blocks.reasoning, 1);
    const stats::TTestResult t = stats::t_test(a, b, stats::TTestMethod::welch);
    nlohmann::json row = stat_row(blocks.reasoning + " by " + cols.group_attribute, t.t, {t.df}, t.p, cohen_d(a, b));
    report["gender_t_test"] = {{"method", "welch"},
                               {"statistic", "t"},
                               {"effect", "cohen_d"},
                               {"means", {{cols.labels[0], stats::mean(a)}, {cols.labels[1], stats::mean(b)}}},
                               {"rows", nlohmann::json::array({row})}};
  }

  report["manova"] = nlohmann::json::array();
  for (const auto& b : block_list) {
    if (!cols.has_all(*b.dims)) continue;
    const std::vector<Eigen::MatrixXd> mats = {cols.block_matrix(*b.dims, 0), cols.block_matrix(*b.dims, 1)};
    const stats::ManovaResult m = stats::manova_wilks(mats);
    nlohmann::json univariate = nlohmann::json::array();
    nlohmann::json levene = nlohmann::json::array();
    auto add_dimension = [&](const std::string& name, std::vector<double> g0, std::vector<double> g1) {
      const std::vector<std::vector<double>> groups = {std::move(g0), std::move(g1)};
      const stats::AnovaRow a = stats::anova_oneway(groups);
      univariate.push_back(stat_row(name, a.f, {a.df_hypothesis, a.df_error}, a.p, a.eta_squared));
      const stats::LeveneResult l = stats::levene_w(groups);
      levene.push_back(stat_row(name, l.w, {l.df1, l.df2}, l.p, std::nan("")));
    };
    for (const auto& d : *b.dims) add_dimension(d, *cols.column(d, 0), *cols.column(d, 1));
    add_dimension("Total", cols.block_total(*b.dims, 0), cols.block_total(*b.dims, 1));
    report["manova"].push_back(
        {{"block", b.key},
         {"multivariate", stat_row("Wilks lambda", m.wilks_lambda, {m.df1, m.df2}, m.p, m.eta_squared)},
         {"f", finite_or_null(m.f)},
         {"univariate", std::move(univariate)},
         {"levene", std::move(levene)}});
  }

  nlohmann::json partial = nlohmann::json::array();
  if (cols.has_all(blocks.interaction)) {
    for (std::size_t g = 0; g < 2; ++g) {
      const auto reasoning = *cols.column(blocks.reasoning, g);
      const auto control = cols.block_total(blocks.interaction, g);
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& b : block_list) {
        if (b.key == "interaction" || !cols.has_all(*b.dims)) continue;
        const auto total = cols.block_total(*b.dims, g);
        const double r = stats::partial_r(total, reasoning, control);
        const double df = static_cast<double>(total.size()) - 3.0;
        rows.push_back(stat_row(b.key + " total ~ " + blocks.reasoning, r, {df}, stats::p_value_r(r, df), r * r));
      }
      partial.push_back({{"group", cols.labels[g]}, {"control", "interaction total"}, {"rows", std::move(rows)}});
    }
  }
  report["partial_correlations"] = std::move(partial);

  nlohmann::json reliability = nlohmann::json::array();
  for (const auto& b : block_list) {
    if (!cols.has_all(*b.dims)) continue;
    Eigen::MatrixXd all(static_cast<Eigen::Index>(n_total), static_cast<Eigen::Index>(b.dims->size()));
    for (std::size_t j = 0; j < b.dims->size(); ++j) {
      const std::size_t c = *dataset.raw_column((*b.dims)[j]);
      for (std::size_t i = 0; i < n_total; ++i) {
        all(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dataset.records[i].raw[c];
      }
    }
    reliability.push_back(stat_row(b.key, stats::cronbach_alpha(all), {}, std::nan(""), std::nan("")));
  }
  report["reliability"] = std::move(reliability);

  nlohmann::json descriptives = nlohmann::json::array();
  for (const auto& dim : dataset.raw_columns) {
    for (std::size_t g = 0; g < 2; ++g) {
      const auto x = *cols.column(dim, g);
      const double sd = std::sqrt(stats::variance(x));
      descriptives.push_back({{"dimension", dim},
                              {"group", cols.labels[g]},
                              {"n", x.size()},
                              {"mean", stats::mean(x)},
                              {"sd", sd},
                              {"se", sd / std::sqrt(static_cast<double>(x.size()))}});
    }
  }
  report["descriptives"] = std::move(descriptives);
  return report;
}

}  // namespace rulex
