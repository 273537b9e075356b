#include "rulex/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"

namespace rulex {

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& matrix) {
  const Eigen::Index n = matrix.rows();
  if (matrix.cols() != n) throw ValidationError("cholesky_factor needs a square matrix");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double a = matrix(i, j);
      const double b = matrix(j, i);
      if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw ValidationError("cholesky_factor needs a symmetric matrix");
      }
    }
  }
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = matrix(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
    if (!(pivot > 0.0)) {
      std::ostringstream msg;
      msg << "matrix is not positive definite: leading minor of order " << (j + 1)
          << " has non-positive pivot " << pivot;
      throw NumericError(msg.str());
    }
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = matrix(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / diag;
    }
  }
  return lower;
}

Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& correlation, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
  if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition failed during correlation repair");
  if (eig.eigenvalues().minCoeff() >= floor) return correlation;
  const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd repaired = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd inv_sd = repaired.diagonal().cwiseSqrt().cwiseInverse();
  repaired = inv_sd.asDiagonal() * repaired * inv_sd.asDiagonal();
  repaired = 0.5 * (repaired + repaired.transpose());
  repaired.diagonal().setOnes();
  return repaired;
}

void PopulationSpec::validate() const {
  const auto d = static_cast<Eigen::Index>(dimensions.size());
  if (d == 0) throw ValidationError("population spec has no dimensions");
  if (groups.empty()) throw ValidationError("population spec has no groups");
  for (const auto& g : groups) {
    const std::string who = "group '" + g.label + "'";
    if (g.n < 1) throw ValidationError(who + " needs n >= 1");
    if (g.mean.size() != d || g.sd.size() != d) throw ValidationError(who + " mean/sd length mismatch");
    if (g.correlation.rows() != d || g.correlation.cols() != d) {
      throw ValidationError(who + " correlation matrix has the wrong shape");
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!std::isfinite(g.mean(i)) || !(g.sd(i) >= 0.0)) throw ValidationError(who + " has invalid mean/sd");
      if (std::abs(g.correlation(i, i) - 1.0) > 1e-12) throw ValidationError(who + " correlation diagonal must be 1");
      for (Eigen::Index j = 0; j < d; ++j) {
        const double r = g.correlation(i, j);
        if (!(r >= -1.0 && r <= 1.0)) throw ValidationError(who + " correlation entry outside [-1,1]");
        if (std::abs(r - g.correlation(j, i)) > 1e-12) throw ValidationError(who + " correlation not symmetric");
      }
    }
  }
}

nlohmann::json PopulationSpec::to_json() const {
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json corr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < g.correlation.rows(); ++i) {
      std::vector<double> row(g.correlation.cols());
      for (Eigen::Index j = 0; j < g.correlation.cols(); ++j) row[static_cast<std::size_t>(j)] = g.correlation(i, j);
      corr.push_back(row);
    }
    gs.push_back({{"label", g.label},
                  {"n", g.n},
                  {"mean", std::vector<double>(g.mean.begin(), g.mean.end())},
                  {"sd", std::vector<double>(g.sd.begin(), g.sd.end())},
                  {"correlation", std::move(corr)}});
  }
  return {{"dimensions", dimensions}, {"groups", std::move(gs)}, {"seed", seed}, {"repair", repair}};
}

std::string PopulationSpec::hash() const { return content_hash(to_json().dump()); }

std::vector<GroupSample> sample_population(const PopulationSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.dimensions.size());
  std::vector<GroupSample> out;
  for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
    const GroupSpec& g = spec.groups[gi];
    GroupSample sample;
    sample.label = g.label;
    sample.effective_correlation = spec.repair ? repair_correlation(g.correlation) : g.correlation;
    const Eigen::MatrixXd lower = cholesky_factor(sample.effective_correlation);

    Rng rng(derive_seed(spec.seed, "synthgen", gi));
    std::normal_distribution<double> normal(0.0, 1.0);
    sample.scores.resize(static_cast<Eigen::Index>(g.n), d);
    Eigen::VectorXd z(d);
    for (Eigen::Index row = 0; row < static_cast<Eigen::Index>(g.n); ++row) {
      for (Eigen::Index k = 0; k < d; ++k) z(k) = normal(rng);
      const Eigen::VectorXd correlated = lower.triangularView<Eigen::Lower>() * z;
      sample.scores.row(row) = (g.mean + g.sd.cwiseProduct(correlated)).transpose();
    }
    out.push_back(std::move(sample));
  }
  return out;
}

namespace {

struct PublishedDimension {
  const char* name;
  double male_mean, male_se, female_mean, female_se;
};

// Learning skills, achievement motivation and classroom interaction:
// per-gender mean and standard error of the mean.
constexpr PublishedDimension kScaleDimensions[] = {
    {"Management of dispersants", 25.408, 0.503, 26.271, 0.508},
    {"Management of study time", 15.163, 0.379, 17.333, 0.383},
    {"Summing and taking notes", 14.469, 0.306, 16.563, 0.309},
    {"Preparing for examinations", 10.367, 0.207, 11.292, 0.209},
    {"Organization of information", 10.980, 0.261, 12.313, 0.264},
    {"Continuation of study", 9.510, 0.265, 10.729, 0.267},
    {"Use of computer & Internet", 12.041, 0.484, 14.750, 0.489},
    {"Challenge", 21.306, 0.389, 24.063, 0.393},
    {"Desire to work", 24.898, 0.533, 25.812, 0.538},
    {"Ambition", 13.000, 0.300, 14.542, 0.303},
    {"Self-reliance", 12.735, 0.285, 13.625, 0.287},
    {"Fear of failure", 17.898, 0.421, 18.667, 0.425},
    {"Social motivations", 21.041, 0.469, 23.750, 0.474},
    {"Awareness of time importance", 18.449, 0.326, 20.979, 0.330},
    {"Competition", 21.673, 0.507, 22.229, 0.512},
    {"Potential of the classroom", 5.327, 0.246, 4.542, 0.248},
    {"Student's positivity", 22.878, 0.514, 23.563, 0.519},
    {"Teacher's positivity", 29.959, 0.629, 27.667, 0.636},
};

// Correlation of each learning-skill and motivation dimension with
// reasoning (male, female), in the order of kScaleDimensions.
constexpr double kReasoningCorrelation[][2] = {
    {0.70, 0.64}, {0.45, 0.40}, {0.26, 0.35}, {0.23, 0.24}, {0.35, 0.39}, {0.30, 0.45},
    {0.27, 0.31}, {0.52, 0.66}, {0.54, 0.63}, {0.40, 0.52}, {0.41, 0.75}, {0.44, 0.55},
    {0.53, 0.60}, {0.47, 0.63}, {0.56, 0.61},
};

// Reasoning test: actual sample standard deviations.
constexpr double kReasoningMean[2] = {11.84, 13.73};
constexpr double kReasoningSd[2] = {2.86, 1.67};

// Course units (percent scale). Not published; chosen so grade bands are
// all populated and units track reasoning.
constexpr double kUnitMean[2] = {62.0, 66.0};
constexpr double kUnitSd = 15.0;
constexpr double kUnitReasoningCorrelation = 0.5;
constexpr double kUnitUnitCorrelation = 0.3;

}  // namespace

PopulationSpec default_population_spec(std::size_t n_male, std::size_t n_female, std::uint64_t seed) {
  const auto& blocks = default_measure_blocks();
  PopulationSpec spec;
  spec.seed = seed;
  for (const auto& dim : kScaleDimensions) spec.dimensions.emplace_back(dim.name);
  for (const auto& unit : blocks.units) spec.dimensions.push_back(unit);
  spec.dimensions.push_back(blocks.reasoning);

  const auto d = static_cast<Eigen::Index>(spec.dimensions.size());
  const Eigen::Index n_scale = std::size(kScaleDimensions);
  const Eigen::Index n_units = static_cast<Eigen::Index>(blocks.units.size());
  const Eigen::Index reasoning = d - 1;
  const double published_n[2] = {static_cast<double>(kPublishedMaleCount),
                                 static_cast<double>(kPublishedFemaleCount)};
  const std::size_t counts[2] = {n_male, n_female};
  const char* labels[2] = {"Ma", "Fe"};

  for (int g = 0; g < 2; ++g) {
    GroupSpec group;
    group.label = labels[g];
    group.n = counts[g];
    group.mean.resize(d);
    group.sd.resize(d);
    group.correlation = Eigen::MatrixXd::Identity(d, d);
    for (Eigen::Index i = 0; i < n_scale; ++i) {
      const auto& dim = kScaleDimensions[i];
      group.mean(i) = g == 0 ? dim.male_mean : dim.female_mean;
      group.sd(i) = (g == 0 ? dim.male_se : dim.female_se) * std::sqrt(published_n[g]);
    }
    for (Eigen::Index u = 0; u < n_units; ++u) {
      group.mean(n_scale + u) = kUnitMean[g];
      group.sd(n_scale + u) = kUnitSd;
      for (Eigen::Index v = 0; v < n_units; ++v) {
        if (u != v) group.correlation(n_scale + u, n_scale + v) = kUnitUnitCorrelation;
      }
      group.correlation(n_scale + u, reasoning) = kUnitReasoningCorrelation;
      group.correlation(reasoning, n_scale + u) = kUnitReasoningCorrelation;
    }
    group.mean(reasoning) = kReasoningMean[g];
    group.sd(reasoning) = kReasoningSd[g];
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(std::size(kReasoningCorrelation)); ++i) {
      group.correlation(i, reasoning) = kReasoningCorrelation[i][g];
      group.correlation(reasoning, i) = kReasoningCorrelation[i][g];
    }
    spec.groups.push_back(std::move(group));
  }
  return spec;
}

std::pair<std::size_t, std::size_t> split_by_published_ratio(std::size_t total) {
  const std::size_t published = kPublishedMaleCount + kPublishedFemaleCount;
  const std::size_t male = (total * kPublishedMaleCount + published / 2) / published;
  return {male, total - male};
}

DiscretizationSpec default_discretization(const std::vector<GroupSample>& samples,
                                          const std::vector<std::string>& dimensions) {
  const auto& blocks = default_measure_blocks();
  const std::vector<std::string> grade = {"F", "P", "G", "V.G"};
  DiscretizationSpec spec;
  for (std::size_t k = 0; k < dimensions.size(); ++k) {
    const std::string& dim = dimensions[k];
    if (dim == blocks.reasoning) {
      spec.set(dim, Banding({10.0, 13.0, 16.0}, grade));
      continue;
    }
    if (std::find(blocks.units.begin(), blocks.units.end(), dim) != blocks.units.end()) {
      spec.set(dim, Banding({50.0, 65.0, 80.0}, grade));
      continue;
    }
    std::vector<double> pooled;
    for (const auto& s : samples) {
      for (Eigen::Index r = 0; r < s.scores.rows(); ++r) pooled.push_back(s.scores(r, static_cast<Eigen::Index>(k)));
    }
    spec.set(dim, Banding(quantile_cuts(pooled, 3), {"L", "M", "H"}));
  }
  return spec;
}

Dataset build_records(const std::vector<GroupSample>& samples, const std::vector<std::string>& dimensions,
                      const DiscretizationSpec& discretization, const AttributeSchema& schema,
                      std::string_view group_attribute) {
  const std::size_t group_attr = schema.index_of(group_attribute);
  std::vector<std::optional<std::size_t>> dim_of_attr(schema.size());
  for (std::size_t a = 0; a < schema.size(); ++a) {
    if (a == group_attr) continue;
    for (std::size_t k = 0; k < dimensions.size(); ++k) {
      if (dimensions[k] == schema.attribute(a).name) dim_of_attr[a] = k;
    }
    if (!dim_of_attr[a]) {
      throw ValidationError("no raw dimension feeds schema attribute '" + schema.attribute(a).name + "'");
    }
  }

  Dataset dataset;
  dataset.raw_columns = dimensions;
  for (const auto& sample : samples) {
    const auto group_level = schema.attribute(group_attr).level_index(sample.label);
    if (!group_level) throw ValidationError("group label '" + sample.label + "' is not a level of '" +
                                            std::string(group_attribute) + "'");
    for (Eigen::Index r = 0; r < sample.scores.rows(); ++r) {
      StudentRecord record;
      record.levels.assign(schema.size(), 0);
      record.levels[group_attr] = *group_level;
      record.raw.resize(dimensions.size());
      for (std::size_t k = 0; k < dimensions.size(); ++k) record.raw[k] = sample.scores(r, static_cast<Eigen::Index>(k));
      for (std::size_t a = 0; a < schema.size(); ++a) {
        if (!dim_of_attr[a]) continue;
        const Attribute& attr = schema.attribute(a);
        const std::string& token = discretization.at(attr.name).token(record.raw[*dim_of_attr[a]]);
        const auto level = attr.level_index(token);
        if (!level) throw ValidationError("discretization token '" + token + "' is not a level of '" + attr.name + "'");
        record.levels[a] = *level;
      }
      dataset.records.push_back(std::move(record));
    }
  }
  return dataset;
}

void PlantedRuleSpec::validate(const AttributeSchema& schema) const {
  if (!(noise >= 0.0 && noise < 1.0)) throw ValidationError("planted noise rate must lie in [0,1)");
  if (rules.empty() || !rules.back().terms.empty()) {
    throw ValidationError("planted rule spec must end with a catch-all (empty antecedent) rule");
  }
  const Attribute& target = schema.target_attribute();
  for (const auto& rule : rules) {
    if (!target.level_index(rule.target)) {
      throw ValidationError("planted target '" + rule.target + "' is not a level of '" + target.name + "'");
    }
    for (const auto& term : rule.terms) {
      const Attribute& attr = schema.attribute(schema.index_of(term.attribute));
      if (attr.role == Role::target) throw ValidationError("planted antecedent cannot test the target attribute");
      if (term.levels.empty()) throw ValidationError("planted term on '" + term.attribute + "' has no levels");
      for (const auto& lv : term.levels) {
        if (!attr.level_index(lv)) throw ValidationError("'" + lv + "' is not a level of '" + attr.name + "'");
      }
    }
  }
}

nlohmann::json PlantedRuleSpec::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& rule : rules) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : rule.terms) terms.push_back({{"attribute", t.attribute}, {"levels", t.levels}});
    rs.push_back({{"terms", std::move(terms)}, {"target", rule.target}});
  }
  return {{"rules", std::move(rs)}, {"noise", noise}};
}

PlantedRuleSpec PlantedRuleSpec::from_json(const nlohmann::json& doc) {
  PlantedRuleSpec spec;
  try {
    spec.noise = doc.value("noise", 0.0);
    for (const auto& r : doc.at("rules")) {
      PlantedRule rule;
      rule.target = r.at("target").get<std::string>();
      for (const auto& t : r.value("terms", nlohmann::json::array())) {
        rule.terms.push_back({t.at("attribute").get<std::string>(), t.at("levels").get<std::vector<std::string>>()});
      }
      spec.rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed planted rule spec: ") + e.what());
  }
  return spec;
}

PlantedRuleSpec unit_failure_rules(double noise) {
  PlantedRuleSpec spec;
  spec.rules.push_back({{{"Unit 1", {"F"}}}, "F"});
  spec.rules.push_back({{{"Unit 2", {"F"}}}, "F"});
  spec.rules.push_back({{}, "P"});
  spec.noise = noise;
  return spec;
}

std::vector<StudentRecord> plant_rules(std::vector<StudentRecord> records, const PlantedRuleSpec& spec,
                                       const AttributeSchema& schema, std::uint64_t seed) {
  spec.validate(schema);
  struct CompiledTerm {
    std::size_t attribute;
    std::vector<std::size_t> levels;
  };
  struct CompiledRule {
    std::vector<CompiledTerm> terms;
    std::size_t target;
  };
  std::vector<CompiledRule> compiled;
  for (const auto& rule : spec.rules) {
    CompiledRule c{{}, *schema.target_attribute().level_index(rule.target)};
    for (const auto& t : rule.terms) {
      CompiledTerm ct{schema.index_of(t.attribute), {}};
      for (const auto& lv : t.levels) ct.levels.push_back(*schema.attribute(ct.attribute).level_index(lv));
      c.terms.push_back(std::move(ct));
    }
    compiled.push_back(std::move(c));
  }

  const std::size_t n_classes = schema.target_bits();
  Rng rng(derive_seed(seed, "plant"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& record : records) {
    validate_record(record, schema);
    std::size_t label = compiled.back().target;
    for (const auto& rule : compiled) {
      const bool hit = std::all_of(rule.terms.begin(), rule.terms.end(), [&](const CompiledTerm& t) {
        return std::find(t.levels.begin(), t.levels.end(), record.levels[t.attribute]) != t.levels.end();
      });
      if (hit) {
        label = rule.target;
        break;
      }
    }
    // Both draws are taken for every record so the stream stays aligned.
    const double u = unit(rng);
    std::uniform_int_distribution<std::size_t> other(0, n_classes > 1 ? n_classes - 2 : 0);
    std::size_t replacement = other(rng);
    if (u < spec.noise && n_classes > 1) {
      if (replacement >= label) ++replacement;
      label = replacement;
    }
    record.levels[schema.target()] = label;
  }
  return records;
}

Cohort generate_default_cohort(const CohortOptions& options) {
  if (options.n_male < 1 || options.n_female < 1) {
    throw ValidationError("cohort needs at least one student per gender");
  }
  const AttributeSchema& schema = default_student_schema();
  Cohort cohort;
  cohort.population = default_population_spec(options.n_male, options.n_female, options.seed);
  cohort.samples = sample_population(cohort.population);
  cohort.discretization = default_discretization(cohort.samples, cohort.population.dimensions);
  cohort.dataset = build_records(cohort.samples, cohort.population.dimensions, cohort.discretization, schema,
                                 default_measure_blocks().gender);
  if (options.planted) {
    cohort.dataset.records =
        plant_rules(std::move(cohort.dataset.records), *options.planted, schema, options.seed);
  }

  nlohmann::json n = nlohmann::json::object();
  for (const auto& g : cohort.population.groups) n[g.label] = g.n;
  cohort.metadata = {
      {"seed", options.seed},
      {"generator", kGeneratorId},
      {"spec", "paper-default"},
      {"spec_hash", cohort.population.hash()},
      {"n", std::move(n)},
      {"schema_hash", schema.hash()},
      {"discretization", cohort.discretization.to_json()},
      {"planted", options.planted ? options.planted->to_json() : nlohmann::json(nullptr)},
  };
  return cohort;
}

}  // namespace rulex
