#pragma once

// Synthetic student cohorts drawn from per-group multivariate normals whose
// means, spreads and correlation targets come from published summary tables,
// with an optional planted-rule labeling mode for pipeline validation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rulex/schema.hpp"

namespace rulex {

/// Lower-triangular L with L * L^T == matrix. Throws NumericError naming the
/// first leading minor whose pivot is not positive.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& matrix);

/// Nearest positive definite correlation matrix: eigenvalues clipped at
/// `floor`, then rescaled back to a unit diagonal.
Eigen::MatrixXd repair_correlation(const Eigen::MatrixXd& correlation, double floor = 1e-6);

struct GroupSpec {
  std::string label;  // level token of the grouping attribute, e.g. "Ma"
  std::size_t n = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::MatrixXd correlation;
};

struct PopulationSpec {
  std::vector<std::string> dimensions;
  std::vector<GroupSpec> groups;
  std::uint64_t seed = 0;
  bool repair = true;

  void validate() const;
  nlohmann::json to_json() const;
  std::string hash() const;
};

struct GroupSample {
  std::string label;
  Eigen::MatrixXd scores;                 // n x d
  Eigen::MatrixXd effective_correlation;  // after repair; what was actually planted
};

/// rows = mean + sd .* (L z), z ~ N(0, I); one seeded stream per group.
std::vector<GroupSample> sample_population(const PopulationSpec& spec);

/// Published per-gender means and spreads for the 18 scale dimensions and
/// reasoning; the table's "standard deviation" column is a standard error
/// and is scaled by sqrt(n). Unit scores use percent-scale defaults.
/// Reasoning correlations follow the published learning-skill and motivation
/// coefficients; unlisted pairs are 0 before repair.
PopulationSpec default_population_spec(std::size_t n_male, std::size_t n_female, std::uint64_t seed);

/// Published male/female head counts used to split a requested cohort size.
inline constexpr std::size_t kPublishedMaleCount = 49;
inline constexpr std::size_t kPublishedFemaleCount = 48;

/// Splits `total` in the published 49:48 ratio (male gets the rounding).
std::pair<std::size_t, std::size_t> split_by_published_ratio(std::size_t total);

/// Grade bands 50/65/80 on percent units, the equivalent 10/13/16 on the
/// 20-point reasoning test, and sample tertiles for every scale dimension.
DiscretizationSpec default_discretization(const std::vector<GroupSample>& samples,
                                          const std::vector<std::string>& dimensions);

/// Turns sampled raw scores into schema records: the grouping attribute gets
/// each group's label, every schema attribute with a matching dimension is
/// discretized, raw scores are carried as raw columns.
Dataset build_records(const std::vector<GroupSample>& samples,
                      const std::vector<std::string>& dimensions,
                      const DiscretizationSpec& discretization, const AttributeSchema& schema,
                      std::string_view group_attribute);

struct PlantedTerm {
  std::string attribute;
  std::vector<std::string> levels;
};

struct PlantedRule {
  std::vector<PlantedTerm> terms;  // empty = catch-all
  std::string target;
};

/// Ordered (antecedent, target) pairs; the first matching pair wins and the
/// last pair must be a catch-all.
struct PlantedRuleSpec {
  std::vector<PlantedRule> rules;
  double noise = 0.0;

  void validate(const AttributeSchema& schema) const;
  nlohmann::json to_json() const;
  static PlantedRuleSpec from_json(const nlohmann::json& doc);
};

/// {Unit 1 = F -> F; Unit 2 = F -> F; else -> P}.
PlantedRuleSpec unit_failure_rules(double noise = 0.0);

/// Relabels each record's target with the first matching planted rule, then
/// flips it to a uniformly chosen other level with probability `noise`.
std::vector<StudentRecord> plant_rules(std::vector<StudentRecord> records, const PlantedRuleSpec& spec,
                                       const AttributeSchema& schema, std::uint64_t seed);

struct CohortOptions {
  std::size_t n_male = kPublishedMaleCount;
  std::size_t n_female = kPublishedFemaleCount;
  std::uint64_t seed = 7;
  std::optional<PlantedRuleSpec> planted;
};

struct Cohort {
  Dataset dataset;
  PopulationSpec population;
  std::vector<GroupSample> samples;
  DiscretizationSpec discretization;
  /// {seed, generator, spec_hash, n per group, ...}
  nlohmann::json metadata;
};

/// Default-spec cohort over default_student_schema().
Cohort generate_default_cohort(const CohortOptions& options);

}  // namespace rulex
