#pragma once

// IF-THEN rules decoded from chromosomes: OR over the levels of one
// attribute, AND across attributes. Includes evaluation against data,
// backward-elimination refinement and per-class sequential covering driven
// by the GA over a trained network's class outputs.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rulex/evolver.hpp"
#include "rulex/neural.hpp"
#include "rulex/schema.hpp"

namespace rulex {

struct Term {
  std::size_t attribute = 0;         // schema position
  std::vector<std::size_t> levels;   // ascending, non-empty, proper subset

  bool operator==(const Term&) const = default;
};

struct RuleMetrics {
  std::size_t support = 0;  // records matching the antecedent
  std::size_t hits = 0;     // ... whose target equals the consequent
  double confidence = 0.0;  // hits / support, 0 when vacuous
  double coverage = 0.0;    // support / dataset size
  bool vacuous = true;      // support == 0
};

struct Rule {
  std::vector<Term> terms;  // schema order, at most one per attribute
  std::size_t consequent = 0;
  RuleMetrics metrics;
  double fitness = 0.0;  // class score of the source chromosome
  Bits source;
};

/// Total: every bit string of the schema's width yields a rule. All-zero and
/// all-one segments are don't-care and produce no term.
Rule decode_chromosome(std::span<const std::uint8_t> chromosome, const AttributeSchema& schema,
                       std::size_t class_index);

bool rule_matches(const Rule& rule, const StudentRecord& record);
RuleMetrics evaluate_rule(const Rule& rule, std::span<const StudentRecord> records, const AttributeSchema& schema);

/// Greedy backward elimination: repeatedly drops the term whose removal
/// gives the highest confidence (earliest attribute on ties) as long as the
/// confidence falls by at most epsilon. Returned metrics are recomputed.
Rule refine_rule(Rule rule, std::span<const StudentRecord> records, const AttributeSchema& schema,
                 double epsilon = 0.0);

/// True when every record matched by `specific` is matched by `general`
/// for any data (term-wise level-set inclusion).
bool rule_implies(const Rule& specific, const Rule& general);

/// Bit-mask view of a subset of records for fast "how close does this
/// chromosome's rule come to matching one of them" queries.
class CoverageIndex {
 public:
  CoverageIndex(std::span<const StudentRecord> records, std::span<const std::size_t> subset,
                const AttributeSchema& schema);
  /// Fewest terms of the decoded rule that exclude a record of the subset;
  /// 0 when some record matches, predictive size + 1 for an empty subset.
  std::size_t min_mismatch(std::span<const std::uint8_t> chromosome) const;
  bool any_match(std::span<const std::uint8_t> chromosome) const { return min_mismatch(chromosome) == 0; }

 private:
  std::size_t words_ = 0;
  std::vector<std::uint64_t> masks_;  // subset.size() x words_
  const AttributeSchema* schema_;
};

struct ExtractionConfig {
  GaConfig ga;
  double min_confidence = 0.7;
  double epsilon = 0.0;
  std::size_t per_class_budget = 10;
  bool prune = true;  // drop rules whose removal keeps training accuracy
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct RuleSet {
  std::vector<Rule> rules;      // first-match order
  std::size_t default_class = 0;
  nlohmann::json audit = nlohmann::json::array();

  std::size_t classify(const StudentRecord& record) const;
  double accuracy(std::span<const StudentRecord> records, const AttributeSchema& schema) const;
};

/// Per class: evolve a chromosome maximizing the class output (chromosomes
/// matching no uncovered record of the class lose one point per excluding
/// term), decode, refine,
/// accept if confidence >= min_confidence and it covers uncovered records of
/// the class, then remove those records; stop at the budget, when the class
/// is exhausted, or at the first rejected rule. Rules are ordered by
/// (class, descending confidence), then pruned if config.prune; the default
/// is the majority class.
RuleSet extract_ruleset(const Network& net, std::span<const StudentRecord> records, const AttributeSchema& schema,
                        const ExtractionConfig& config);

/// From the last rule to the first, removes every rule whose removal does
/// not lower the set's training accuracy.
void prune_redundant_rules(RuleSet& set, std::span<const StudentRecord> records, const AttributeSchema& schema);

/// "If Unit 1 = F or Unit 1 = P and Gender = Fe → Then Reasoning = F";
/// an empty antecedent renders as "If true".
std::string format_rule(const Rule& rule, const AttributeSchema& schema);

nlohmann::json rule_to_json(const Rule& rule, const AttributeSchema& schema);
nlohmann::json ruleset_to_json(const RuleSet& set, const AttributeSchema& schema);
RuleSet ruleset_from_json(const nlohmann::json& doc, const AttributeSchema& schema);

}  // namespace rulex
