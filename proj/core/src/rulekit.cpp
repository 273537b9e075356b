#include "rulex/rulekit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "rulex/errors.hpp"

namespace rulex {

Rule decode_chromosome(std::span<const std::uint8_t> chromosome, const AttributeSchema& schema,
                       std::size_t class_index) {
  if (chromosome.size() != schema.total_predictive_bits()) {
    throw ValidationError("chromosome length " + std::to_string(chromosome.size()) + " does not match schema width " +
                          std::to_string(schema.total_predictive_bits()));
  }
  if (class_index >= schema.target_bits()) throw ValidationError("class index out of range");
  Rule rule;
  rule.consequent = class_index;
  rule.source.assign(chromosome.begin(), chromosome.end());
  for (std::size_t a : schema.predictive()) {
    const Segment& seg = schema.segment(a);
    Term term{a, {}};
    for (std::size_t k = 0; k < seg.width; ++k) {
      if (chromosome[seg.offset + k]) term.levels.push_back(k);
    }
    if (term.levels.empty() || term.levels.size() == seg.width) continue;
    rule.terms.push_back(std::move(term));
  }
  return rule;
}

bool rule_matches(const Rule& rule, const StudentRecord& record) {
  for (const Term& t : rule.terms) {
    if (!std::binary_search(t.levels.begin(), t.levels.end(), record.levels[t.attribute])) return false;
  }
  return true;
}

RuleMetrics evaluate_rule(const Rule& rule, std::span<const StudentRecord> records, const AttributeSchema& schema) {
  RuleMetrics m;
  for (const auto& r : records) {
    if (!rule_matches(rule, r)) continue;
    ++m.support;
    m.hits += r.levels[schema.target()] == rule.consequent;
  }
  m.vacuous = m.support == 0;
  m.confidence = m.vacuous ? 0.0 : static_cast<double>(m.hits) / static_cast<double>(m.support);
  m.coverage = records.empty() ? 0.0 : static_cast<double>(m.support) / static_cast<double>(records.size());
  return m;
}

Rule refine_rule(Rule rule, std::span<const StudentRecord> records, const AttributeSchema& schema, double epsilon) {
  rule.metrics = evaluate_rule(rule, records, schema);
  while (!rule.terms.empty()) {
    std::size_t best_drop = rule.terms.size();
    RuleMetrics best_metrics;
    for (std::size_t i = 0; i < rule.terms.size(); ++i) {
      Rule candidate = rule;
      candidate.terms.erase(candidate.terms.begin() + static_cast<std::ptrdiff_t>(i));
      const RuleMetrics m = evaluate_rule(candidate, records, schema);
      // Terms are in schema order, so strict > keeps the earliest attribute on ties.
      if (best_drop == rule.terms.size() || m.confidence > best_metrics.confidence) {
        best_drop = i;
        best_metrics = m;
      }
    }
    if (best_metrics.confidence < rule.metrics.confidence - epsilon) break;
    rule.terms.erase(rule.terms.begin() + static_cast<std::ptrdiff_t>(best_drop));
    rule.metrics = best_metrics;
  }
  return rule;
}

CoverageIndex::CoverageIndex(std::span<const StudentRecord> records, std::span<const std::size_t> subset,
                             const AttributeSchema& schema)
    : words_((schema.total_predictive_bits() + 63) / 64), schema_(&schema) {
  masks_.assign(subset.size() * words_, 0);
  for (std::size_t r = 0; r < subset.size(); ++r) {
    const StudentRecord& rec = records[subset[r]];
    for (std::size_t a : schema.predictive()) {
      const std::size_t bit = schema.segment(a).offset + rec.levels[a];
      masks_[r * words_ + bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
  }
}

std::size_t CoverageIndex::min_mismatch(std::span<const std::uint8_t> chromosome) const {
  // Don't-care segments accept every level; elsewhere the record's level bit
  // must be set, i.e. record & ~allowed == 0.
  std::vector<std::uint64_t> allowed(words_, 0);
  for (std::size_t a : schema_->predictive()) {
    const Segment& seg = schema_->segment(a);
    std::size_t ones = 0;
    for (std::size_t k = 0; k < seg.width; ++k) ones += chromosome[seg.offset + k] != 0;
    const bool dont_care = ones == 0 || ones == seg.width;
    for (std::size_t k = 0; k < seg.width; ++k) {
      if (dont_care || chromosome[seg.offset + k]) {
        const std::size_t bit = seg.offset + k;
        allowed[bit / 64] |= std::uint64_t{1} << (bit % 64);
      }
    }
  }
  // One bit per segment in each record mask, so the popcount counts the
  // excluding terms.
  const std::size_t n = words_ == 0 ? 0 : masks_.size() / words_;
  std::size_t best = schema_->predictive().size() + 1;
  for (std::size_t r = 0; r < n && best > 0; ++r) {
    std::size_t miss = 0;
    for (std::size_t w = 0; w < words_; ++w) miss += static_cast<std::size_t>(std::popcount(masks_[r * words_ + w] & ~allowed[w]));
    best = std::min(best, miss);
  }
  return best;
}

void prune_redundant_rules(RuleSet& set, std::span<const StudentRecord> records, const AttributeSchema& schema) {
  double accuracy = set.accuracy(records, schema);
  for (std::size_t i = set.rules.size(); i-- > 0;) {
    RuleSet trial = set;
    trial.rules.erase(trial.rules.begin() + static_cast<std::ptrdiff_t>(i));
    const double without = trial.accuracy(records, schema);
    if (without >= accuracy) {
      set.rules = std::move(trial.rules);
      accuracy = without;
    }
  }
}

bool rule_implies(const Rule& specific, const Rule& general) {
  for (const Term& g : general.terms) {
    auto it = std::find_if(specific.terms.begin(), specific.terms.end(),
                           [&](const Term& s) { return s.attribute == g.attribute; });
    if (it == specific.terms.end()) return false;
    if (!std::includes(g.levels.begin(), g.levels.end(), it->levels.begin(), it->levels.end())) return false;
  }
  return true;
}

void ExtractionConfig::validate() const {
  ga.validate();
  if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) throw ValidationError("confidence threshold must lie in [0,1]");
  if (!(epsilon >= 0.0)) throw ValidationError("refinement epsilon must be >= 0");
  if (per_class_budget < 1) throw ValidationError("per-class rule budget must be >= 1");
}

nlohmann::json ExtractionConfig::to_json() const {
  return {{"ga", ga.to_json()},
          {"min_confidence", min_confidence},
          {"epsilon", epsilon},
          {"per_class_budget", per_class_budget},
          {"prune", prune},
          {"seed", seed}};
}

std::size_t RuleSet::classify(const StudentRecord& record) const {
  for (const Rule& r : rules) {
    if (rule_matches(r, record)) return r.consequent;
  }
  return default_class;
}

double RuleSet::accuracy(std::span<const StudentRecord> records, const AttributeSchema& schema) const {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : records) hits += classify(r) == r.levels[schema.target()];
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

RuleSet extract_ruleset(const Network& net, std::span<const StudentRecord> records, const AttributeSchema& schema,
                        const ExtractionConfig& config) {
  config.validate();
  net.validate();
  if (records.empty()) throw ValidationError("cannot extract rules from an empty dataset");
  if (net.input_size != schema.total_predictive_bits() || net.output_size != schema.target_bits()) {
    throw ValidationError("network sizes do not match the dataset schema");
  }
  for (const auto& r : records) validate_record(r, schema);

  const std::size_t n_classes = schema.target_bits();
  std::vector<std::size_t> class_counts(n_classes, 0);
  for (const auto& r : records) ++class_counts[r.levels[schema.target()]];

  RuleSet set;
  set.default_class = static_cast<std::size_t>(std::max_element(class_counts.begin(), class_counts.end()) -
                                               class_counts.begin());

  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<std::size_t> working;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].levels[schema.target()] == c) working.push_back(i);
    }
    std::vector<Rule> accepted;
    const std::uint64_t class_seed = derive_seed(config.seed, "extract", c);

    for (std::size_t round = 0; round < config.per_class_budget && !working.empty(); ++round) {
      // A rule matching no uncovered record of the class loses one point per
      // term excluding its nearest uncovered record, so any covering rule
      // outranks it. Rules implied by accepted ones are penalized the same way.
      const CoverageIndex uncovered(records, working, schema);
      auto fitness = [&](std::span<const std::uint8_t> bits) {
        return class_score(net, bits, c) - static_cast<double>(uncovered.min_mismatch(bits));
      };
      GaConfig ga = config.ga;
      ga.seed = derive_seed(class_seed, "round", round);
      const EvolutionResult evo = evolve(fitness, schema.total_predictive_bits(), ga);

      Rule decoded = decode_chromosome(evo.best, schema, c);
      decoded.fitness = class_score(net, evo.best, c);
      decoded.metrics = evaluate_rule(decoded, records, schema);
      const std::string decoded_text = format_rule(decoded, schema);
      Rule refined = refine_rule(decoded, records, schema, config.epsilon);

      std::vector<std::size_t> remaining;
      std::size_t newly_covered = 0;
      for (std::size_t i : working) {
        if (rule_matches(refined, records[i])) {
          ++newly_covered;
        } else {
          remaining.push_back(i);
        }
      }

      std::string status = "accepted";
      if (refined.metrics.confidence < config.min_confidence) {
        status = "rejected: confidence below threshold";
      } else if (newly_covered == 0) {
        status = "rejected: covers no uncovered records";
      }
      set.audit.push_back({{"class", schema.target_attribute().levels[c]},
                           {"round", round},
                           {"ga_seed", ga.seed},
                           {"ga", evolution_to_json(evo)},
                           {"decoded", decoded_text},
                           {"refined", format_rule(refined, schema)},
                           {"confidence", refined.metrics.confidence},
                           {"newly_covered", newly_covered},
                           {"status", status}});
      if (status != "accepted") break;
      working = std::move(remaining);
      accepted.push_back(std::move(refined));
    }
    for (auto& r : accepted) set.rules.push_back(std::move(r));
  }

  // An empty antecedent for the default class adds nothing over the default.
  std::erase_if(set.rules, [&](const Rule& r) { return r.terms.empty() && r.consequent == set.default_class; });
  std::stable_sort(set.rules.begin(), set.rules.end(), [](const Rule& a, const Rule& b) {
    if (a.consequent != b.consequent) return a.consequent < b.consequent;
    return a.metrics.confidence > b.metrics.confidence;
  });
  if (config.prune) prune_redundant_rules(set, records, schema);
  return set;
}

std::string format_rule(const Rule& rule, const AttributeSchema& schema) {
  std::string out = "If ";
  if (rule.terms.empty()) out += "true";
  for (std::size_t t = 0; t < rule.terms.size(); ++t) {
    const Term& term = rule.terms[t];
    const Attribute& attr = schema.attribute(term.attribute);
    if (t > 0) out += " and ";
    for (std::size_t l = 0; l < term.levels.size(); ++l) {
      if (l > 0) out += " or ";
      out += attr.name + " = " + attr.levels[term.levels[l]];
    }
  }
  const Attribute& target = schema.target_attribute();
  out += " → Then " + target.name + " = " + target.levels[rule.consequent];
  return out;
}

nlohmann::json rule_to_json(const Rule& rule, const AttributeSchema& schema) {
  nlohmann::json terms = nlohmann::json::array();
  for (const Term& t : rule.terms) {
    const Attribute& attr = schema.attribute(t.attribute);
    std::vector<std::string> levels;
    for (std::size_t l : t.levels) levels.push_back(attr.levels[l]);
    terms.push_back({{"attribute", attr.name}, {"levels", levels}});
  }
  return {{"terms", std::move(terms)},
          {"consequent", schema.target_attribute().levels[rule.consequent]},
          {"support", rule.metrics.support},
          {"hits", rule.metrics.hits},
          {"confidence", rule.metrics.confidence},
          {"coverage", rule.metrics.coverage},
          {"vacuous", rule.metrics.vacuous},
          {"fitness", rule.fitness},
          {"source", bits_to_string(rule.source)},
          {"text", format_rule(rule, schema)}};
}

nlohmann::json ruleset_to_json(const RuleSet& set, const AttributeSchema& schema) {
  nlohmann::json rules = nlohmann::json::array();
  for (const Rule& r : set.rules) rules.push_back(rule_to_json(r, schema));
  return {{"rules", std::move(rules)},
          {"default", schema.target_attribute().levels[set.default_class]},
          {"audit", set.audit}};
}

RuleSet ruleset_from_json(const nlohmann::json& doc, const AttributeSchema& schema) {
  RuleSet set;
  const Attribute& target = schema.target_attribute();
  auto level_of = [](const Attribute& attr, const std::string& token) {
    const auto idx = attr.level_index(token);
    if (!idx) throw ValidationError("'" + token + "' is not a level of '" + attr.name + "'");
    return *idx;
  };
  try {
    set.default_class = level_of(target, doc.at("default").get<std::string>());
    for (const auto& jr : doc.at("rules")) {
      Rule rule;
      rule.consequent = level_of(target, jr.at("consequent").get<std::string>());
      for (const auto& jt : jr.at("terms")) {
        Term t{schema.index_of(jt.at("attribute").get<std::string>()), {}};
        for (const auto& lv : jt.at("levels")) t.levels.push_back(level_of(schema.attribute(t.attribute), lv));
        std::sort(t.levels.begin(), t.levels.end());
        rule.terms.push_back(std::move(t));
      }
      std::sort(rule.terms.begin(), rule.terms.end(),
                [](const Term& a, const Term& b) { return a.attribute < b.attribute; });
      rule.metrics.support = jr.value("support", std::size_t{0});
      rule.metrics.hits = jr.value("hits", std::size_t{0});
      rule.metrics.confidence = jr.value("confidence", 0.0);
      rule.metrics.coverage = jr.value("coverage", 0.0);
      rule.metrics.vacuous = jr.value("vacuous", rule.metrics.support == 0);
      rule.fitness = jr.value("fitness", 0.0);
      for (char ch : jr.value("source", std::string())) rule.source.push_back(ch == '1' ? 1 : 0);
      set.rules.push_back(std::move(rule));
    }
    set.audit = doc.value("audit", nlohmann::json::array());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ruleset document: ") + e.what());
  }
  return set;
}

}  // namespace rulex
