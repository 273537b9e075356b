#include "rulex/schema.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "rulex/errors.hpp"
#include "rulex/hashing.hpp"

namespace rulex {

std::optional<std::size_t> Attribute::level_index(std::string_view token) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == token) return i;
  }
  return std::nullopt;
}

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw ValidationError("schema declares no attributes");

  std::set<std::string, std::less<>> names;
  std::optional<std::size_t> target;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    const Attribute& a = attributes_[i];
    if (a.name.empty()) throw ValidationError("attribute " + std::to_string(i) + " has an empty name");
    if (!names.insert(a.name).second) throw ValidationError("duplicate attribute name '" + a.name + "'");
    if (a.levels.empty()) throw ValidationError("attribute '" + a.name + "' has zero levels");
    std::set<std::string, std::less<>> tokens;
    for (const auto& level : a.levels) {
      if (level.empty()) throw ValidationError("attribute '" + a.name + "' has an empty level token");
      if (!tokens.insert(level).second) {
        throw ValidationError("attribute '" + a.name + "' repeats level '" + level + "'");
      }
    }
    if (a.role == Role::target) {
      if (target) {
        throw ValidationError("more than one target attribute ('" + attributes_[*target].name +
                              "' and '" + a.name + "')");
      }
      target = i;
    }
  }
  if (!target) throw ValidationError("schema has no target attribute");
  target_ = *target;

  segments_.resize(attributes_.size());
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (i == target_) continue;
    predictive_.push_back(i);
    segments_[i] = Segment{total_bits_, attributes_[i].levels.size()};
    total_bits_ += attributes_[i].levels.size();
  }
}

const Segment& AttributeSchema::segment(std::size_t attribute) const {
  if (attribute >= attributes_.size() || attribute == target_) {
    throw ValidationError("no bit segment for attribute position " + std::to_string(attribute));
  }
  return segments_[attribute];
}

std::optional<std::size_t> AttributeSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t AttributeSchema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("schema has no attribute named '" + std::string(name) + "'");
}

nlohmann::json AttributeSchema::to_json() const {
  nlohmann::json attrs = nlohmann::json::array();
  for (const auto& a : attributes_) {
    attrs.push_back({{"name", a.name},
                     {"levels", a.levels},
                     {"role", a.role == Role::target ? "target" : "predictive"}});
  }
  return {{"attributes", std::move(attrs)}};
}

std::string AttributeSchema::hash() const { return content_hash(to_json().dump()); }

AttributeSchema schema_from_json(const nlohmann::json& document) {
  const nlohmann::json* list = &document;
  if (document.is_object()) {
    if (!document.contains("attributes")) throw ValidationError("schema document lacks an \"attributes\" array");
    list = &document.at("attributes");
  }
  if (!list->is_array()) throw ValidationError("schema attributes must be a JSON array");

  std::vector<Attribute> attributes;
  for (const auto& item : *list) {
    if (!item.is_object() || !item.contains("name") || !item.contains("levels")) {
      throw ValidationError("each schema attribute needs \"name\" and \"levels\"");
    }
    Attribute a;
    try {
      a.name = item.at("name").get<std::string>();
      a.levels = item.at("levels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed schema attribute: ") + e.what());
    }
    const std::string role = item.value("role", std::string("predictive"));
    if (role == "target") {
      a.role = Role::target;
    } else if (role == "predictive") {
      a.role = Role::predictive;
    } else {
      throw ValidationError("attribute '" + a.name + "' has unknown role '" + role + "'");
    }
    attributes.push_back(std::move(a));
  }
  return AttributeSchema(std::move(attributes));
}

AttributeSchema load_schema(std::string_view document) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("schema document is not valid JSON: ") + e.what());
  }
  return schema_from_json(parsed);
}

const MeasureBlocks& default_measure_blocks() {
  static const MeasureBlocks blocks{
      {"Management of dispersants", "Management of study time", "Summing and taking notes",
       "Preparing for examinations", "Organization of information", "Continuation of study",
       "Use of computer & Internet"},
      {"Challenge", "Desire to work", "Ambition", "Self-reliance", "Fear of failure",
       "Social motivations", "Awareness of time importance", "Competition"},
      {"Potential of the classroom", "Student's positivity", "Teacher's positivity"},
      {"Unit 1", "Unit 2", "Unit 3", "Unit 4", "Unit 5"},
      "Reasoning",
      "Gender",
  };
  return blocks;
}

const AttributeSchema& default_student_schema() {
  static const AttributeSchema schema = [] {
    const auto& b = default_measure_blocks();
    const std::vector<std::string> scale = {"L", "M", "H"};
    const std::vector<std::string> grade = {"F", "P", "G", "V.G"};
    std::vector<Attribute> attrs;
    attrs.push_back({b.gender, {"Ma", "Fe"}, Role::predictive});
    for (const auto* block : {&b.learning_skills, &b.motivation, &b.interaction}) {
      for (const auto& name : *block) attrs.push_back({name, scale, Role::predictive});
    }
    for (const auto& name : b.units) attrs.push_back({name, grade, Role::predictive});
    attrs.push_back({b.reasoning, grade, Role::target});
    return AttributeSchema(std::move(attrs));
  }();
  return schema;
}

std::optional<std::size_t> Dataset::raw_column(std::string_view name) const {
  for (std::size_t i = 0; i < raw_columns.size(); ++i) {
    if (raw_columns[i] == name) return i;
  }
  return std::nullopt;
}

void validate_record(const StudentRecord& record, const AttributeSchema& schema) {
  if (record.levels.size() != schema.size()) {
    throw ValidationError("record has " + std::to_string(record.levels.size()) +
                          " levels, schema has " + std::to_string(schema.size()) + " attributes");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (record.levels[i] >= schema.attribute(i).levels.size()) {
      throw ValidationError("record level index out of range for attribute '" +
                            schema.attribute(i).name + "'");
    }
  }
}

EncodedVector encode_record(const StudentRecord& record, const AttributeSchema& schema) {
  validate_record(record, schema);
  EncodedVector out;
  out.bits.assign(schema.total_predictive_bits(), 0);
  for (std::size_t a : schema.predictive()) {
    out.bits[schema.segment(a).offset + record.levels[a]] = 1;
  }
  out.target_index = record.levels[schema.target()];
  return out;
}

std::vector<EncodedVector> encode_records(std::span<const StudentRecord> records,
                                          const AttributeSchema& schema) {
  std::vector<EncodedVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_record(r, schema));
  return out;
}

StudentRecord decode_vector(const EncodedVector& encoded, const AttributeSchema& schema) {
  if (encoded.bits.size() != schema.total_predictive_bits()) {
    throw ValidationError("encoded vector length " + std::to_string(encoded.bits.size()) +
                          " does not match schema width " +
                          std::to_string(schema.total_predictive_bits()));
  }
  if (encoded.target_index >= schema.target_bits()) throw ValidationError("target index out of range");
  StudentRecord record;
  record.levels.assign(schema.size(), 0);
  for (std::size_t a : schema.predictive()) {
    const Segment& seg = schema.segment(a);
    std::optional<std::size_t> hot;
    for (std::size_t k = 0; k < seg.width; ++k) {
      if (encoded.bits[seg.offset + k] == 0) continue;
      if (hot) throw ValidationError("segment of '" + schema.attribute(a).name + "' is not one-hot");
      hot = k;
    }
    if (!hot) throw ValidationError("segment of '" + schema.attribute(a).name + "' is empty");
    record.levels[a] = *hot;
  }
  record.levels[schema.target()] = encoded.target_index;
  return record;
}

Banding::Banding(std::vector<double> c, std::vector<std::string> t)
    : cuts(std::move(c)), tokens(std::move(t)) {
  if (tokens.size() != cuts.size() + 1) {
    throw ValidationError("banding needs exactly one more token than cut points");
  }
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (!std::isfinite(cuts[i])) throw ValidationError("banding cut points must be finite");
    if (i > 0 && !(cuts[i] > cuts[i - 1])) throw ValidationError("banding cut points must be strictly increasing");
  }
}

std::size_t Banding::band(double score) const {
  if (std::isnan(score)) throw ValidationError("cannot discretize a NaN score");
  // Number of cuts <= score: left-closed bands.
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), score) - cuts.begin());
}

void DiscretizationSpec::set(std::string dimension, Banding banding) {
  entries_.insert_or_assign(std::move(dimension), std::move(banding));
}

const Banding& DiscretizationSpec::at(std::string_view dimension) const {
  auto it = entries_.find(dimension);
  if (it == entries_.end()) {
    throw ValidationError("no discretization entry for dimension '" + std::string(dimension) + "'");
  }
  return it->second;
}

bool DiscretizationSpec::contains(std::string_view dimension) const {
  return entries_.find(dimension) != entries_.end();
}

nlohmann::json DiscretizationSpec::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, b] : entries_) out[name] = {{"cuts", b.cuts}, {"tokens", b.tokens}};
  return out;
}

std::map<std::string, std::string, std::less<>> discretize_record(const RawScores& raw,
                                                                  const DiscretizationSpec& spec) {
  std::map<std::string, std::string, std::less<>> out;
  for (const auto& [dim, score] : raw) {
    if (std::isnan(score)) throw ValidationError("NaN score for dimension '" + dim + "'");
    out.emplace(dim, spec.at(dim).token(score));
  }
  return out;
}

std::vector<double> quantile_cuts(std::span<const double> values, std::size_t bands) {
  if (bands < 2) throw ValidationError("quantile_cuts needs at least two bands");
  if (values.empty()) throw ValidationError("quantile_cuts needs a non-empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (std::size_t q = 1; q < bands; ++q) {
    const double pos = static_cast<double>(q) / static_cast<double>(bands) *
                       static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    double cut = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    // Ties in tiny samples can collapse quantiles; keep cuts strictly increasing.
    if (!cuts.empty() && !(cut > cuts.back())) cut = std::nextafter(cuts.back(), HUGE_VAL);
    cuts.push_back(cut);
  }
  return cuts;
}

}  // namespace rulex
