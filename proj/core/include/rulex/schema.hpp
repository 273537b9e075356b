#pragma once

// Student-model attribute schema, discretization of raw scores into level
// tokens, and the one-hot bit layout shared by the network, the GA and the
// rule decoder.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace rulex {

/// A fixed-length bit string, one byte per bit (0 or 1).
using Bits = std::vector<std::uint8_t>;

enum class Role { predictive, target };

struct Attribute {
  std::string name;
  std::vector<std::string> levels;
  Role role = Role::predictive;

  std::optional<std::size_t> level_index(std::string_view token) const;
};

/// Contiguous bit range of one predictive attribute.
struct Segment {
  std::size_t offset = 0;
  std::size_t width = 0;
};

/// Ordered categorical attributes with exactly one target. Immutable once
/// built; the constructor validates every invariant and computes segments.
class AttributeSchema {
 public:
  explicit AttributeSchema(std::vector<Attribute> attributes);

  const std::vector<Attribute>& attributes() const { return attributes_; }
  const Attribute& attribute(std::size_t index) const { return attributes_.at(index); }
  std::size_t size() const { return attributes_.size(); }

  /// Schema positions of the predictive attributes, in schema order.
  const std::vector<std::size_t>& predictive() const { return predictive_; }
  std::size_t target() const { return target_; }
  const Attribute& target_attribute() const { return attributes_[target_]; }

  /// Segment of a predictive attribute (by schema position).
  const Segment& segment(std::size_t attribute) const;

  std::size_t total_predictive_bits() const { return total_bits_; }
  std::size_t target_bits() const { return target_attribute().levels.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Like find() but throws ValidationError naming the missing attribute.
  std::size_t index_of(std::string_view name) const;

  nlohmann::json to_json() const;
  /// Content hash of the canonical JSON form.
  std::string hash() const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<std::size_t> predictive_;
  std::vector<Segment> segments_;  // indexed by schema position; width 0 for target
  std::size_t target_ = 0;
  std::size_t total_bits_ = 0;
};

AttributeSchema schema_from_json(const nlohmann::json& document);
/// Parses a JSON schema document: either an array of {name, levels, role}
/// objects or an object whose "attributes" key holds that array.
AttributeSchema load_schema(std::string_view document);

/// Default student model: gender, 7 learning-skill, 8 achievement-motivation
/// and 3 classroom-interaction scales, 5 course units; target "Reasoning".
const AttributeSchema& default_student_schema();

/// Names of the raw score dimensions behind the default schema, grouped by
/// measure block.
struct MeasureBlocks {
  std::vector<std::string> learning_skills;
  std::vector<std::string> motivation;
  std::vector<std::string> interaction;
  std::vector<std::string> units;
  std::string reasoning;
  std::string gender;
};
const MeasureBlocks& default_measure_blocks();

/// A student as one level index per schema attribute (target included, at
/// its schema position) plus optional raw scores aligned with the owning
/// dataset's raw column list.
struct StudentRecord {
  std::vector<std::size_t> levels;
  std::vector<double> raw;

  bool operator==(const StudentRecord&) const = default;
};

struct Dataset {
  std::vector<StudentRecord> records;
  std::vector<std::string> raw_columns;

  std::optional<std::size_t> raw_column(std::string_view name) const;
};

/// Throws ValidationError unless every level index is in range.
void validate_record(const StudentRecord& record, const AttributeSchema& schema);

struct EncodedVector {
  Bits bits;
  std::size_t target_index = 0;
};

/// One-hot per predictive segment; target_index is the target level.
EncodedVector encode_record(const StudentRecord& record, const AttributeSchema& schema);
std::vector<EncodedVector> encode_records(std::span<const StudentRecord> records,
                                          const AttributeSchema& schema);
/// Inverse of encode_record; throws unless each segment is exactly one-hot.
StudentRecord decode_vector(const EncodedVector& encoded, const AttributeSchema& schema);

/// Ascending cut points mapping a real score to one of cuts.size()+1 tokens.
/// Bands are left-closed: cut[i-1] <= s < cut[i] maps to token i.
struct Banding {
  std::vector<double> cuts;
  std::vector<std::string> tokens;

  Banding() = default;
  Banding(std::vector<double> cuts, std::vector<std::string> tokens);
  std::size_t band(double score) const;
  const std::string& token(double score) const { return tokens[band(score)]; }
};

using RawScores = std::map<std::string, double, std::less<>>;

class DiscretizationSpec {
 public:
  void set(std::string dimension, Banding banding);
  const Banding& at(std::string_view dimension) const;
  bool contains(std::string_view dimension) const;
  const std::map<std::string, Banding, std::less<>>& entries() const { return entries_; }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, Banding, std::less<>> entries_;
};

/// Maps each raw score to its level token. Errors on a missing spec entry or
/// a NaN score.
std::map<std::string, std::string, std::less<>> discretize_record(const RawScores& raw,
                                                                  const DiscretizationSpec& spec);

/// Empirical quantile cut points splitting `values` into `bands` equal-mass
/// bands (linear interpolation between order statistics).
std::vector<double> quantile_cuts(std::span<const double> values, std::size_t bands);

/// Parses a dataset CSV. The header holds the schema's attribute names in
/// schema order, optionally followed by "raw:<dimension>" columns.
Dataset parse_dataset_csv(std::string_view text, const AttributeSchema& schema);
std::string write_dataset_csv(const Dataset& dataset, const AttributeSchema& schema);

inline constexpr std::string_view kRawColumnPrefix = "raw:";

}  // namespace rulex
