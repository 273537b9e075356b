#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "rulex/errors.hpp"
#include "rulex/schema.hpp"

namespace rulex {
namespace {

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Rows count data records from 1; lines count the file from 1 (header = line 1).
std::string location(std::size_t line, std::size_t column) {
  return "row " + std::to_string(line - 1) + " (line " + std::to_string(line) + "), column " + std::to_string(column);
}

double parse_double(std::string_view text, std::size_t line, std::size_t column) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ValidationError(location(line, column) + ": '" + std::string(text) +
                          "' is not a finite number");
  }
  return value;
}

void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

Dataset parse_dataset_csv(std::string_view text, const AttributeSchema& schema) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ValidationError("dataset CSV is empty (no header row)");

  const auto header = split_line(lines.front());
  if (header.size() < schema.size()) {
    throw ValidationError("header mismatch: expected " + std::to_string(schema.size()) +
                          " attribute columns, found " + std::to_string(header.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i] != schema.attribute(i).name) {
      throw ValidationError("header mismatch at column " + std::to_string(i + 1) + ": expected '" +
                            schema.attribute(i).name + "', found '" + std::string(header[i]) + "'");
    }
  }
  Dataset dataset;
  for (std::size_t i = schema.size(); i < header.size(); ++i) {
    if (!header[i].starts_with(kRawColumnPrefix)) {
      throw ValidationError("header mismatch at column " + std::to_string(i + 1) + ": '" +
                            std::string(header[i]) + "' is neither a schema attribute nor a raw column");
    }
    dataset.raw_columns.emplace_back(header[i].substr(kRawColumnPrefix.size()));
  }

  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::size_t line_no = row + 1;
    const auto fields = split_line(lines[row]);
    if (fields.size() != header.size()) {
      throw ValidationError("ragged row " + std::to_string(line_no - 1) + " (line " + std::to_string(line_no) + "): expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    }
    StudentRecord record;
    record.levels.resize(schema.size());
    for (std::size_t col = 0; col < schema.size(); ++col) {
      const Attribute& attr = schema.attribute(col);
      const auto level = attr.level_index(fields[col]);
      if (!level) {
        throw ValidationError(location(line_no, col + 1) + " (attribute '" + attr.name +
                              "'): unknown level token '" + std::string(fields[col]) + "'");
      }
      record.levels[col] = *level;
    }
    record.raw.reserve(dataset.raw_columns.size());
    for (std::size_t col = schema.size(); col < fields.size(); ++col) {
      record.raw.push_back(parse_double(fields[col], line_no, col + 1));
    }
    dataset.records.push_back(std::move(record));
  }
  return dataset;
}

std::string write_dataset_csv(const Dataset& dataset, const AttributeSchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i > 0) out += ',';
    out += schema.attribute(i).name;
  }
  for (const auto& raw : dataset.raw_columns) {
    out += ',';
    out += kRawColumnPrefix;
    out += raw;
  }
  out += '\n';
  for (const auto& record : dataset.records) {
    validate_record(record, schema);
    if (record.raw.size() != dataset.raw_columns.size()) {
      throw ValidationError("record raw score count does not match the dataset's raw columns");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (i > 0) out += ',';
      out += schema.attribute(i).levels[record.levels[i]];
    }
    for (double v : record.raw) {
      out += ',';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace rulex
