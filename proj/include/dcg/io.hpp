#pragma once

// Dataset tables, CSV/JSON emission and the small JSON-schema subset used for configs.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dcg {

/// Column-named table, one row per sweep point.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Dataset() = default;
  explicit Dataset(std::vector<std::string> cols) : columns(std::move(cols)) {}

  void add_row(std::vector<double> row);
  std::vector<double> column(std::string_view name) const;
  std::size_t size() const { return rows.size(); }
};

/// Fixed significant digits, "C" decimal point regardless of locale.
std::string format_number(double v, int significant = 12);
std::string to_csv(const Dataset& data, int significant = 12);

/// Write to `<path>.tmp` then rename over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);
/// FNV-1a of the compact dump (object keys are sorted by nlohmann::json).
std::string config_hash(const nlohmann::json& config);

struct SchemaViolation {
  std::string path;  // JSON pointer
  std::string message;
};

/// Draft-07 subset: type, enum, properties, required, additionalProperties: false,
/// minimum, exclusiveMinimum, maximum, items, minItems. First violation wins.
std::optional<SchemaViolation> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema);

/// Embedded copies of schemas/*.json.
const nlohmann::json& config_schema();
const nlohmann::json& sequence_schema();

/// Throws ConfigError when schema_version is missing, malformed or a newer major.
void check_schema_version(const nlohmann::json& doc, int supported_major);

}  // namespace dcg
