#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace floorlab {

/// Names accepted by the `experiment` key, in registry order.
const std::vector<std::string>& experiment_registry();

/// One-line description of a registry entry.
std::string_view experiment_description(std::string_view name);

using UIntList = std::vector<std::uint64_t>;
using TextList = std::vector<std::string>;
using ConfigValue = std::variant<std::uint64_t, double, bool, std::string, UIntList, TextList>;

/// Parsed and validated experiment configuration.
///
/// Text format: one `key = value` per line; `#` starts a comment; lists
/// are comma-separated. Every experiment declares its keys, required keys
/// and defaults (see README "Configuration"); unknown keys, keys that do
/// not apply to the experiment, malformed values and missing required
/// keys raise ConfigError with the offending line.
struct ExperimentConfig {
  std::string experiment;
  std::map<std::string, ConfigValue> values;

  [[nodiscard]] bool has(const std::string& key) const { return values.contains(key); }
  [[nodiscard]] std::uint64_t uint(const std::string& key) const;
  [[nodiscard]] double real(const std::string& key) const;
  [[nodiscard]] bool flag(const std::string& key) const;
  [[nodiscard]] const std::string& text(const std::string& key) const;
  [[nodiscard]] const UIntList& uint_list(const std::string& key) const;
  [[nodiscard]] const TextList& text_list(const std::string& key) const;

  /// Sets a key after validating it against the experiment's schema.
  void set(const std::string& key, const std::string& raw);

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace floorlab
