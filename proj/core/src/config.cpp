#include "floorlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <sstream>

#include "floorlab/errors.hpp"

namespace floorlab {

namespace {

enum class ValueType { kUInt, kReal, kBool, kText, kUIntList, kTextList };

struct KeyRule {
  std::string_view key;
  ValueType type;
  bool required;
  /// Raw default text; nullopt means the key is optional with no default.
  std::optional<std::string_view> fallback;
};

struct ExperimentSchema {
  std::string_view name;
  std::string_view description;
  std::vector<KeyRule> keys;
};

std::vector<KeyRule> common_keys() {
  return {
      {"master_seed", ValueType::kUInt, false, "1"},
      {"output_dir", ValueType::kText, false, "floorlab-out"},
  };
}

std::vector<KeyRule> spin_keys() {
  return {
      {"n", ValueType::kUInt, true, std::nullopt},
      {"trials", ValueType::kUInt, false, "200"},
      {"step_size", ValueType::kReal, false, "0.01"},
      {"grad_tol", ValueType::kReal, false, "1e-05"},
      {"max_steps", ValueType::kUInt, false, "1000000"},
      {"fresh_couplings", ValueType::kBool, false, "true"},
      {"bin_width", ValueType::kReal, false, "0.01"},
      {"memory_budget_mb", ValueType::kUInt, false, "2048"},
  };
}

std::vector<KeyRule> mnist_keys() {
  return {
      {"data_dir", ValueType::kText, true, std::nullopt},
      {"desk_scale", ValueType::kBool, false, "false"},
      {"train_subsample", ValueType::kUInt, false, "6000"},
      {"test_subsample", ValueType::kUInt, false, "1000"},
      {"seeds", ValueType::kUIntList, false, "1, 2, 3, 4, 5"},
      {"batch_size", ValueType::kUInt, false, "64"},
  };
}

std::vector<ExperimentSchema> build_registry() {
  auto merge = [](std::vector<KeyRule> a, const std::vector<KeyRule>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<ExperimentSchema> reg;

  auto floor_keys = merge(merge(common_keys(), spin_keys()),
                          {{"dims", ValueType::kUIntList, false, std::nullopt}});
  reg.push_back({"floor-spin",
                 "GD ensembles on the coupled 3-spin sphere; terminal-energy band per n",
                 floor_keys});
  reg.push_back({"floor-tripartite",
                 "GD ensembles on the tri-partite field over a product of three spheres",
                 floor_keys});
  reg.push_back({"sgd-spin",
                 "minibatch-1 SGD on P-decomposed fields at a shared step*steps budget, then GD",
                 merge(merge(common_keys(), spin_keys()),
                       {{"P", ValueType::kUIntList, true, std::nullopt},
                        {"budget", ValueType::kReal, false, "100"},
                        {"pass_order", ValueType::kText, false, "cyclic"},
                        {"refine_max_steps", ValueType::kUInt, false, "1000000"}})});
  reg.push_back({"teacher-student",
                 "teacher on one half of the training set, SGD students on its soft labels",
                 merge(merge(common_keys(), mnist_keys()),
                       {{"teacher_architecture", ValueType::kText, false, "784-500-300-10"},
                        {"architectures", ValueType::kTextList, false,
                         "784-50-50-10, 784-250-150-10, 784-500-300-10, 784-1200-1200-10"},
                        {"step_size", ValueType::kReal, false, "0.1"},
                        {"epochs", ValueType::kUInt, false, "20"}})});
  reg.push_back({"gd-vs-sgd-mnist",
                 "full-batch GD against minibatch SGD at a matched step*steps budget",
                 merge(merge(common_keys(), mnist_keys()),
                       {{"architecture", ValueType::kText, false, "784-50-50-10"},
                        {"gd_step_size", ValueType::kReal, false, "0.5"},
                        {"sgd_step_size", ValueType::kReal, false, "0.1"},
                        {"budget", ValueType::kReal, false, "100"},
                        {"trace_points", ValueType::kUInt, false, "20"}})});
  return reg;
}

const std::vector<ExperimentSchema>& registry() {
  static const std::vector<ExperimentSchema> reg = build_registry();
  return reg;
}

const ExperimentSchema* find_schema(std::string_view name) {
  for (const auto& s : registry()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

const KeyRule* find_rule(const ExperimentSchema& schema, std::string_view key) {
  for (const auto& r : schema.keys) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

ConfigValue convert(const KeyRule& rule, const std::string& raw, int line) {
  auto fail = [&](const std::string& expected) -> ConfigError {
    return ConfigError(
        "key '" + std::string(rule.key) + "': expected " + expected + ", got '" + raw + "'", line);
  };
  switch (rule.type) {
    case ValueType::kUInt: {
      if (auto v = to_uint(raw)) return *v;
      throw fail("a non-negative integer");
    }
    case ValueType::kReal: {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || ptr != raw.data() + raw.size()) throw fail("a real number");
      return v;
    }
    case ValueType::kBool:
      if (raw == "true") return true;
      if (raw == "false") return false;
      throw fail("true or false");
    case ValueType::kText:
      if (raw.empty()) throw fail("a non-empty value");
      return raw;
    case ValueType::kUIntList: {
      UIntList out;
      for (const auto& item : split_list(raw)) {
        auto v = to_uint(item);
        if (!v) throw fail("a comma-separated list of integers");
        out.push_back(*v);
      }
      if (out.empty()) throw fail("a non-empty list");
      return out;
    }
    case ValueType::kTextList: {
      auto out = split_list(raw);
      if (out.empty()) throw fail("a non-empty list");
      return out;
    }
  }
  throw fail("a value");
}

const ExperimentSchema& schema_or_throw(const std::string& name, int line) {
  const auto* schema = find_schema(name);
  if (schema == nullptr) {
    std::string known;
    for (const auto& s : registry()) known += (known.empty() ? "" : ", ") + std::string(s.name);
    throw ConfigError("unknown experiment '" + name + "' (known: " + known + ")", line);
  }
  return *schema;
}

template <typename T>
const T& get_typed(const ExperimentConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) throw ConfigError("missing key '" + key + "'");
  if (const auto* v = std::get_if<T>(&it->second)) return *v;
  throw ConfigError("key '" + key + "' has a different type");
}

}  // namespace

const std::vector<std::string>& experiment_registry() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : registry()) out.emplace_back(s.name);
    return out;
  }();
  return names;
}

std::string_view experiment_description(std::string_view name) {
  const auto* s = find_schema(name);
  return s == nullptr ? std::string_view{} : s->description;
}

std::uint64_t ExperimentConfig::uint(const std::string& key) const {
  return get_typed<std::uint64_t>(*this, key);
}
double ExperimentConfig::real(const std::string& key) const {
  return get_typed<double>(*this, key);
}
bool ExperimentConfig::flag(const std::string& key) const { return get_typed<bool>(*this, key); }
const std::string& ExperimentConfig::text(const std::string& key) const {
  return get_typed<std::string>(*this, key);
}
const UIntList& ExperimentConfig::uint_list(const std::string& key) const {
  return get_typed<UIntList>(*this, key);
}
const TextList& ExperimentConfig::text_list(const std::string& key) const {
  return get_typed<TextList>(*this, key);
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const auto& schema = schema_or_throw(experiment, 0);
  const auto* rule = find_rule(schema, key);
  if (rule == nullptr) {
    throw ConfigError("unknown key '" + key + "' for experiment '" + experiment + "'");
  }
  values[key] = convert(*rule, raw, 0);
}

ExperimentConfig parse_config(std::string_view text) {
  struct Entry {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const auto hash = raw_line.find('#');
    const std::string line = trim(std::string_view(raw_line).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (e.key.empty()) throw ConfigError("empty key", line_no);
    for (const auto& prev : entries) {
      if (prev.key == e.key) {
        throw ConfigError(
            "duplicate key '" + e.key + "' (first on line " + std::to_string(prev.line) + ")",
            line_no);
      }
    }
    entries.push_back(std::move(e));
  }

  const auto exp_it = std::find_if(entries.begin(), entries.end(),
                                   [](const Entry& e) { return e.key == "experiment"; });
  if (exp_it == entries.end()) throw ConfigError("missing required key 'experiment'");

  ExperimentConfig config;
  config.experiment = exp_it->value;
  const auto& schema = schema_or_throw(config.experiment, exp_it->line);

  for (const auto& e : entries) {
    if (e.key == "experiment") continue;
    const auto* rule = find_rule(schema, e.key);
    if (rule == nullptr) {
      throw ConfigError("unknown key '" + e.key + "' for experiment '" + config.experiment + "'",
                        e.line);
    }
    config.values[e.key] = convert(*rule, e.value, e.line);
  }
  for (const auto& rule : schema.keys) {
    const std::string key(rule.key);
    if (config.values.contains(key)) continue;
    if (rule.required) {
      throw ConfigError("experiment '" + config.experiment + "' requires key '" + key + "'");
    }
    if (rule.fallback) config.values[key] = convert(rule, std::string(*rule.fallback), 0);
  }
  return config;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string serialize_config(const ExperimentConfig& config) {
  std::string out = "experiment = " + config.experiment + "\n";
  for (const auto& [key, value] : config.values) {
    out += key + " = ";
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::uint64_t>) {
            out += std::to_string(v);
          } else if constexpr (std::is_same_v<T, double>) {
            out += format_double(v);
          } else if constexpr (std::is_same_v<T, bool>) {
            out += v ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::string>) {
            out += v;
          } else if constexpr (std::is_same_v<T, UIntList>) {
            for (std::size_t i = 0; i < v.size(); ++i)
              out += (i ? ", " : "") + std::to_string(v[i]);
          } else {
            for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
          }
        },
        value);
    out += "\n";
  }
  return out;
}

}  // namespace floorlab
