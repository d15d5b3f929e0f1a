#pragma once

#include <stdexcept>
#include <string>

namespace floorlab {

/// Zero-length or zero-norm input where a direction is required.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A requested landscape does not fit in the configured memory budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data (IDX files, checkpoints, soft-label files).
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Invalid experiment configuration; line is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

}  // namespace floorlab
