#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swarmcap {

/// Invalid configuration: bad architecture, unsupported condition,
/// unsatisfiable scenario counts, unknown config keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid call-site input: empty batches, non-finite values, bad labels.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameter vectors that do not share one architecture.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// All merge weights were zero.
class DegenerateMergeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// CWPA weight with p = n = 0 and alpha = 0.
class UndefinedWeightError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV content. `row()` is the 1-based data row (header excluded),
/// or 0 when the header itself is at fault.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : std::runtime_error(row == 0 ? "header: " + what
                                    : "row " + std::to_string(row) + ": " + what),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace swarmcap
