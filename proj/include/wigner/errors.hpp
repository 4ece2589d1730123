#pragma once

#include <stdexcept>
#include <string>

namespace wigner {

/// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two electrons closer than the coincidence threshold; the Coulomb term diverges.
class CoincidentElectrons : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative solver hit its iteration cap.
class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterate became non-finite.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& what, int history_length)
      : std::runtime_error(what), history_length_(history_length) {}
  int history_length() const noexcept { return history_length_; }

 private:
  int history_length_;
};

/// The fluctuation operator has a negative mode besides the time-translation mode.
class SaddlePoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration text could not be parsed or validated.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line, std::string field)
      : std::runtime_error(format(what, line, field)), line_(line), field_(std::move(field)) {}

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(const std::string& what, int line, const std::string& field) {
    std::string msg;
    if (line > 0) msg += "line " + std::to_string(line) + ": ";
    if (!field.empty()) msg += "'" + field + "': ";
    return msg + what;
  }

  int line_;
  std::string field_;
};

}  // namespace wigner
