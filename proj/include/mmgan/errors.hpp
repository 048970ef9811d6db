#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mmgan {

/// Argument violates a precondition (shape mismatch, out-of-range value, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation called in the wrong state, e.g. backward without a recorded forward.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Requested more distinct items than exist (K > 2^d cube vertices).
class CapacityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed binary input. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Malformed configuration text. Names the offending key and line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message)
      : std::runtime_error("config line " + std::to_string(line) + ", key '" + key +
                           "': " + message),
        key_(key),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Training produced a non-finite loss. The message holds a diagnostic snapshot.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmgan
