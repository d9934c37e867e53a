#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xrprobe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TimeBeforeAnchor : public Error {
 public:
  using Error::Error;
};

class NyquistViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Inconsistent scenario or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ConfigError {
 public:
  SchemaError(std::string field, const std::string& what)
      : ConfigError(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace xrprobe
