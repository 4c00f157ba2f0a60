#pragma once

#include <stdexcept>
#include <string>

namespace jifr {

// Each kind maps to one CLI exit path; `kind()` is the machine-readable tag.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "integrity"; }
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "empty-dataset"; }
};

class ArgumentError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "argument"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config"; }
};

class MissingFramesError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "missing-frames"; }
};

class UnsupportedTaskError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported-task"; }
};

class SamplingError : public Error {
 public:
  SamplingError(std::size_t user, const std::string& msg) : Error(msg), user_(user) {}
  const char* kind() const noexcept override { return "sampling"; }
  std::size_t user() const noexcept { return user_; }

 private:
  std::size_t user_;
};

}  // namespace jifr
