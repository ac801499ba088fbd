#pragma once

#include <stdexcept>
#include <string>

namespace lami {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration document. `path` is a JSON-pointer-like location
// of the offending field ("objects[2].fill_level").
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)), message_(what) {}

  const std::string& path() const noexcept { return path_; }
  // The diagnostic without the location prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string path_;
  std::string message_;
};

// A name that does not resolve in the scene or a registry.
class LookupError : public Error {
 public:
  LookupError(std::string name, const std::string& what)
      : Error(what), name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// An action whose arguments lack a required affordance (pouring into a knife).
class AffordanceError : public Error {
 public:
  using Error::Error;
};

// A violated contract precondition (validation failures, misuse).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lami
