#pragma once

#include <stdexcept>
#include <string>

namespace v2v {

// Broad failure classes. The CLI maps each one to a distinct exit status.
enum class ErrorClass {
  domain,       // invalid argument or input outside an operation's domain
  regime,       // unstable or otherwise invalid operating regime
  convergence,  // iterative/numeric procedure failed to converge
  validation,   // an oracle or acceptance check failed
  config,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), cls_(cls), name_(std::move(name)) {}

  ErrorClass error_class() const noexcept { return cls_; }
  // Short machine-readable identifier, e.g. "UnstableQueue".
  const std::string& name() const noexcept { return name_; }

 private:
  ErrorClass cls_;
  std::string name_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, std::string name = "DomainError")
      : Error(ErrorClass::domain, std::move(name), what) {}
};

class RegimeError : public Error {
 public:
  RegimeError(std::string name, const std::string& what)
      : Error(ErrorClass::regime, std::move(name), what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string name, const std::string& what, double last_residual = 0.0)
      : Error(ErrorClass::convergence, std::move(name), what), residual_(last_residual) {}
  double last_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, "ConfigError", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::io, "IOError", what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorClass::validation, "ValidationFailure", what) {}
};

}  // namespace v2v
