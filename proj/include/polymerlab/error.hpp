#pragma once

#include <stdexcept>
#include <string>

namespace polymerlab {

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable identifier; `context()` carries free-form detail such as
/// the valid interval for a rejected argument.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string context = {})
      : std::runtime_error(message), code_(std::move(code)), context_(std::move(context)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }

 private:
  std::string code_;
  std::string context_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message, std::string context = {})
      : Error("domain_error", message, std::move(context)) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& message, std::string context = {})
      : Error("unsupported_operation", message, std::move(context)) {}
};

class ResourceError : public Error {
 public:
  explicit ResourceError(const std::string& message, std::string context = {})
      : Error("resource_error", message, std::move(context)) {}
};

class InconsistencyError : public Error {
 public:
  explicit InconsistencyError(const std::string& message, std::string context = {})
      : Error("internal_inconsistency", message, std::move(context)) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& message, std::string context = {})
      : Error("sampling_failure", message, std::move(context)) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message, std::string context = {})
      : Error("usage_error", message, std::move(context)) {}
};

}  // namespace polymerlab
