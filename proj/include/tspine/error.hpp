#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tspine {

/// Base of every error the library raises. `kind()` is the stable,
/// machine-readable tag the CLI and session protocol report.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParameterError : public Error {
 public:
  ParameterError(std::string code, const std::string& message)
      : Error("parameter", message), code_(std::move(code)) {}
  /// Which parameter check failed, e.g. "even_n" or "layer_rule".
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class SolvabilityError : public Error {
 public:
  SolvabilityError(const std::string& message, std::vector<std::string> nodes)
      : Error("solvability", message), nodes_(std::move(nodes)) {}
  const std::vector<std::string>& offending_nodes() const noexcept { return nodes_; }

 private:
  std::vector<std::string> nodes_;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::vector<double> trace)
      : Error("divergence", message), trace_(std::move(trace)) {}
  /// Max relative target error per completed iteration.
  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& message, long last_stable_step)
      : Error("integration", message), last_stable_step_(last_stable_step) {}
  long last_stable_step() const noexcept { return last_stable_step_; }

 private:
  long last_stable_step_;
};

class ReachabilityError : public Error {
 public:
  explicit ReachabilityError(const std::string& message) : Error("reachability", message) {}
};

class SweepError : public Error {
 public:
  explicit SweepError(const std::string& message) : Error("sweep", message) {}
};

class LogIntegrityError : public Error {
 public:
  explicit LogIntegrityError(const std::string& message) : Error("log_integrity", message) {}
};

// Model file errors. Each failure mode has its own type so callers can tell a
// stale file from a corrupted one.
class VersionError : public Error {
 public:
  explicit VersionError(const std::string& message) : Error("version", message) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& message) : Error("schema", message) {}
};

class DanglingReferenceError : public Error {
 public:
  explicit DanglingReferenceError(const std::string& message) : Error("dangling_reference", message) {}
};

class CountViolationError : public Error {
 public:
  explicit CountViolationError(const std::string& message) : Error("count_violation", message) {}
};

}  // namespace tspine
