#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dejaboom {

// Base of every fault the library raises. Expected gameplay failures (a
// take that cannot happen, an unmet NPC condition) are values, never these.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class SpecParseError : public Error {
 public:
  SpecParseError(const std::string& field, std::size_t line, const std::string& message)
      : Error("PARSE", message), field_(field), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class SpecValidationError : public Error {
 public:
  SpecValidationError(std::string invariant, const std::string& message)
      : Error("VALIDATION", message), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

class UnknownFlagError : public Error {
 public:
  explicit UnknownFlagError(const std::string& flag)
      : Error("UNKNOWN_FLAG", "unknown milestone flag: " + flag) {}
};

class EmptyInputError : public Error {
 public:
  EmptyInputError() : Error("EMPTY_INPUT", "input is empty") {}
};

class SessionOverError : public Error {
 public:
  SessionOverError() : Error("SESSION_OVER", "session is no longer running") {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("CONFIG", message) {}
};

enum class ProviderFault { Timeout, Unavailable, BadResponse };

class ProviderError : public Error {
 public:
  ProviderError(ProviderFault fault, const std::string& message)
      : Error("PROVIDER", message), fault_(fault) {}
  ProviderFault fault() const noexcept { return fault_; }
  bool retryable() const noexcept { return fault_ != ProviderFault::BadResponse; }

 private:
  ProviderFault fault_;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error("NOT_FOUND", what + " not found") {}
};

class CorruptLogError : public Error {
 public:
  CorruptLogError(std::uint64_t seq, const std::string& message)
      : Error("CORRUPT", message), seq_(seq) {}
  // Sequence number of the first record that could not be read back.
  std::uint64_t seq() const noexcept { return seq_; }

 private:
  std::uint64_t seq_;
};

class MalformedLogError : public Error {
 public:
  explicit MalformedLogError(const std::string& message) : Error("MALFORMED_LOG", message) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& message) : Error("GRAPH", message) {}
};

class GraphParseError : public Error {
 public:
  explicit GraphParseError(const std::string& message) : Error("GRAPH_PARSE", message) {}
};

}  // namespace dejaboom
