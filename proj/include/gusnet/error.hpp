#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gusnet {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  TemplateError(const std::string& what, std::vector<std::string> keys)
      : Error(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::ptrdiff_t index = -1)
      : Error(what), index_(index) {}
  // Offending element index, or -1 when not applicable.
  std::ptrdiff_t index() const { return index_; }

 private:
  std::ptrdiff_t index_;
};

// Transport-level failures of the chat-completions client.
class TransportError : public Error {
 public:
  enum class Kind { kAuth, kRetriesExhausted, kMalformedResponse, kRejected };

  TransportError(Kind kind, const std::string& what, int attempts = 0)
      : Error(what), kind_(kind), attempts_(attempts) {}
  Kind kind() const { return kind_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int attempts_;
};

class AuthError : public TransportError {
 public:
  explicit AuthError(const std::string& what, int attempts = 1)
      : TransportError(Kind::kAuth, what, attempts) {}
};

class RetriesExhaustedError : public TransportError {
 public:
  RetriesExhaustedError(const std::string& what, int attempts)
      : TransportError(Kind::kRetriesExhausted, what, attempts) {}
};

class MalformedResponseError : public TransportError {
 public:
  explicit MalformedResponseError(const std::string& what, int attempts = 1)
      : TransportError(Kind::kMalformedResponse, what, attempts) {}
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class AnnotationError : public Error {
 public:
  AnnotationError(const std::string& what, std::vector<std::string> attempts)
      : Error(what), attempts_(std::move(attempts)) {}
  // Raw model replies, one per attempt.
  const std::vector<std::string>& attempts() const { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

class MergeError : public Error {
 public:
  MergeError(const std::string& what, std::ptrdiff_t index)
      : Error(what), index_(index) {}
  std::ptrdiff_t index() const { return index_; }

 private:
  std::ptrdiff_t index_;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step) : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace gusnet
