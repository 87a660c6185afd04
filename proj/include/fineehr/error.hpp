#pragma once

#include <exception>
#include <string>
#include <utility>

namespace fineehr {

enum class ErrorKind { Config, Data, Training };

/// Base of every error thrown by the library. The message can be prefixed
/// with pipeline stage labels as the error propagates outward.
class Error : public std::exception {
 public:
  Error(ErrorKind kind, std::string message)
      : kind_(kind), message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }
  ErrorKind kind() const noexcept { return kind_; }

  void add_stage(const std::string& stage) {
    message_ = "[" + stage + "] " + message_;
  }

 private:
  ErrorKind kind_;
  std::string message_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorKind::Config, std::move(message)) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string message)
      : Error(ErrorKind::Data, std::move(message)) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(std::string message)
      : Error(ErrorKind::Training, std::move(message)) {}
};

/// A required CSV column is absent from the header row.
class SchemaError : public DataError {
 public:
  explicit SchemaError(std::string column)
      : DataError("missing required column " + column),
        column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// A CSV record could not be parsed or holds an invalid value.
class RowError : public DataError {
 public:
  RowError(std::size_t line, const std::string& reason)
      : DataError("line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateKeyError : public RowError {
 public:
  DuplicateKeyError(std::size_t line, const std::string& key)
      : RowError(line, "duplicate key " + key), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// A training stage was handed data from outside the training split.
class LeakageError : public TrainingError {
 public:
  LeakageError(std::string stage, const std::string& admission_id)
      : TrainingError("[" + stage + "] leakage: admission " + admission_id +
                      " is not in the training split"),
        stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Process exit code for an error kind: 2 config, 3 data, 4 training.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Training: return 4;
  }
  return 1;
}

}  // namespace fineehr
