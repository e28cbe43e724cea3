#ifndef MRCNER_ERRORS_H_
#define MRCNER_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mrcner {

// Error categories map to CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoFailure : ConfigError {
  explicit IoFailure(const std::string& path)
      : ConfigError("cannot open: " + path) {}
};

struct MalformedLine : DataError {
  MalformedLine(size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line(line) {}
  size_t line;
};

struct UnknownType : DataError {
  explicit UnknownType(const std::string& type_name, size_t line = 0)
      : DataError(line ? "line " + std::to_string(line) + ": unknown entity type '" + type_name + "'"
                       : "unknown entity type '" + type_name + "'"),
        type_name(type_name) {}
  std::string type_name;
};

struct SpanOutOfRange : DataError {
  using DataError::DataError;
};

struct DuplicateSpan : DataError {
  using DataError::DataError;
};

struct MissingTemplate : DataError {
  explicit MissingTemplate(const std::string& type_name)
      : DataError("no query template for entity type '" + type_name + "'") {}
};

struct SequenceTooLong : DataError {
  SequenceTooLong(int length, int capacity)
      : DataError("combined sequence of length " + std::to_string(length) +
                  " exceeds position capacity " + std::to_string(capacity)) {}
};

struct DocIdMismatch : DataError {
  using DataError::DataError;
};

struct SchemaMismatch : DataError {
  using DataError::DataError;
};

struct DegenerateInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NonFiniteLoss : NumericError {
  NonFiniteLoss(int epoch, int batch)
      : NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                     ", batch " + std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

}  // namespace mrcner

#endif  // MRCNER_ERRORS_H_
