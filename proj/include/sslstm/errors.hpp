#pragma once

#include <stdexcept>
#include <string>

namespace sslstm {

/// Malformed input data (dataset, embedding, lexicon or checkpoint files).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint header names a version this build cannot read.
class UnknownVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Checkpoint ended before the tensor count announced in its header.
class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Tensor or cache shapes disagree with the model they are applied to.
class ShapeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Not enough eligible data to satisfy a request (e.g. negative sampling).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or gradient.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sslstm
