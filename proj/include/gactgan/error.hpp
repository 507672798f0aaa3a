#pragma once

#include <stdexcept>
#include <string>

namespace gactgan {

/// Malformed input data: CSV structure, schema mismatch, unknown labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, singular fits and similar numeric breakdowns.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or command-line usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gactgan
