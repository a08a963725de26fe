// Error types shared by every module. Validation failures map to exit code 2
// in the command-line tool, I/O failures to exit code 3.
#pragma once

#include <stdexcept>
#include <string>

namespace ongcmp {

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a NaN or Inf appears in a forward or backward pass.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

}  // namespace ongcmp
