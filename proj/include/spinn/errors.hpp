#pragma once

#include <stdexcept>
#include <string>

namespace spinn {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed argument (CLI exit code 2).
struct ValidationError : Error {
  using Error::Error;
};

// Numerical failure: blow-up, singular resolvent, divergence (CLI exit code 3).
struct NumericalError : Error {
  using Error::Error;
};

// Machine-checkable persistence failure categories.
enum class IoCode {
  BadMagic,
  Truncated,
  DimensionOverflow,
  Schema,
  Io,
};

// Persistence failure (CLI exit code 4).
class IoError : public Error {
 public:
  IoError(IoCode code, const std::string& what) : Error(what), code_(code) {}
  IoCode code() const noexcept { return code_; }

 private:
  IoCode code_;
};

}  // namespace spinn
