#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Base for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: config values, flags, malformed files, violated preconditions.
// The CLI maps this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace driftlab
