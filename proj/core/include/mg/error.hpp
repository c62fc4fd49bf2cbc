#pragma once

#include <stdexcept>
#include <string>

namespace mg {

// Base for every error the library raises. Command-line front ends map
// ValidationError to exit status 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, unknown names, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// External scorer transport or protocol failure.
class BridgeError : public Error {
 public:
  using Error::Error;
};

}  // namespace mg
