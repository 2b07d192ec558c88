#pragma once

#include <stdexcept>
#include <string>

namespace graphcarve {

// Base for every error raised by the library. The CLI maps subclasses to
// distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A detector click cannot occur for the given state and carving.
class HeraldImpossible : public Error {
 public:
  using Error::Error;
};

// Register too large for the dense representation in use.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

class UnsupportedStrategy : public Error {
 public:
  using Error::Error;
};

// Malformed config, graph, schedule or sweep file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphcarve
