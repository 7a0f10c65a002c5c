#pragma once

#include <stdexcept>
#include <string>

namespace emvqm {

// Base for every error raised by the library. The message is the stable,
// user-facing reason string ("degenerate curve", "frame size mismatch", ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid geometric input (degenerate or mismatched curves).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Invalid image/video input: sizes, frame counts, malformed files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Bad parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Statistical evaluation is undefined for the given input.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace emvqm
