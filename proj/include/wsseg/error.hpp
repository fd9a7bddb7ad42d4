#pragma once

#include <stdexcept>
#include <string>

namespace wsseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or mismatched file contents (bad magic, bad header, value out of domain).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or violated precondition on user-provided parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training diverged or produced an unusable result.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsseg
