#pragma once

#include <stdexcept>
#include <string>

namespace evalkit {

// All library failures derive from Error; the subclass names the failure
// class so callers (and the CLI's exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input carries no usable signal (e.g. all-zero samples handed to a fit).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent manifest / metadata input.
class ManifestError : public Error {
 public:
  using Error::Error;
};

}  // namespace evalkit
