#pragma once

#include <stdexcept>
#include <string>

namespace fdsc {

// Base of every error the library throws. Subclasses tag the failing
// category so callers (and tests) can tell a bad file from a bad config.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericsError : public Error {
 public:
  using Error::Error;
};

}  // namespace fdsc
