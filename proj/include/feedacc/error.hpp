#pragma once

#include <stdexcept>
#include <string>

namespace feedacc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed or incomplete input file (missing column, dangling key, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NumericalSingularity : public Error {
 public:
  using Error::Error;
};

}  // namespace feedacc
