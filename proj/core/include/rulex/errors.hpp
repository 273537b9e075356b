#pragma once

#include <stdexcept>
#include <string>

namespace rulex {

// Base of every error thrown by the library. The CLI maps each subclass to a
// stable exit code (validation 2, numeric 3, io 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rulex
