#pragma once

#include <stdexcept>
#include <string>

namespace slim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad magic, version or structure in a binary/text file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload shorter or longer than its header claims.
class LengthError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public Error {
 public:
  using Error::Error;
};

class ConfigHashError : public Error {
 public:
  using Error::Error;
};

}  // namespace slim
