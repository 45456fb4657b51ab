#pragma once

#include <stdexcept>
#include <string>

namespace meta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// geometry
class EmptyPolytope : public Error {
 public:
  using Error::Error;
};

class NotInPolytope : public Error {
 public:
  using Error::Error;
};

// simplexlp
class LpError : public Error {
 public:
  using Error::Error;
};

class LpIterationLimit : public LpError {
 public:
  using LpError::LpError;
};

class LpNumericalTrouble : public LpError {
 public:
  using LpError::LpError;
};

class TooLarge : public LpError {
 public:
  using LpError::LpError;
};

// metaround
class IterationLimitExceeded : public Error {
 public:
  using Error::Error;
};

class CertificateViolation : public Error {
 public:
  using Error::Error;
};

// setcover
class GenerationFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace meta
