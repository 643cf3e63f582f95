#ifndef ADP_ERRORS_HPP
#define ADP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace adp {

// Base of every error the library throws on a violated contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Score field is locally constant or expanding along its own direction, so
// the adaptive step size has no finite positive value.
class DegenerateCurvature : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class MismatchError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration; what() starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace adp

#endif  // ADP_ERRORS_HPP
