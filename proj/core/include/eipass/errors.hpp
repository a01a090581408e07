#pragma once

#include <stdexcept>
#include <string>

namespace eipass {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a documented constraint (sign, dimension, topology).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is numerically singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Two independent evaluation routes disagree beyond tolerance. Signals a bug.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Operation needs a lossless network but was handed a lossy one.
class LossyNetworkError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace eipass
