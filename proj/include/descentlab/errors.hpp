#pragma once

#include <stdexcept>
#include <string>

namespace descentlab {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: dimension mismatch, missing constants, invalid parameter.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operation not defined for this problem/spec combination.
class Unsupported : public Error {
 public:
  using Error::Error;
};

// An iterative numeric routine failed to converge.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, long iterations)
      : Error(what), iterations(iterations) {}
  long iterations;
};

// Estimator state used before its snapshot/recursion seed was set.
class InvalidState : public Error {
 public:
  using Error::Error;
};

// A per-iteration certificate assertion failed.
class CertificateFailure : public Error {
 public:
  CertificateFailure(const std::string& what, long step, double slack)
      : Error(what), step(step), slack(slack) {}
  long step;
  double slack;
};

// An iterate became non-finite at step t.
class Diverged : public Error {
 public:
  Diverged(const std::string& what, long step) : Error(what), step(step) {}
  long step;
};

}  // namespace descentlab
