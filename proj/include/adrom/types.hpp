#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace adrom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments of an operation was violated.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// A numerical procedure failed (non-finite values, breakdown, ill conditioning).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// File format or I/O failure.
class IoError : public Error {
public:
  using Error::Error;
};

inline void require(bool cond, const std::string &what) {
  if (!cond)
    throw PreconditionError(what);
}

} // namespace adrom
