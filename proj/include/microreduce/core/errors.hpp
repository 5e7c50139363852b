#pragma once

#include <stdexcept>

namespace microreduce {

/// Root of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Raised when an on-time-performance value is requested for an aggregate with no rows.
class DegenerateAggregateError : public Error {
 public:
  using Error::Error;
};

}  // namespace microreduce
