#pragma once

#include "microreduce/core/errors.hpp"

namespace microreduce::storage {

/// Injected backend failure (the emulated service returned a 5xx).
class StorageFaultError : public Error {
 public:
  using Error::Error;
};

/// A key-value write was rejected by the table's token bucket.
class ThrottledError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace microreduce::storage
