#pragma once

#include <stdexcept>

namespace sphfield {

// Domain violations use std::domain_error, malformed arguments
// std::invalid_argument, shape mismatches std::length_error and
// out-of-range degrees std::out_of_range. The two below cover the rest.

/// A requested size exceeds a configured maximum.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic is undefined because the power spectrum operator vanishes.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace sphfield
