#pragma once

#include <stdexcept>
#include <string>

namespace jsmf {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// File, parse and configuration problems. The CLI maps these to exit code 2.
class IoError : public Error {
  public:
    using Error::Error;
};

// Numerical or data-dependent failures. The CLI maps these to exit code 1.
class ComputeError : public Error {
  public:
    using Error::Error;
};

}  // namespace jsmf
