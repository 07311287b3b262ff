#pragma once

#include <stdexcept>
#include <string>

namespace hhtfc {

/// Base for all library errors. The category drives CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad arguments, malformed configuration, or invalid parameters.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Input data violates a precondition (non-uniform sampling, gaps, lengths).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: non-convergence, singular systems.
class ComputeError : public Error {
public:
    using Error::Error;
};

}  // namespace hhtfc
