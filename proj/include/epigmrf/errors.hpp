#pragma once

#include <stdexcept>
#include <string>

namespace epigmrf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions (dimension mismatch, bad orders, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Factorisation failures, non-finite densities, non-convergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Missing files, malformed CSV/JSON, inconsistent configuration.
class InputError : public Error {
public:
    using Error::Error;
};

} // namespace epigmrf
