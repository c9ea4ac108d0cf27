#pragma once

#include <stdexcept>
#include <string>

namespace bgap {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input: malformed files, invariant violations, out-of-range parameters.
// Maps to CLI exit code 1.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Chat/embedding provider or transport failure (after retries).
// Maps to CLI exit code 2.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& msg) : Error(msg) {}
};

}  // namespace bgap
