#pragma once

#include <stdexcept>
#include <string>

namespace kisgmm {

// Bad dimensions, malformed files, invalid option values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Operation called in a state that does not permit it (e.g. backward
// before forward).
class StateError : public std::runtime_error {
public:
    explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical breakdown: non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kisgmm
