#pragma once

#include <stdexcept>
#include <string>

namespace rankstab {

// Bad inputs: malformed files, contract violations, out-of-range parameters.
// The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Well-formed inputs on which the requested computation is undefined or
// failed numerically (degenerate gaps, non-PSD covariance, divergent fit).
// The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace rankstab
