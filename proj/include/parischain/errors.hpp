#pragma once

#include <stdexcept>
#include <string>

namespace parischain {

/// Bad or inconsistent user configuration (missing field, nonpositive rate, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mathematically invalid input to an operation (l >= r, t <= 0, ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An API contract was violated (wrong structure, K != L for the two-grid path, ...).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numerical procedure failed (singular factorization, quadrature non-convergence, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace parischain
