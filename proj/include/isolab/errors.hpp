#pragma once

#include <stdexcept>
#include <string>

namespace isolab {

/// Bad call shape: wrong dimensions, unknown names, malformed specs.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameter outside the mathematical domain of the quantity.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Direct estimator refused because its variance is not finite-guaranteed;
/// the message names the admissible alternative route.
struct VarianceRefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sample set cannot be isotropized (singular or under-determined covariance).
struct DegenerateMeasureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Measure lacks a property the operation requires (e.g. origin not in support).
struct UnsupportedMeasureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point outside the finiteness domain of the exponential-moment transform.
struct LaplaceDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation rejected above its dimension cap (e.g. volume brackets past n=6).
struct ScaleRefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace isolab
