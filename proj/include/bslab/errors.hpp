#pragma once

#include <stdexcept>
#include <string>

namespace bslab {

// Caller passed a value outside an operation's documented domain.
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Two distinct atoms coincide, or a measure cannot support a kernel.
struct degenerate_measure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A dense decomposition or quadrature did not converge.
struct numerical_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested functionality is intentionally not implemented (theta <= 1 branch).
struct unsupported_branch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A spectral window is empty after sign restriction or truncation.
struct insufficient_spectrum : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config text could not be parsed or validated.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bslab
