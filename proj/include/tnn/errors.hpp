#pragma once

#include <stdexcept>
#include <string>

namespace tnn {

/// Raised when a CSV or config file does not match the declared schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised on malformed numeric input (carries row/field context in the message).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when vector/matrix dimensions do not match a spec.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised on invalid argument values (thresholds, lengths, rates).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces or receives non-finite values.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a rollout leaves the configured state bound.
struct DivergenceError : NumericalError {
    DivergenceError(const std::string& msg, long step) : NumericalError(msg), step_index(step) {}
    long step_index;
};

/// Raised when an epoch loses more than half of its windows to divergence.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised on bad configuration files or fold plans.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tnn
