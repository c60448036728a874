#pragma once

#include <stdexcept>
#include <string>

namespace lodada {

// Error taxonomy mirrors the CLI exit codes: config=1, data=2, training=3.
// Bad arguments to library calls are config-class errors.

struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lodada
