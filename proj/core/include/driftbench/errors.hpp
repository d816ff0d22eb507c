#pragma once

#include <stdexcept>

namespace driftbench {

// Invalid configuration or arguments. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (IDX, CSV, logs, checkpoints).
struct DataFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered during training or evaluation.
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace driftbench
