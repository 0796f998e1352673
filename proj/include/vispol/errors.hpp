#pragma once

#include <stdexcept>
#include <string>

namespace vispol {

// Invalid configuration: bad dimensions, missing keys, non-positive
// concentrations, zero-frequency class with inverse weighting, ...
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller misuse: empty samples, degenerate variance, k out of range, ...
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A fit failed: rank deficiency, separation, IRLS divergence.
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss or otherwise broke down.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace vispol
