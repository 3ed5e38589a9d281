#pragma once

#include <stdexcept>
#include <string>

namespace tailgen {

/// Bad arguments from a caller: shape mismatch, empty input, invalid range.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration: unknown key, malformed value, incompatible settings.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (checkpoint, CSV, IDX).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric failure: overflow, NaN, non-convergence.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two distinct latents mapped to exactly the same output point.
struct ModeCollapseError : NumericError {
    ModeCollapseError(int i, int j)
        : NumericError("mode collapse: generator outputs for latents " + std::to_string(i) +
                       " and " + std::to_string(j) + " coincide exactly"),
          first(i), second(j) {}
    int first;
    int second;
};

}  // namespace tailgen
