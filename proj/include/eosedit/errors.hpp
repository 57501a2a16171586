#pragma once

#include <stdexcept>
#include <string>

namespace eosedit {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller-supplied values that fail a precondition (bad prompt ids, bad flags).
struct input_error : error {
    using error::error;
};

// Malformed file content (vocab/merges/archive headers).
struct parse_error : error {
    using error::error;
};

// Well-formed input that violates an integrity invariant (duplicate tokens,
// missing specials, non-finite tensor entries, overlapping buffers).
struct integrity_error : error {
    using error::error;
};

// Tensor/matrix dimension mismatches.
struct shape_error : error {
    using error::error;
};

// Out-of-range scalar parameters (steps, timesteps, sweep bounds).
struct parameter_error : error {
    using error::error;
};

// Named tensor missing or unreadable while loading weights.
struct load_error : error {
    using error::error;
};

// Sampling produced non-finite values.
struct numeric_error : error {
    using error::error;
};

// Backend unavailable or failed to initialize.
struct backend_error : error {
    using error::error;
};

// Filesystem failures while emitting artifacts.
struct io_error : error {
    using error::error;
};

}  // namespace eosedit
