#pragma once

#include <stdexcept>
#include <string>

namespace prl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or axis violations in tensor kernels and network plumbing.
struct ShapeError : Error {
    using Error::Error;
};

// NaN/Inf produced from finite inputs, or divergence during training.
struct NumericalError : Error {
    using Error::Error;
};

// Mask with no foreground or no background: boundary set is empty, so the
// signed distance map and direction field are undefined. Callers that need a
// fallback use the documented all-zero maps.
struct DegenerateMask : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace prl
