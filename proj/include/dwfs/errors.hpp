#pragma once

#include <stdexcept>

namespace dwfs {

// Thrown when inputs violate a documented precondition (bad grid size,
// incompatible masks, out-of-range parameters, ...). The CLI maps this to
// exit code 3.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on file-format or filesystem failures. CLI exit code 2.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dwfs
