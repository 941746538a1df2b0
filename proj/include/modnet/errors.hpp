#pragma once

#include <stdexcept>
#include <string>

namespace modnet {

// Base class for all recoverable errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing or unreadable files.
struct IoError : Error {
    using Error::Error;
};

// Malformed input data: bad JSON lines, layout text, parse files, headers.
struct FormatError : Error {
    using Error::Error;
};

// Shape or dimension disagreements between tensors, data and config.
struct DimensionError : Error {
    using Error::Error;
};

}  // namespace modnet
