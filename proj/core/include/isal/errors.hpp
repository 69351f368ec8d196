#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isal {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct InvalidModel : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

struct UnknownLayer : Error {
    using Error::Error;
};

struct TraceMismatch : Error {
    using Error::Error;
};

struct InvalidConfig : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Malformed serialized input; carries the byte offset where parsing failed.
struct FormatError : Error {
    FormatError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

struct DegenerateMap : Error {
    using Error::Error;
};

struct NoFixations : Error {
    using Error::Error;
};

// Broken internal invariant, e.g. a non-finite value out of an engine op.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace isal
