#pragma once

#include <stdexcept>
#include <string>

namespace srec {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shapes of the operands disagree.
struct DimensionMismatch : Error {
    using Error::Error;
};

// A support-restricted solve hit a (numerically) rank-deficient column set.
struct RankDeficient : Error {
    using Error::Error;
};

// An enumeration guard tripped (e.g. too many supports to enumerate).
struct TooLarge : Error {
    using Error::Error;
};

// Caller passed arguments outside an operation's documented domain.
struct BadArguments : Error {
    using Error::Error;
};

// A generated matrix column was identically zero even after a redraw.
struct DegenerateColumn : Error {
    using Error::Error;
};

// Filesystem or serialization failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace srec
