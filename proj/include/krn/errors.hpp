#pragma once

#include <stdexcept>
#include <string>

namespace krn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct SpaceMismatch : Error {
    using Error::Error;
};

struct IndexMismatch : Error {
    using Error::Error;
};

struct AbsoluteContinuityViolation : Error {
    using Error::Error;
};

struct TailMassTooLarge : Error {
    using Error::Error;
};

struct QuadratureFailure : Error {
    using Error::Error;
};

struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " at position " + std::to_string(pos)), position(pos) {}
    std::size_t position;
};

struct StarNotAllowed : Error {
    using Error::Error;
};

struct StateBudgetExceeded : Error {
    StateBudgetExceeded(const std::string& msg, long count)
        : Error(msg), states_reached(count) {}
    long states_reached;
};

struct PairBudgetExceeded : Error {
    PairBudgetExceeded(const std::string& msg, long count)
        : Error(msg), pairs_reached(count) {}
    long pairs_reached;
};

}  // namespace krn
