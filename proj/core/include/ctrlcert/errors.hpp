#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctrlcert {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text. line/column are 1-based positions into the source.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
          line(line),
          column(column) {}
    std::size_t line;
    std::size_t column;
};

// Structurally valid input that violates a semantic requirement
// (zero input matrix, non-positive radius, inconsistent dimensions).
struct ValidationError : Error {
    using Error::Error;
};

// Operands whose sizes do not match the operation's contract.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside the numeric range an operation supports.
struct OverflowError : Error {
    using Error::Error;
};

// An iterative computation hit its term/iteration cap before its
// convergence test was satisfied.
struct NoConvergence : Error {
    using Error::Error;
};

// No admissible expansion scale was found within the halving budget.
struct EpsilonSearchFailed : Error {
    using Error::Error;
};

// Newton refinement failed to reduce the residual below the threshold.
struct NewtonDivergence : Error {
    using Error::Error;
};

// A synthesized or supplied control value lies outside the control set.
struct ControlOutOfSet : Error {
    using Error::Error;
};

// Invariant violation that indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace ctrlcert
