#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spellattack {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates a documented precondition.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Input is well-formed but numerically degenerate (e.g. a constant channel).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

/// An iterative procedure ran out of iterations.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents. `offset` is the byte offset where reading failed,
/// or -1 when the problem is not tied to a position.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::int64_t offset = -1)
        : Error(offset >= 0 ? what + " (byte offset " + std::to_string(offset) + ")" : what),
          offset_(offset) {}
    std::int64_t offset() const noexcept { return offset_; }

private:
    std::int64_t offset_;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

}  // namespace spellattack
