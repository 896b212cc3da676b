#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sizes of matrices and vectors do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed text or binary input. `line()` is 0 for binary inputs.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A file could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw DimensionError(std::string(what) + ": size " + std::to_string(a) +
                             " does not match " + std::to_string(b));
}

} // namespace csor
