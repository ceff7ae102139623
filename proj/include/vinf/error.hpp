#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vinf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension disagreement between a model, a query or a trace.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input. `offset()` is the byte position where
/// decoding stopped.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace vinf
