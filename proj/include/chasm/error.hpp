#pragma once

#include <stdexcept>
#include <string>

namespace chasm {

// Base class for all library-raised errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that renders an operation mathematically undefined (zero vector,
// constant column, ...). Raised instead of letting NaNs propagate.
class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& msg) : Error(msg) {}
};

// Malformed serialized data. The message names the failing field.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
};

// A lookup whose radius exceeds what the substring split can guarantee.
class IncompleteLookupError : public Error {
public:
    explicit IncompleteLookupError(const std::string& msg) : Error(msg) {}
};

}  // namespace chasm
