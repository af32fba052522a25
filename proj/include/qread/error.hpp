#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qread {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration or usage (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad or missing data: malformed files, absent artifacts, invalid inputs
// (CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

// Malformed binary payload; carries the byte offset of the failure.
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : DataError(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    std::uint64_t byte_offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

}  // namespace qread
