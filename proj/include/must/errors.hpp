#pragma once

#include <stdexcept>
#include <string>

namespace must {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data (files, streams, patterns).
class DataError : public Error {
public:
    using Error::Error;
};

/// Parse failure at a known location in the input, e.g. "byte 27" or "line 3".
class ParseError : public DataError {
public:
    ParseError(const std::string& what, const std::string& location)
        : DataError(location + ": " + what), location_(location), detail_(what) {}

    const std::string& location() const noexcept { return location_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string location_;
    std::string detail_;
};

/// The pipeline cannot produce a meaningful result, e.g. no response above r_min.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Bad configuration keys, values or command-line usage.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace must
