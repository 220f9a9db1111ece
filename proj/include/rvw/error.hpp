#pragma once

#include <stdexcept>
#include <string>

namespace rvw {

// Base of every error the library raises. The category decides how the CLI
// maps it to an exit code and how the service maps it to an HTTP status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A referenced id (edge, node, frame, session, asset) does not exist.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// A request that is valid in form but not allowed in the current state.
class ConflictError : public Error {
public:
    using Error::Error;
};

// Short machine-readable category, shared by the service and CLI traces.
inline const char* error_code(const std::exception& e)
{
    if (dynamic_cast<const ParseError*>(&e) != nullptr) {
        return "bad_request";
    }
    if (dynamic_cast<const ValidationError*>(&e) != nullptr) {
        return "invalid";
    }
    if (dynamic_cast<const NotFoundError*>(&e) != nullptr) {
        return "not_found";
    }
    if (dynamic_cast<const ConflictError*>(&e) != nullptr) {
        return "conflict";
    }
    return "internal";
}

}  // namespace rvw
