#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mindtrace {

// Error taxonomy shared by the whole library. The C API maps these onto
// mt_status codes; the CLI maps them onto exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input document. byte_offset is the position reported by the
// JSON parser, or 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg), byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

// Well-formed input that violates a domain contract (duplicate ids,
// out-of-range presence, unknown label, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Index or argument outside its documented range.
class RangeError : public Error {
public:
    using Error::Error;
};

// Could not reach the inference endpoint at all.
class TransportError : public Error {
public:
    using Error::Error;
};

class TimeoutError : public TransportError {
public:
    using TransportError::TransportError;
};

// Endpoint reachable but returned a non-2xx status.
class EndpointError : public Error {
public:
    EndpointError(const std::string& msg, int status) : Error(msg), status(status) {}
    int status;
};

// Every parse attempt of a structured LLM response failed; carries the raw
// text of each attempt for debugging.
class ValidationExhaustedError : public Error {
public:
    ValidationExhaustedError(const std::string& msg, std::vector<std::string> attempts)
        : Error(msg), attempts(std::move(attempts)) {}
    std::vector<std::string> attempts;
};

}  // namespace mindtrace
