#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace surgforge {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A record or payload does not match its expected schema.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& reason, long line = -1, std::string field = {})
        : Error(format(reason, line, field)), line_(line), field_(std::move(field)) {}

    long line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    static std::string format(const std::string& reason, long line, const std::string& field) {
        std::string msg = "schema error: " + reason;
        if (!field.empty()) msg += " (field '" + field + "')";
        if (line >= 0) msg += " (line " + std::to_string(line) + ")";
        return msg;
    }

    long line_;
    std::string field_;
};

/// Conversation text violates the render grammar.
class ParseError : public Error {
public:
    ParseError(const std::string& reason, std::size_t line, std::size_t column)
        : Error("parse error at line " + std::to_string(line) + ", column " +
                std::to_string(column) + ": " + reason),
          line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class InvalidConversation : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DuplicateIdError : public Error {
public:
    using Error::Error;
};

class PolicyError : public Error {
public:
    using Error::Error;
};

class EmptyVideoError : public Error {
public:
    using Error::Error;
};

class EmptyCatalogError : public Error {
public:
    using Error::Error;
};

class EmptyConversationError : public Error {
public:
    using Error::Error;
};

class OrderError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class MismatchError : public Error {
public:
    using Error::Error;
};

class JoinError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class UnresolvedClipError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class MissingInputError : public Error {
public:
    using Error::Error;
};

}  // namespace surgforge
