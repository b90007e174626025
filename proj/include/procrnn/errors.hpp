#pragma once

#include <stdexcept>
#include <string>

namespace procrnn {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (XML, CSV, JSON, timestamps). Carries the position
/// where parsing stopped; column is 0 when only the line is known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column = 0)
        : Error(what + " (line " + std::to_string(line) +
                (column > 0 ? ", column " + std::to_string(column) : "") + ")"),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Structurally valid input that violates a content requirement
/// (missing attribute, duplicate case id, unusable field combination).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

/// A token scheme cannot be applied to a log (separator collisions,
/// missing required attributes, unpaired activity intervals).
class EncodingError : public Error {
public:
    explicit EncodingError(const std::string& what) : Error(what) {}
};

/// File-level I/O failure (unreadable input, unwritable output).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace procrnn
