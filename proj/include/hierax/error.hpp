#pragma once

#include <stdexcept>
#include <string>

namespace hierax {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line), column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// Document is syntactically JSON but does not match the schematic schema.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::string path)
        : Error(what + " at " + (path.empty() ? std::string("/") : path)), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Schematic failed validation when an operation required it to be accepted.
class ValidationError : public Error {
public:
    using Error::Error;
};

class StateSpaceMismatch : public Error {
public:
    using Error::Error;
};

class UnknownVariable : public Error {
public:
    using Error::Error;
};

class UnknownState : public Error {
public:
    using Error::Error;
};

class GraphError : public Error {
public:
    using Error::Error;
};

class TooLarge : public Error {
public:
    using Error::Error;
};

// Observation has zero probability under the model.
class ImpossibleEvidence : public Error {
public:
    using Error::Error;
};

// Variable lives below a component that has not been expanded.
class HiddenVariable : public Error {
public:
    using Error::Error;
};

// Posterior requested from a level whose messages are stale.
class DirtyScope : public Error {
public:
    using Error::Error;
};

// An internal consistency check failed; indicates a construction bug.
class VerificationError : public Error {
public:
    using Error::Error;
};

}  // namespace hierax
