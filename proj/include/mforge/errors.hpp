#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mforge {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised by the expression parser; carries 1-based source position.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int col,
               std::vector<std::string> expected = {})
        : Error(msg + " (line " + std::to_string(line) + ", col " +
                std::to_string(col) + ")"),
          line_(line), col_(col), expected_(std::move(expected)) {}

    int line() const { return line_; }
    int col() const { return col_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    int line_;
    int col_;
    std::vector<std::string> expected_;
};

// Raised during numeric evaluation.
class EvalError : public Error {
public:
    enum class Kind { Unbound, Singular, OutOfDomain };

    EvalError(Kind kind, const std::string& msg, std::string offending)
        : Error(msg), kind_(kind), offending_(std::move(offending)) {}

    Kind kind() const { return kind_; }
    // Rendered subexpression (or symbol name) that triggered the error.
    const std::string& offending() const { return offending_; }

private:
    Kind kind_;
    std::string offending_;
};

// A verification step could not be carried out (bad inputs, empty domain,
// unverified prerequisite, vanishing denominator, ...).
class VerifyError : public Error {
public:
    using Error::Error;
};

// Catalog construction failed its self-certification or was asked for an
// unsupported parameter branch.
class CatalogError : public Error {
public:
    using Error::Error;
};

// Bad CLI configuration (unknown keys, missing sections, unreadable file).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace mforge
