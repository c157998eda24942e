#pragma once

#include <stdexcept>
#include <string>

namespace sdgs {

/// Base of every error the library raises. `code()` is a short stable
/// identifier used by the CLI as a machine-parseable prefix.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error("invalid-input", what) {}
};

class DegenerateProjection : public Error {
public:
    explicit DegenerateProjection(const std::string& what)
        : Error("degenerate-projection", what) {}
};

class NumericalDivergence : public Error {
public:
    explicit NumericalDivergence(const std::string& what)
        : Error("numerical-divergence", what) {}
};

/// Malformed input file. Carries the 1-based line and column of the problem.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error("parse", what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class CorruptionError : public Error {
public:
    explicit CorruptionError(const std::string& what) : Error("corrupt", what) {}
};

class UnsupportedVersion : public Error {
public:
    explicit UnsupportedVersion(const std::string& what)
        : Error("unsupported-version", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io", what) {}
};

} // namespace sdgs
