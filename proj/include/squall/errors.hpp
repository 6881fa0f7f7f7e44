#pragma once

#include <stdexcept>
#include <string>

namespace squall {

/// Base class for everything this tool throws on purpose.
class SquallError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Lexical, syntactic or semantic problems in model/property sources.
/// Carries a 1-based line/column when the failure has a location.
class ParseError : public SquallError {
  public:
    ParseError(std::string const& message, std::size_t line = 0, std::size_t column = 0)
        : SquallError(format(message, line, column)), line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    static std::string format(std::string const& message, std::size_t line, std::size_t column) {
        if (line == 0) return message;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
    }
    std::size_t line_;
    std::size_t column_;
};

/// Bad arguments to an in-memory operation (dimension mismatches and the like).
class InputError : public SquallError {
  public:
    using SquallError::SquallError;
};

/// Model construction failures (bounds violations, bad distributions, deadlocks).
class BuildError : public SquallError {
  public:
    using SquallError::SquallError;
};

/// Expression evaluation failures (division by zero, type mismatches).
class EvalError : public SquallError {
  public:
    using SquallError::SquallError;
};

/// Numeric solver failures (non-convergence, singular pivots).
class SolverError : public SquallError {
  public:
    using SquallError::SquallError;
};

/// Property/model mismatches discovered while checking.
class CheckError : public SquallError {
  public:
    using SquallError::SquallError;
};

}  // namespace squall
