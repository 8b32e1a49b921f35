#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexpos {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Transfer function or lumped model violates its invariants.
class InvalidModelError : public Error {
public:
    using Error::Error;
};

/// Non-finite value reached the integrator or a solver.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: bad keys, values, or violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Second-order fit failed; residual is the weighted relative residual norm.
class FitError : public Error {
public:
    FitError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace flexpos
