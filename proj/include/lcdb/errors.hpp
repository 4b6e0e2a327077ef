#pragma once

#include <stdexcept>
#include <string>

namespace lcdb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

/// Design matrix without full column rank.
class SingularDesign : public Error {
public:
    using Error::Error;
};

/// A sample that must vary is (numerically) constant.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

/// Conditioning variable perfectly collinear with a tested variable.
class DegenerateConditioning : public Error {
public:
    using Error::Error;
};

/// A context class is too small for the invariance test.
class InsufficientContext : public Error {
public:
    using Error::Error;
};

class NoEligiblePredictor : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data (files, tables, graphs).
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace lcdb
