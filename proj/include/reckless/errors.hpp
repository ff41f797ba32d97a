#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reckless {

/// Invalid hyperparameters, ranges, or command configuration. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Any problem with input data. CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t line)
        : DataError(what + " (line " + std::to_string(line) + ")"), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A value outside its admissible domain, e.g. a score not on the scale.
class DomainError : public DataError {
public:
    using DataError::DataError;
};

class DuplicateError : public DataError {
public:
    using DataError::DataError;
};

/// Training produced a non-finite parameter or cost. CLI exit code 3.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace reckless
