#pragma once

#include <stdexcept>
#include <string>

namespace viewgraph {

// Error classes map onto CLI exit codes: config/argument -> 2, io -> 3, numeric -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public IoError {
public:
    using IoError::IoError;
};

/// Declared and actual element counts disagree.
class ShapeError : public FormatError {
public:
    using FormatError::FormatError;
};

class UnsupportedFeature : public FormatError {
public:
    explicit UnsupportedFeature(const std::string& field)
        : FormatError("unsupported feature: " + field), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace viewgraph
