#pragma once

#include <stdexcept>
#include <string>

namespace luenn {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments. Maps to CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation requested on the wrong PSF modality.
class ModalityMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Value outside its permitted range (depth outside z_range, filter rate, ...).
class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A metric whose denominator is empty (JI with no entries, RMSE with no TP).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// Depth of a seed cannot be recovered (the weighted complex sum vanished).
class UndefinedDepth : public Error {
public:
    using Error::Error;
};

/// Malformed file content. Carries the 1-based line (text formats) or byte
/// offset (binary formats) where parsing stopped.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& source, std::size_t location, const std::string& reason)
        : ValidationError(source + ":" + std::to_string(location) + ": " + reason),
          location_(location), reason_(reason) {}

    std::size_t location() const noexcept { return location_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t location_;
    std::string reason_;
};

/// File could not be opened, read or written. Maps to CLI exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace luenn
