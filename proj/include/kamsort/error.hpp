#pragma once

#include <stdexcept>
#include <string>

namespace kamsort {

/// Bad input: malformed files, schema violations, out-of-range arguments.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be parsed. Carries the 1-based line (or record) number.
class FormatError : public InputError {
public:
    FormatError(std::string path, std::size_t line, const std::string& what)
        : InputError(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

/// Frames fed out of order to a tracker.
class SequenceError : public InputError {
public:
    using InputError::InputError;
};

/// Singular innovation covariance or similar breakdown in the filter.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kamsort
