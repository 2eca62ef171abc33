#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flopwatt {

// Base class for everything this library throws.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input text could not be parsed. Carries the 1-based line number when known.
class parse_error : public error {
public:
    explicit parse_error(const std::string& msg, std::size_t line = 0)
        : error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Input parsed but violates a data invariant (duplicate timestamps,
// negative power, mismatched epochs, ...).
class data_error : public error {
public:
    using error::error;
};

// A requested interval is not covered by the available samples.
class coverage_error : public error {
public:
    using error::error;
};

// An argument is outside the mathematical domain of an operation.
class domain_error : public error {
public:
    using error::error;
};

} // namespace flopwatt
