#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgram {

/// Invalid argument to an operation (bad range, width mismatch, value out of range).
class argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation applied to a state that does not satisfy its precondition
/// (e.g. an indexed load into a non-zero value register).
class state_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The requested allocation exceeds the configured qubit budget.
/// Carries the byte figure the allocation would have needed.
class resource_error : public std::runtime_error {
public:
    resource_error(const std::string& msg, std::uint64_t required_bytes)
        : std::runtime_error(msg), required_bytes_(required_bytes)
    {
    }

    std::uint64_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::uint64_t required_bytes_;
};

/// Malformed table stream. Carries the byte offset at which decoding failed.
class format_error : public std::runtime_error {
public:
    format_error(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Invariant violation inside the simulator itself (e.g. measuring a zero state).
class internal_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qgram
