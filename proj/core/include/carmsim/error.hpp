#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace carmsim {

enum class ErrorKind {
    config,      // inconsistent configuration (e.g. split leakage, bad extents)
    header,      // volume header is malformed or out of range
    payload,     // raw payload does not match its header
    validation,  // a domain invariant failed (landmarks, poses)
    geometry,    // pose/geometry precondition violated
    parse,       // text could not be parsed
    alignment,   // predictions do not line up with a manifest
    input,       // invalid argument to an operation
    io,          // filesystem failure
    transport,   // external agent channel failure
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception type for every recoverable failure in the library.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Non-throwing parse failure: byte offset into the input and a reason.
struct ParseError {
    std::size_t offset = 0;
    std::string reason;

    bool operator==(const ParseError&) const = default;
};

}  // namespace carmsim
