#include "carmsim/error.hpp"

namespace carmsim {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return "config";
        case ErrorKind::header: return "header";
        case ErrorKind::payload: return "payload";
        case ErrorKind::validation: return "validation";
        case ErrorKind::geometry: return "geometry";
        case ErrorKind::parse: return "parse";
        case ErrorKind::alignment: return "alignment";
        case ErrorKind::input: return "input";
        case ErrorKind::io: return "io";
        case ErrorKind::transport: return "transport";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

}  // namespace carmsim
