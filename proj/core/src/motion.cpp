#include "carmsim/motion.hpp"

#include <cctype>
#include <string>

namespace carmsim {
namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

double MotionCommand::dx_mm() const noexcept {
    const double m = magnitude_mm(x_mag);
    switch (x_dir) {
        case XDirection::left: return -m;
        case XDirection::right: return m;
        case XDirection::center: return 0.0;
    }
    return 0.0;
}

double MotionCommand::dy_mm() const noexcept {
    const double m = magnitude_mm(y_mag);
    switch (y_dir) {
        case YDirection::up: return m;
        case YDirection::down: return -m;
        case YDirection::center: return 0.0;
    }
    return 0.0;
}

bool MotionCommand::is_canonical() const noexcept {
    return ((x_dir == XDirection::center) == (x_mag == Magnitude::none)) &&
           ((y_dir == YDirection::center) == (y_mag == Magnitude::none));
}

std::string_view to_string(XDirection d) noexcept {
    switch (d) {
        case XDirection::left: return "LEFT";
        case XDirection::center: return "CENTER";
        case XDirection::right: return "RIGHT";
    }
    return "CENTER";
}

std::string_view to_string(YDirection d) noexcept {
    switch (d) {
        case YDirection::up: return "UP";
        case YDirection::center: return "CENTER";
        case YDirection::down: return "DOWN";
    }
    return "CENTER";
}

std::string_view to_string(Magnitude m) noexcept {
    switch (m) {
        case Magnitude::none: return "NONE";
        case Magnitude::small: return "SMALL";
        case Magnitude::moderate: return "MODERATE";
        case Magnitude::large: return "LARGE";
    }
    return "NONE";
}

std::optional<XDirection> parse_x_direction(std::string_view token) noexcept {
    const auto t = upper(token);
    if (t == "LEFT") return XDirection::left;
    if (t == "CENTER") return XDirection::center;
    if (t == "RIGHT") return XDirection::right;
    return std::nullopt;
}

std::optional<YDirection> parse_y_direction(std::string_view token) noexcept {
    const auto t = upper(token);
    if (t == "UP") return YDirection::up;
    if (t == "CENTER") return YDirection::center;
    if (t == "DOWN") return YDirection::down;
    return std::nullopt;
}

std::optional<Magnitude> parse_magnitude(std::string_view token) noexcept {
    const auto t = upper(token);
    if (t == "NONE") return Magnitude::none;
    if (t == "SMALL") return Magnitude::small;
    if (t == "MODERATE") return Magnitude::moderate;
    if (t == "LARGE") return Magnitude::large;
    return std::nullopt;
}

}  // namespace carmsim
