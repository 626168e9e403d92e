#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace carmsim {

enum class XDirection { left, center, right };
enum class YDirection { up, center, down };
enum class Magnitude { none, small, moderate, large };

/// Displacement per magnitude step, in mm.
inline constexpr std::array<double, 4> kMagnitudeMm{0.0, 30.0, 60.0, 90.0};

constexpr double magnitude_mm(Magnitude m) noexcept { return kMagnitudeMm[static_cast<std::size_t>(m)]; }

/// Discrete 2D motion command (direction and magnitude per image axis).
struct MotionCommand {
    XDirection x_dir = XDirection::center;
    Magnitude x_mag = Magnitude::none;
    YDirection y_dir = YDirection::center;
    Magnitude y_mag = Magnitude::none;

    static constexpr MotionCommand zero() noexcept { return {}; }

    /// Signed displacement along image x (RIGHT positive) and y (UP positive).
    double dx_mm() const noexcept;
    double dy_mm() const noexcept;

    /// CENTER <=> NONE holds on both axes.
    bool is_canonical() const noexcept;

    bool operator==(const MotionCommand&) const = default;
};

std::string_view to_string(XDirection d) noexcept;
std::string_view to_string(YDirection d) noexcept;
std::string_view to_string(Magnitude m) noexcept;

/// Case-insensitive enum token lookup.
std::optional<XDirection> parse_x_direction(std::string_view token) noexcept;
std::optional<YDirection> parse_y_direction(std::string_view token) noexcept;
std::optional<Magnitude> parse_magnitude(std::string_view token) noexcept;

}  // namespace carmsim
