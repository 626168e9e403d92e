#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "carmsim/volume.hpp"

namespace carmsim {

inline constexpr int kLandmarkCount = 14;

/// One row of the landmark name table.
struct LandmarkName {
    int index = 0;
    std::string canonical_name;
    std::vector<std::string> variants;  // includes canonical_name
    std::string slug;                   // CLI spelling, e.g. "right_scapula"

    bool operator==(const LandmarkName&) const = default;
};

/// Index <-> name lookup over the 14-landmark variant table.
///
/// The default table is a documented assumption: only Skull (1), the elbows
/// (6, 7), wrists (8, 9), T1 (10) and the right hemidiaphragm (12) have
/// fixed indices in the source annotations; the remaining slots are filled
/// with upper-body skeletal structures that the procedural phantom models.
/// Names are matched case-insensitively with collapsed whitespace.
class LandmarkSchema {
public:
    explicit LandmarkSchema(std::vector<LandmarkName> names);

    static const LandmarkSchema& default_schema();

    const std::vector<LandmarkName>& names() const noexcept { return names_; }
    const LandmarkName& at(int index) const;

    /// Any registered variant -> landmark index.
    std::optional<int> resolve(std::string_view name) const;
    /// Index, slug or any variant name -> landmark index.
    std::optional<int> resolve_token(std::string_view token) const;

private:
    std::vector<LandmarkName> names_;
};

struct Landmark {
    int index = 0;
    std::string canonical_name;
    std::vector<std::string> variants;
    Vec3 position = Vec3::Zero();  // mm, volume frame

    bool operator==(const Landmark&) const = default;
};

/// Exactly 14 landmarks with indices 1..14, stored in index order.
class LandmarkSet {
public:
    /// Validates cardinality, index range and uniqueness, and variant lists.
    /// Throws Error{validation}.
    explicit LandmarkSet(std::vector<Landmark> landmarks);

    const std::vector<Landmark>& landmarks() const noexcept { return landmarks_; }
    const Landmark& at(int index) const;

    /// Checks positions lie inside `bounds` and that left/right pairs sit on
    /// opposite sides of the LR midline (right = smaller x). Throws.
    void validate_within(const Box3& bounds) const;

    LandmarkSchema schema() const;

    bool operator==(const LandmarkSet&) const = default;

private:
    std::vector<Landmark> landmarks_;
};

/// Lower-case, single-spaced, trimmed form used for name matching.
std::string normalize_name(std::string_view name);

void save_landmarks(const LandmarkSet& set, const std::filesystem::path& path,
                    const std::optional<Box3>& bounds = std::nullopt);

/// Reads a landmark document. Positions are checked against `bounds` when
/// given, otherwise against the document's own extent_mm if present.
LandmarkSet load_landmarks(const std::filesystem::path& path, const std::optional<Box3>& bounds = std::nullopt);

}  // namespace carmsim
