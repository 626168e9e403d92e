#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "carmsim/error.hpp"
#include "carmsim/geometry.hpp"
#include "carmsim/landmarks.hpp"
#include "carmsim/projector.hpp"

namespace carmsim {

/// Landmarks ordered nearest-first. `distances_mm` is parallel to `indices`
/// when the ranking was computed and empty when it was parsed from text.
struct RankedLandmarks {
    std::vector<int> indices;
    std::vector<double> distances_mm;

    std::size_t size() const noexcept { return indices.size(); }
};

/// The k landmarks closest (3D Euclidean) to `point`, ascending; ties go to
/// the lower landmark index. Requires 1 <= k <= 14.
RankedLandmarks nearest_k(const Vec3& point, const LandmarkSet& set, int k);

/// `[i1: name1, i2: name2, ...]` with each name drawn uniformly from that
/// landmark's variants. The draw for slot s uses derive_seed(variant_seed,
/// "variant", s).
std::string format_label(const RankedLandmarks& ranked, const LandmarkSet& set, std::uint64_t variant_seed);

using LabelParseResult = std::variant<RankedLandmarks, ParseError>;

/// Inverse of format_label: any registered variant, case-insensitive.
/// `expected_count` = 0 accepts any non-zero arity.
LabelParseResult parse_label(std::string_view text, const LandmarkSchema& schema, std::size_t expected_count = 3);

enum class Split { train, test };
std::string_view to_string(Split split) noexcept;

struct DatasetRecord {
    std::string record_id;  // "<volume_id>/<sample_id>"
    std::string volume_id;
    int sample_id = 0;
    Split split = Split::train;
    std::string image_path;  // relative to the manifest directory
    Vec3 isocenter = Vec3::Zero();
    RankedLandmarks ranked;
    std::vector<std::string> ranked_names;  // names used in label_text, per slot
    std::string label_text;
    std::string prompt_template_id;
};

/// A volume scheduled for the dataset; `load` is called once, when the
/// volume is processed.
struct DatasetSource {
    std::string volume_id;
    Split split = Split::train;
    std::function<std::pair<Volume, LandmarkSet>()> load;
};

struct DatasetConfig {
    int per_volume = 1024;
    std::uint64_t seed = 0;
    SamplerConfig sampler;
    ConeBeamGeometry geometry;
    RenderOptions render;
    int ranked_count = 3;
    std::string prompt_template_id = "nearest3.v1";
    bool write_images = true;
};

struct SplitCounts {
    std::size_t train = 0;
    std::size_t test = 0;
};

/// Record count per split for a plan: |volumes| x per_volume. Throws
/// Error{config} when a volume id appears in both splits.
SplitCounts dataset_counts(const std::vector<std::string>& train_volumes, const std::vector<std::string>& test_volumes,
                           int per_volume);

struct DatasetSummary {
    SplitCounts counts;
    std::filesystem::path manifest;
};

/// Renders `per_volume` samples for every source, writes PNGs under
/// out_dir/images/<volume_id>/ and one manifest line per record to
/// out_dir/manifest.jsonl, ordered by (source order, sample_id).
DatasetSummary build_dataset(const std::vector<DatasetSource>& sources, const DatasetConfig& config,
                             const std::filesystem::path& out_dir);

std::string manifest_line(const DatasetRecord& record);
DatasetRecord parse_manifest_line(std::string_view line);
std::vector<DatasetRecord> load_manifest(const std::filesystem::path& path);

}  // namespace carmsim
