#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carmsim/landmarks.hpp"

namespace carmsim {

struct VectorResult {
    std::string id;
    bool passed = false;
    std::string detail;
};

/// Protocol vectors, one JSON object per line:
///   {"id", "input", "expect": "ok", "canonical", "landmark_index"}
///   {"id", "input", "expect": "error", "reason"}
/// Without `outputs` the local parser is checked. With `outputs` (id ->
/// canonical text, or nullopt for a rejection) another implementation's
/// results are checked against the same expectations.
std::vector<VectorResult> check_protocol_vectors(
    const std::filesystem::path& path, const LandmarkSchema& schema,
    const std::optional<std::map<std::string, std::optional<std::string>>>& outputs = std::nullopt);

/// Reads {"id", "canonical": string|null} lines.
std::map<std::string, std::optional<std::string>> load_protocol_outputs(const std::filesystem::path& path);

/// Frame vectors: {"id", "line", "expect": "ok", "type", "canonical"} or
/// {"id", "line", "expect": "error"}. "canonical" is the re-encoded frame.
std::vector<VectorResult> check_frame_vectors(const std::filesystem::path& path);

}  // namespace carmsim
