#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "carmsim/projector.hpp"

namespace carmsim {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    bool operator==(const GrayImage&) const = default;
};

/// v in [0,1] -> floor(255 v + 0.5).
std::uint8_t quantize(double value) noexcept;
GrayImage to_gray(const RadiographImage& image);

std::vector<std::uint8_t> encode_png(const GrayImage& image);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const RadiographImage& image);

/// Display values as little-endian float32, row-major, no header.
void write_raw_f32(const std::filesystem::path& path, const RadiographImage& image);

}  // namespace carmsim
