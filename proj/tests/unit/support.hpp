#pragma once

#include <filesystem>
#include <string>

#include "carmsim/phantom.hpp"

namespace carmsim::fixture {

/// Shared seed-1 phantom; generating one per test is wasteful.
inline const Phantom& phantom() {
    static const Phantom p = generate_phantom(1);
    return p;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("carmsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Uniform volume of one attenuation value.
inline Volume uniform_volume(std::array<int, 3> dims, double spacing, float mu) {
    return Volume(dims, Vec3::Constant(spacing),
                  std::vector<float>(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], mu));
}

}  // namespace carmsim::fixture
