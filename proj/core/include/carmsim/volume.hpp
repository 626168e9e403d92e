#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace carmsim {

using Vec3 = Eigen::Vector3d;
using Box3 = Eigen::AlignedBox3d;

/// Effective linear attenuation of water near 60 keV, in 1/mm.
inline constexpr double kMuWater = 0.02;

/// Voxel grid of linear attenuation coefficients (1/mm).
///
/// Axes follow the LPS convention: x = LR (grows toward patient left),
/// y = AP (grows toward posterior), z = SI (grows toward superior). Voxel
/// (i, j, k) is centered at ((i + 0.5) sx, (j + 0.5) sy, (k + 0.5) sz), so the
/// physical extent is [0, dims * spacing] on each axis.
class Volume {
public:
    Volume(std::array<int, 3> dims, Vec3 spacing_mm, std::vector<float> mu);

    const std::array<int, 3>& dims() const noexcept { return dims_; }
    const Vec3& spacing() const noexcept { return spacing_; }
    Vec3 extent() const noexcept;
    Box3 bounds() const noexcept { return Box3(Vec3::Zero(), extent()); }
    bool contains(const Vec3& p) const noexcept;

    std::size_t voxel_count() const noexcept { return data_.size(); }
    const std::vector<float>& data() const noexcept { return data_; }

    /// x fastest, then y, then z.
    std::size_t linear_index(int i, int j, int k) const noexcept {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims_[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
    }
    float at(int i, int j, int k) const noexcept { return data_[linear_index(i, j, k)]; }

    /// Trilinear interpolation between voxel centers; voxels outside the grid
    /// read as zero (air).
    double sample(const Vec3& p) const noexcept;

    bool operator==(const Volume& other) const;

private:
    std::array<int, 3> dims_;
    Vec3 spacing_;
    std::vector<float> data_;
};

enum class ScalarEncoding { float32, float64, int16, uint16, uint8 };
enum class ValueUnits { attenuation, hounsfield };

/// Contents of a volume header document.
struct VolumeHeader {
    std::array<int, 3> dims{};
    Vec3 spacing_mm = Vec3::Ones();
    ScalarEncoding encoding = ScalarEncoding::float32;
    ValueUnits units = ValueUnits::attenuation;
    double mu_water = kMuWater;
    std::array<std::string, 3> axes{"LR", "AP", "SI"};
    std::string raw_file;  // payload path relative to the header

    std::size_t element_size() const noexcept;
};

/// HU -> attenuation: mu = mu_water * (1 + HU / 1000), clamped at zero.
double hounsfield_to_mu(double hu, double mu_water = kMuWater) noexcept;

VolumeHeader read_volume_header(const std::filesystem::path& header_path);

/// Loads a volume from a header and its raw little-endian payload. When
/// raw_path is empty, the header's raw_file (relative to the header) is used.
Volume load_volume(const std::filesystem::path& header_path, const std::filesystem::path& raw_path = {});

/// Writes `<stem>.json` and `<stem>.raw` (float32 attenuation) into dir and
/// returns the header path.
std::filesystem::path save_volume(const Volume& volume, const std::filesystem::path& dir, const std::string& stem);

}  // namespace carmsim
