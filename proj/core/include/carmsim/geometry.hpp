#pragma once

#include <cstdint>
#include <vector>

#include "carmsim/motion.hpp"
#include "carmsim/volume.hpp"

namespace carmsim {

/// Fixed AP cone-beam geometry: the source sits sod_mm anterior (-y) of the
/// isocenter, the detector plane sdd_mm - sod_mm posterior (+y). Detector
/// columns run toward +x (image right = patient left), rows run toward -z
/// (row 0 is the superior edge).
struct ConeBeamGeometry {
    double sod_mm = 750.0;
    double sdd_mm = 1200.0;
    double detector_width_mm = 300.0;
    double detector_height_mm = 300.0;
    int cols = 256;
    int rows = 256;

    /// Throws Error{geometry} unless 0 < sod < sdd and the detector is non-empty.
    void validate() const;
    double magnification() const noexcept { return sdd_mm / sod_mm; }

    bool operator==(const ConeBeamGeometry&) const = default;
};

struct CArmPose {
    Vec3 isocenter = Vec3::Zero();
    ConeBeamGeometry geometry;

    Vec3 source() const noexcept { return isocenter - Vec3(0.0, geometry.sod_mm, 0.0); }
    /// Center of detector pixel (col, row).
    Vec3 pixel_center(int col, int row) const noexcept;

    bool operator==(const CArmPose&) const = default;
};

struct SamplerConfig {
    double si_band_fraction = 0.70;
    double lr_sigma_mm = 285.0;
    double ap_sigma_mm = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct IsocenterCandidate {
    Vec3 position;
    bool accepted = false;
};

struct SampleResult {
    std::vector<CArmPose> poses;
    /// Every draw in order, including rejected ones (pre-rejection statistics).
    std::vector<IsocenterCandidate> candidates;
};

/// SI uniform over the centered band of the SI extent; LR and AP Gaussian
/// around the volume center; candidates outside the extent are redrawn as a
/// whole. Deterministic in config.seed.
SampleResult sample_isocenters(const Volume& volume, std::size_t n, const SamplerConfig& config,
                               const ConeBeamGeometry& geometry = {});

/// Moves the isocenter by the command's signed magnitudes (RIGHT = +x,
/// UP = +z), leaves AP untouched and clamps into `region`.
CArmPose apply_action(const CArmPose& pose, const MotionCommand& action, const Box3& region);

}  // namespace carmsim
