#pragma once

#include <cstdint>

#include "carmsim/landmarks.hpp"
#include "carmsim/volume.hpp"

namespace carmsim {

/// Parameters of the procedural upper-body phantom.
struct PhantomConfig {
    Vec3 extent_mm{500.0, 300.0, 900.0};  // LR, AP, SI
    double voxel_mm = 4.0;

    double mu_soft = kMuWater;
    double mu_lung = 0.004;
    double mu_bone = 0.05;

    /// Mean LR distance between the humeral heads and the half-width of the
    /// uniform jitter applied to it.
    double humeral_separation_mm = 285.0;
    double humeral_separation_jitter_mm = 20.0;
    /// Half-width of the per-axis uniform jitter applied to every landmark.
    double landmark_jitter_mm = 8.0;

    /// Throws Error{config} on non-positive extents or spacing.
    void validate() const;
};

struct Phantom {
    Volume volume;
    LandmarkSet landmarks;
};

/// Deterministic for a given (seed, config).
///
/// Anatomy is laid out in fractions of the SI extent H: skull center at
/// 0.885 H, T1 at 0.715 H, humeral heads at 0.68 H, wrists at 0.12 H. Bony
/// primitives (skull shell, vertebral column, banded rib shells, sternum,
/// clavicles, scapulae, humeri/forearms with elbow and wrist joints) are
/// painted over soft tissue and air-filled lungs whose domes are the
/// hemidiaphragm landmarks.
Phantom generate_phantom(std::uint64_t seed, const PhantomConfig& config = {});

}  // namespace carmsim
