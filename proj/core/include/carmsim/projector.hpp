#pragma once

#include <vector>

#include "carmsim/geometry.hpp"
#include "carmsim/volume.hpp"

namespace carmsim {

struct RenderOptions {
    /// Display window W: pixel value = min(line integral / W, 1).
    double window = 5.0;
    /// Ray-march step as a fraction of the smallest voxel spacing.
    double step_fraction = 0.5;
    /// Worker threads; 0 = hardware concurrency. Output does not depend on it.
    unsigned threads = 0;
};

/// Simulated radiograph. `line_integrals` holds the raw attenuation path
/// integrals, `pixels` the normalized display values in [0, 1]; both are
/// row-major with row 0 at the superior edge.
struct RadiographImage {
    int cols = 0;
    int rows = 0;
    std::vector<double> line_integrals;
    std::vector<double> pixels;
    CArmPose pose;

    double transmission(int col, int row) const;
};

/// Line integral of attenuation from `from` to `to` by fixed-step midpoint
/// sampling of the trilinear field. Sample positions are anchored at `from`
/// (t = (k + 0.5) * step along the ray), restricted to the grid support.
double line_integral(const Volume& volume, const Vec3& from, const Vec3& to, double step_mm);

/// Casts one ray per detector pixel from the point source through the pixel
/// center. Throws Error{geometry} when the isocenter is outside the volume.
RadiographImage render(const Volume& volume, const CArmPose& pose, const RenderOptions& options = {});

}  // namespace carmsim
