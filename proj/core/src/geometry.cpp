#include "carmsim/geometry.hpp"

#include <cmath>
#include <random>

#include "carmsim/error.hpp"
#include "carmsim/rng.hpp"

namespace carmsim {

void ConeBeamGeometry::validate() const {
    if (!(sod_mm > 0.0 && sod_mm < sdd_mm) || !std::isfinite(sdd_mm)) {
        throw Error(ErrorKind::geometry, "cone-beam geometry requires 0 < sod < sdd");
    }
    if (!(detector_width_mm > 0.0 && detector_height_mm > 0.0) || cols <= 0 || rows <= 0) {
        throw Error(ErrorKind::geometry, "detector extent and resolution must be positive");
    }
}

Vec3 CArmPose::pixel_center(int col, int row) const noexcept {
    const double px = geometry.detector_width_mm / geometry.cols;
    const double py = geometry.detector_height_mm / geometry.rows;
    const double u = (col + 0.5) * px - geometry.detector_width_mm / 2.0;
    const double v = (row + 0.5) * py - geometry.detector_height_mm / 2.0;
    return Vec3(isocenter.x() + u, isocenter.y() + (geometry.sdd_mm - geometry.sod_mm), isocenter.z() - v);
}

void SamplerConfig::validate() const {
    if (!(si_band_fraction > 0.0 && si_band_fraction <= 1.0)) {
        throw Error(ErrorKind::config, "si_band_fraction must lie in (0, 1]");
    }
    if (!(lr_sigma_mm > 0.0) || !(ap_sigma_mm > 0.0)) {
        throw Error(ErrorKind::config, "sampler sigmas must be positive");
    }
}

SampleResult sample_isocenters(const Volume& volume, std::size_t n, const SamplerConfig& config,
                               const ConeBeamGeometry& geometry) {
    config.validate();
    geometry.validate();
    if (n == 0) throw Error(ErrorKind::input, "sample count must be >= 1");

    const Vec3 ext = volume.extent();
    const double height = ext.z();
    if (!(height > 0.0)) throw Error(ErrorKind::geometry, "degenerate anatomical height");
    const double margin = (1.0 - config.si_band_fraction) / 2.0 * height;

    auto rng = make_engine(config.seed, "isocenter");
    std::uniform_real_distribution<double> si(margin, height - margin);
    std::normal_distribution<double> lr(ext.x() / 2.0, config.lr_sigma_mm);
    std::normal_distribution<double> ap(ext.y() / 2.0, config.ap_sigma_mm);

    SampleResult result;
    result.poses.reserve(n);
    while (result.poses.size() < n) {
        const double x = lr(rng);
        const double y = ap(rng);
        const double z = si(rng);
        const Vec3 p(x, y, z);
        const bool ok = volume.contains(p);
        result.candidates.push_back({p, ok});
        if (ok) result.poses.push_back({p, geometry});
    }
    return result;
}

CArmPose apply_action(const CArmPose& pose, const MotionCommand& action, const Box3& region) {
    CArmPose next = pose;
    next.isocenter.x() += action.dx_mm();
    next.isocenter.z() += action.dy_mm();
    next.isocenter = next.isocenter.cwiseMax(region.min()).cwiseMin(region.max());
    return next;
}

}  // namespace carmsim
