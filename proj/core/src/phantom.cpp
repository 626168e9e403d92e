#include "carmsim/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>

#include "carmsim/error.hpp"
#include "carmsim/rng.hpp"

namespace carmsim {
namespace {

struct Primitive {
    Box3 bbox;
    std::function<bool(const Vec3&)> inside;
    float mu;
};

Primitive sphere(const Vec3& c, double r, double mu) {
    return {Box3(c.array() - r, c.array() + r), [c, r](const Vec3& p) { return (p - c).squaredNorm() <= r * r; },
            static_cast<float>(mu)};
}

Primitive sphere_shell(const Vec3& c, double r_outer, double thickness, double mu) {
    const double r_inner = r_outer - thickness;
    return {Box3(c.array() - r_outer, c.array() + r_outer),
            [c, r_outer, r_inner](const Vec3& p) {
                const double d2 = (p - c).squaredNorm();
                return d2 <= r_outer * r_outer && d2 >= r_inner * r_inner;
            },
            static_cast<float>(mu)};
}

// Finite cylinder around segment a-b.
Primitive rod(const Vec3& a, const Vec3& b, double r, double mu) {
    Box3 box(a.cwiseMin(b).array() - r, a.cwiseMax(b).array() + r);
    const Vec3 axis = b - a;
    const double len2 = axis.squaredNorm();
    return {box,
            [a, axis, len2, r](const Vec3& p) {
                const double t = (p - a).dot(axis) / len2;
                if (t < 0.0 || t > 1.0) return false;
                return (p - (a + t * axis)).squaredNorm() <= r * r;
            },
            static_cast<float>(mu)};
}

Primitive ellipsoid(const Vec3& c, const Vec3& semi, double mu) {
    return {Box3(c - semi, c + semi),
            [c, semi](const Vec3& p) { return ((p - c).array() / semi.array()).square().sum() <= 1.0; },
            static_cast<float>(mu)};
}

// Elliptic cylinder along z.
Primitive trunk(const Vec3& c, double a, double b, double z0, double z1, double mu) {
    return {Box3(Vec3(c.x() - a, c.y() - b, z0), Vec3(c.x() + a, c.y() + b, z1)),
            [c, a, b](const Vec3& p) {
                const double dx = (p.x() - c.x()) / a, dy = (p.y() - c.y()) / b;
                return dx * dx + dy * dy <= 1.0;
            },
            static_cast<float>(mu)};
}

// Ellipsoidal shell cut into horizontal bands (ribs).
Primitive rib_cage(const Vec3& c, const Vec3& semi, double thickness, double z0, double z1, double pitch,
                   double band, double mu) {
    const Vec3 inner = semi.array() - thickness;
    return {Box3(Vec3(c.x() - semi.x(), c.y() - semi.y(), z0), Vec3(c.x() + semi.x(), c.y() + semi.y(), z1)),
            [c, semi, inner, z0, pitch, band](const Vec3& p) {
                const Vec3 d = p - c;
                const double outer = (d.array() / semi.array()).square().sum();
                const double in = (d.array() / inner.array()).square().sum();
                if (outer > 1.0 || in < 1.0) return false;
                return std::fmod(p.z() - z0, pitch) < band;
            },
            static_cast<float>(mu)};
}

Primitive slab(const Vec3& lo, const Vec3& hi, double mu) {
    Box3 box(lo, hi);
    return {box, [box](const Vec3& p) { return box.contains(p); }, static_cast<float>(mu)};
}

void paint(std::vector<float>& data, const std::array<int, 3>& dims, const Vec3& spacing, const Primitive& prim) {
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, static_cast<int>(std::floor(prim.bbox.min()[a] / spacing[a] - 0.5)));
        hi[a] = std::min(dims[a] - 1, static_cast<int>(std::ceil(prim.bbox.max()[a] / spacing[a] - 0.5)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
            for (int i = lo[0]; i <= hi[0]; ++i) {
                const Vec3 p((i + 0.5) * spacing.x(), (j + 0.5) * spacing.y(), (k + 0.5) * spacing.z());
                if (prim.inside(p)) {
                    data[static_cast<std::size_t>(i) +
                         static_cast<std::size_t>(dims[0]) *
                             (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k)] = prim.mu;
                }
            }
        }
    }
}

}  // namespace

void PhantomConfig::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (!(extent_mm[a] > 0.0) || !std::isfinite(extent_mm[a])) {
            throw Error(ErrorKind::config, "phantom extents must be positive");
        }
    }
    if (!(voxel_mm > 0.0)) throw Error(ErrorKind::config, "phantom voxel size must be positive");
    if (mu_soft < 0.0 || mu_lung < 0.0 || mu_bone < 0.0) {
        throw Error(ErrorKind::config, "attenuation coefficients must be non-negative");
    }
    if (!(humeral_separation_mm > 0.0) || humeral_separation_jitter_mm < 0.0 || landmark_jitter_mm < 0.0) {
        throw Error(ErrorKind::config, "landmark placement parameters out of range");
    }
    if (humeral_separation_mm / 2.0 + 80.0 > extent_mm.x() / 2.0) {
        throw Error(ErrorKind::config, "LR extent too narrow for the configured shoulder width");
    }
}

Phantom generate_phantom(std::uint64_t seed, const PhantomConfig& config) {
    config.validate();

    std::array<int, 3> dims{};
    for (int a = 0; a < 3; ++a) {
        dims[a] = std::max(2, static_cast<int>(std::lround(config.extent_mm[a] / config.voxel_mm)));
    }
    const Vec3 spacing = Vec3::Constant(config.voxel_mm);
    const Vec3 ext(dims[0] * spacing.x(), dims[1] * spacing.y(), dims[2] * spacing.z());
    const double x0 = ext.x() / 2.0, y0 = ext.y() / 2.0, H = ext.z();

    auto rng = make_engine(seed, "phantom");
    std::uniform_real_distribution<double> jitter(-config.landmark_jitter_mm, config.landmark_jitter_mm);
    std::uniform_real_distribution<double> sep_jitter(-config.humeral_separation_jitter_mm,
                                                      config.humeral_separation_jitter_mm);
    const double half_sep = (config.humeral_separation_mm + sep_jitter(rng)) / 2.0;
    auto jittered = [&](double x, double y, double z) {
        const double dx = jitter(rng);
        const double dy = jitter(rng);
        const double dz = jitter(rng);
        return Vec3(x + dx, y + dy, z + dz);
    };

    // Landmark centers; every structure below hangs off one of these.
    const Vec3 skull = jittered(x0, y0, 0.885 * H);
    const Vec3 t1 = jittered(x0, y0 + 50.0, 0.715 * H);
    const double head_z = 0.68 * H + jitter(rng);
    const Vec3 r_head(x0 - half_sep, y0 + 10.0, head_z);
    const Vec3 l_head(x0 + half_sep, y0 + 10.0, head_z);
    const Vec3 r_scap = jittered(x0 - 95.0, y0 + 80.0, 0.61 * H);
    const Vec3 l_scap = jittered(x0 + 95.0, y0 + 80.0, 0.61 * H);
    const Vec3 r_elbow = jittered(x0 - half_sep - 25.0, y0 + 10.0, 0.37 * H);
    const Vec3 l_elbow = jittered(x0 + half_sep + 25.0, y0 + 10.0, 0.37 * H);
    const Vec3 r_wrist = jittered(x0 - half_sep - 35.0, y0 - 10.0, 0.12 * H);
    const Vec3 l_wrist = jittered(x0 + half_sep + 35.0, y0 - 10.0, 0.12 * H);
    const Vec3 sternum = jittered(x0, y0 - 95.0, 0.58 * H);
    const Vec3 r_dome = jittered(x0 - 75.0, y0, 0.42 * H);
    const Vec3 l_dome = jittered(x0 + 75.0, y0, 0.40 * H);
    const Vec3 l1 = jittered(x0, y0 + 50.0, 0.36 * H);

    std::vector<Primitive> prims;
    const double soft = config.mu_soft, bone = config.mu_bone;

    // Soft tissue envelope.
    prims.push_back(trunk(Vec3(x0, y0, 0), 165.0, 110.0, 0.02 * H, 0.72 * H, soft));
    prims.push_back(rod(Vec3(x0, y0 + 10.0, 0.70 * H), Vec3(x0, y0 + 10.0, skull.z() - 60.0), 55.0, soft));
    prims.push_back(sphere(skull, 92.0, soft));
    for (const auto& [head, elbow, wrist] : {std::tuple{r_head, r_elbow, r_wrist}, std::tuple{l_head, l_elbow, l_wrist}}) {
        prims.push_back(sphere(head, 45.0, soft));
        prims.push_back(rod(head, elbow, 42.0, soft));
        prims.push_back(rod(elbow, wrist, 35.0, soft));
        prims.push_back(sphere(wrist, 30.0, soft));
    }

    // Lungs: their lowest points are the hemidiaphragm domes.
    for (const Vec3& dome : {r_dome, l_dome}) {
        const double c = 0.57 * H;
        const double semi_z = c - dome.z();
        prims.push_back(ellipsoid(Vec3(dome.x(), dome.y(), c), Vec3(62.0, 78.0, semi_z), config.mu_lung));
    }

    // Skeleton.
    prims.push_back(sphere_shell(skull, 85.0, 7.0, bone));
    prims.push_back(rod(Vec3(x0, t1.y(), 0.04 * H), Vec3(x0, t1.y(), t1.z() + 25.0), 18.0, bone));
    prims.push_back(sphere(t1, 22.0, bone));
    prims.push_back(sphere(l1, 24.0, bone));
    prims.push_back(rib_cage(Vec3(x0, y0, 0.56 * H), Vec3(150.0, 100.0, 0.18 * H), 7.0, 0.42 * H, 0.70 * H, 36.0,
                             11.0, bone));
    prims.push_back(slab(sternum - Vec3(18.0, 6.0, 0.08 * H), sternum + Vec3(18.0, 6.0, 0.08 * H), bone));
    for (const auto& [head, scap] : {std::pair{r_head, r_scap}, std::pair{l_head, l_scap}}) {
        prims.push_back(rod(Vec3(x0 + (head.x() < x0 ? -15.0 : 15.0), y0 - 60.0, 0.69 * H),
                            Vec3(head.x(), head.y() - 20.0, head.z() + 25.0), 8.0, bone));
        prims.push_back(slab(scap - Vec3(35.0, 5.0, 0.055 * H), scap + Vec3(35.0, 5.0, 0.055 * H), bone));
    }
    for (const auto& [head, elbow, wrist] : {std::tuple{r_head, r_elbow, r_wrist}, std::tuple{l_head, l_elbow, l_wrist}}) {
        prims.push_back(sphere(head, 25.0, bone));
        prims.push_back(rod(head, elbow, 12.0, bone));
        prims.push_back(sphere(elbow, 20.0, bone));
        prims.push_back(rod(elbow, wrist, 10.0, bone));
        prims.push_back(sphere(wrist, 15.0, bone));
    }

    std::vector<float> data(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0.0f);
    for (const auto& prim : prims) paint(data, dims, spacing, prim);

    const auto& names = LandmarkSchema::default_schema();
    const std::array<Vec3, kLandmarkCount> positions{skull,   r_head,  l_head,  r_scap,  l_scap, r_elbow, l_elbow,
                                                     r_wrist, l_wrist, t1,      sternum, r_dome, l_dome,  l1};
    std::vector<Landmark> landmarks;
    for (int idx = 1; idx <= kLandmarkCount; ++idx) {
        const auto& n = names.at(idx);
        Vec3 p = positions[static_cast<std::size_t>(idx - 1)];
        p = p.cwiseMax(Vec3::Zero()).cwiseMin(ext);
        landmarks.push_back({idx, n.canonical_name, n.variants, p});
    }

    Phantom phantom{Volume(dims, spacing, std::move(data)), LandmarkSet(std::move(landmarks))};
    phantom.landmarks.validate_within(phantom.volume.bounds());
    return phantom;
}

}  // namespace carmsim
