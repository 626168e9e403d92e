#include "carmsim/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "carmsim/error.hpp"

namespace carmsim {
namespace {

// Flattened view of the volume for the inner loop.
struct Grid {
    const float* data;
    int nx, ny, nz;
    double inv_sx, inv_sy, inv_sz;
    Vec3 lo, hi;  // support of the trilinear field (half a voxel past the extent)

    explicit Grid(const Volume& v)
        : data(v.data().data()),
          nx(v.dims()[0]),
          ny(v.dims()[1]),
          nz(v.dims()[2]),
          inv_sx(1.0 / v.spacing().x()),
          inv_sy(1.0 / v.spacing().y()),
          inv_sz(1.0 / v.spacing().z()),
          lo(-0.5 * v.spacing()),
          hi(v.extent() + 0.5 * v.spacing()) {}

    float voxel(int i, int j, int k) const noexcept {
        if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return 0.0f;
        return data[static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(nx) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k)];
    }

    double sample(double x, double y, double z) const noexcept {
        const double u = x * inv_sx - 0.5, v = y * inv_sy - 0.5, w = z * inv_sz - 0.5;
        const double fu = std::floor(u), fv = std::floor(v), fw = std::floor(w);
        const int i = static_cast<int>(fu), j = static_cast<int>(fv), k = static_cast<int>(fw);
        const double tx = u - fu, ty = v - fv, tz = w - fw;
        double c000, c100, c010, c110, c001, c101, c011, c111;
        if (i >= 0 && j >= 0 && k >= 0 && i + 1 < nx && j + 1 < ny && k + 1 < nz) {
            const std::size_t sy = static_cast<std::size_t>(nx);
            const std::size_t sz = sy * static_cast<std::size_t>(ny);
            const float* p = data + static_cast<std::size_t>(i) + sy * j + sz * k;
            c000 = p[0];
            c100 = p[1];
            c010 = p[sy];
            c110 = p[sy + 1];
            c001 = p[sz];
            c101 = p[sz + 1];
            c011 = p[sz + sy];
            c111 = p[sz + sy + 1];
        } else {
            c000 = voxel(i, j, k);
            c100 = voxel(i + 1, j, k);
            c010 = voxel(i, j + 1, k);
            c110 = voxel(i + 1, j + 1, k);
            c001 = voxel(i, j, k + 1);
            c101 = voxel(i + 1, j, k + 1);
            c011 = voxel(i, j + 1, k + 1);
            c111 = voxel(i + 1, j + 1, k + 1);
        }
        const double c00 = c000 + (c100 - c000) * tx;
        const double c10 = c010 + (c110 - c010) * tx;
        const double c01 = c001 + (c101 - c001) * tx;
        const double c11 = c011 + (c111 - c011) * tx;
        const double c0 = c00 + (c10 - c00) * ty;
        const double c1 = c01 + (c11 - c01) * ty;
        return c0 + (c1 - c0) * tz;
    }

    // Parametric interval of the ray origin + t * dir (|dir| = 1) inside the support.
    bool clip(const Vec3& origin, const Vec3& dir, double t_max, double& t0, double& t1) const noexcept {
        t0 = 0.0;
        t1 = t_max;
        for (int a = 0; a < 3; ++a) {
            if (dir[a] == 0.0) {
                if (origin[a] < lo[a] || origin[a] > hi[a]) return false;
                continue;
            }
            double ta = (lo[a] - origin[a]) / dir[a];
            double tb = (hi[a] - origin[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
        return t0 < t1;
    }

    double integrate(const Vec3& from, const Vec3& to, double step) const noexcept {
        const Vec3 delta = to - from;
        const double length = delta.norm();
        if (!(length > 0.0)) return 0.0;
        const Vec3 dir = delta / length;
        double t0, t1;
        if (!clip(from, dir, length, t0, t1)) return 0.0;
        const auto k_first = static_cast<long>(std::ceil(t0 / step - 0.5));
        const auto k_last = static_cast<long>(std::floor(t1 / step - 0.5));
        double sum = 0.0;
        for (long k = k_first; k <= k_last; ++k) {
            const double t = (static_cast<double>(k) + 0.5) * step;
            sum += sample(from.x() + t * dir.x(), from.y() + t * dir.y(), from.z() + t * dir.z());
        }
        return sum * step;
    }
};

}  // namespace

double RadiographImage::transmission(int col, int row) const {
    return std::exp(-line_integrals.at(static_cast<std::size_t>(row) * cols + col));
}

double line_integral(const Volume& volume, const Vec3& from, const Vec3& to, double step_mm) {
    if (!(step_mm > 0.0)) throw Error(ErrorKind::input, "ray step must be positive");
    return Grid(volume).integrate(from, to, step_mm);
}

RadiographImage render(const Volume& volume, const CArmPose& pose, const RenderOptions& options) {
    pose.geometry.validate();
    if (!volume.contains(pose.isocenter)) {
        throw Error(ErrorKind::geometry, "isocenter lies outside the volume extent");
    }
    if (!(options.window > 0.0) || !(options.step_fraction > 0.0)) {
        throw Error(ErrorKind::input, "render window and step fraction must be positive");
    }

    const Grid grid(volume);
    const double step = options.step_fraction * volume.spacing().minCoeff();
    const int cols = pose.geometry.cols, rows = pose.geometry.rows;

    RadiographImage image;
    image.cols = cols;
    image.rows = rows;
    image.pose = pose;
    image.line_integrals.assign(static_cast<std::size_t>(cols) * rows, 0.0);
    image.pixels.assign(image.line_integrals.size(), 0.0);

    const Vec3 source = pose.source();
    auto render_rows = [&](int first, int stride) {
        for (int r = first; r < rows; r += stride) {
            for (int c = 0; c < cols; ++c) {
                const double integral = grid.integrate(source, pose.pixel_center(c, r), step);
                const auto idx = static_cast<std::size_t>(r) * cols + c;
                image.line_integrals[idx] = integral;
                image.pixels[idx] = std::min(integral / options.window, 1.0);
            }
        }
    };

    unsigned workers = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(rows));
    if (workers <= 1) {
        render_rows(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(render_rows, static_cast<int>(w), static_cast<int>(workers));
        }
    }
    return image;
}

}  // namespace carmsim
