#ifndef TSEG_GEOMETRY_HPP
#define TSEG_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace tseg {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;  // row-major, columns are axis directions

inline Mat3 identity3() {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
}

/// Physical placement of a 3D voxel grid. Linear voxel index is
/// x + nx*(y + ny*z), x fastest.
struct Geometry {
    Index3 dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    Mat3 direction = identity3();

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

    std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return static_cast<std::size_t>(x) + dims[0] * (static_cast<std::size_t>(y) + dims[1] * z);
    }
    bool in_bounds(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }

    /// Voxel index -> physical point (mm).
    Vec3 to_physical(double x, double y, double z) const {
        Vec3 p;
        const double c[3] = {x * spacing[0], y * spacing[1], z * spacing[2]};
        for (int r = 0; r < 3; ++r)
            p[r] = origin[r] + direction[r][0] * c[0] + direction[r][1] * c[1] + direction[r][2] * c[2];
        return p;
    }

    /// Physical point -> continuous voxel index. Direction is orthonormal, so
    /// the inverse of the rotation is its transpose.
    Vec3 to_continuous_index(const Vec3& p) const {
        const double d[3] = {p[0] - origin[0], p[1] - origin[1], p[2] - origin[2]};
        Vec3 idx;
        for (int c = 0; c < 3; ++c) {
            double v = direction[0][c] * d[0] + direction[1][c] * d[1] + direction[2][c] * d[2];
            idx[c] = v / spacing[c];
        }
        return idx;
    }

    void validate() const {
        if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
            throw std::invalid_argument("geometry: non-positive dims");
        for (double s : spacing)
            if (!(s > 0.0)) throw std::invalid_argument("geometry: non-positive spacing");
        // direction must be orthonormal within 1e-6 per entry
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double dot = 0;
                for (int r = 0; r < 3; ++r) dot += direction[r][i] * direction[r][j];
                double want = (i == j) ? 1.0 : 0.0;
                if (std::abs(dot - want) > 1e-6)
                    throw std::invalid_argument("geometry: direction matrix not orthonormal");
            }
        }
    }
};

inline bool same_dims(const Geometry& a, const Geometry& b) { return a.dims == b.dims; }

inline bool geometry_close(const Geometry& a, const Geometry& b, double tol = 1e-6) {
    if (a.dims != b.dims) return false;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
        if (std::abs(a.origin[i] - b.origin[i]) > tol) return false;
        for (int j = 0; j < 3; ++j)
            if (std::abs(a.direction[i][j] - b.direction[i][j]) > tol) return false;
    }
    return true;
}

}  // namespace tseg

#endif
