#include "tseg/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tseg {
namespace {

Geometry output_geometry(const Geometry& in, double target) {
    if (!(target > 0)) throw std::invalid_argument("resample: non-positive target spacing");
    Geometry out = in;
    for (int i = 0; i < 3; ++i) {
        out.dims[i] = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(in.dims[i] * in.spacing[i] / target)));
        out.spacing[i] = target;
    }
    return out;
}

inline double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

float sample(const Volume& v, double qx, double qy, double qz, Interp mode) {
    const auto& d = v.geom.dims;
    qx = clampd(qx, 0.0, static_cast<double>(d[0] - 1));
    qy = clampd(qy, 0.0, static_cast<double>(d[1] - 1));
    qz = clampd(qz, 0.0, static_cast<double>(d[2] - 1));
    if (mode == Interp::Nearest) {
        auto x = static_cast<std::int64_t>(std::floor(qx + 0.5));
        auto y = static_cast<std::int64_t>(std::floor(qy + 0.5));
        auto z = static_cast<std::int64_t>(std::floor(qz + 0.5));
        return v.at(std::min(x, d[0] - 1), std::min(y, d[1] - 1), std::min(z, d[2] - 1));
    }
    auto x0 = static_cast<std::int64_t>(std::floor(qx));
    auto y0 = static_cast<std::int64_t>(std::floor(qy));
    auto z0 = static_cast<std::int64_t>(std::floor(qz));
    auto x1 = std::min(x0 + 1, d[0] - 1);
    auto y1 = std::min(y0 + 1, d[1] - 1);
    auto z1 = std::min(z0 + 1, d[2] - 1);
    double fx = qx - x0, fy = qy - y0, fz = qz - z0;
    double c00 = v.at(x0, y0, z0) * (1 - fx) + v.at(x1, y0, z0) * fx;
    double c10 = v.at(x0, y1, z0) * (1 - fx) + v.at(x1, y1, z0) * fx;
    double c01 = v.at(x0, y0, z1) * (1 - fx) + v.at(x1, y0, z1) * fx;
    double c11 = v.at(x0, y1, z1) * (1 - fx) + v.at(x1, y1, z1) * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return static_cast<float>(c0 * (1 - fz) + c1 * fz);
}

template <bool Parallel>
Volume resample_impl(const Volume& v, double target, Interp mode) {
    v.validate();
    Geometry og = output_geometry(v.geom, target);
    Volume out(og, mode == Interp::Nearest ? v.dtype : DType::Float32);
    if (mode == Interp::Trilinear && v.dtype != DType::Float32) out.dtype = DType::Float32;
    if (mode == Interp::Nearest) out.dtype = v.dtype;

    const double rx = target / v.geom.spacing[0];
    const double ry = target / v.geom.spacing[1];
    const double rz = target / v.geom.spacing[2];

#pragma omp parallel for schedule(static) if (Parallel)
    for (std::int64_t z = 0; z < og.dims[2]; ++z) {
        for (std::int64_t y = 0; y < og.dims[1]; ++y) {
            for (std::int64_t x = 0; x < og.dims[0]; ++x) {
                out.data[og.linear(x, y, z)] = sample(v, x * rx, y * ry, z * rz, mode);
            }
        }
    }
    return out;
}

}  // namespace

Volume resample_isotropic(const Volume& v, double target, Interp mode) {
    return resample_impl<true>(v, target, mode);
}

Volume detail::resample_isotropic_serial(const Volume& v, double target, Interp mode) {
    return resample_impl<false>(v, target, mode);
}

LabelVolume resample_isotropic(const LabelVolume& lv, double target) {
    Volume v = label_to_volume(lv, DType::Int16);
    Volume r = resample_isotropic(v, target, Interp::Nearest);
    return volume_to_label(r, lv.alphabet);
}

Mask resample_isotropic(const Mask& m, double target) {
    Volume v;
    v.geom = m.geom;
    v.dtype = DType::UInt8;
    v.data.assign(m.data.begin(), m.data.end());
    Volume r = resample_isotropic(v, target, Interp::Nearest);
    Mask out;
    out.geom = r.geom;
    out.data.resize(r.data.size());
    for (std::size_t i = 0; i < r.data.size(); ++i) out.data[i] = r.data[i] != 0 ? 1 : 0;
    return out;
}

}  // namespace tseg
