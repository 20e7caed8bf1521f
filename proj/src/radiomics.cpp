#include "tseg/radiomics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tseg/resample.hpp"

namespace tseg {

const std::vector<std::string>& shape_feature_names() {
    static const std::vector<std::string> names = {
        "voxel_volume",       "surface_area",          "surface_volume_ratio",
        "sphericity",         "max_3d_diameter",       "max_2d_diameter_slice",
        "max_2d_diameter_column", "max_2d_diameter_row", "major_axis_length",
        "minor_axis_length",  "least_axis_length",     "elongation",
        "flatness",           "compactness"};
    return names;
}

const std::vector<std::string>& firstorder_feature_names() {
    static const std::vector<std::string> names = {
        "energy",        "total_energy", "entropy",  "minimum",
        "p10",           "p90",          "maximum",  "mean",
        "median",        "interquartile_range", "range", "mean_absolute_deviation",
        "robust_mad",    "rms",          "skewness", "kurtosis",
        "variance",      "standard_deviation",  "uniformity"};
    return names;
}

namespace {

template <bool Parallel>
detail::Diameters diameters_impl(const std::vector<Vec3>& pts) {
    const auto n = static_cast<std::int64_t>(pts.size());
    double d3 = 0, dxy = 0, dyz = 0, dxz = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(max : d3, dxy, dyz, dxz) if (Parallel)
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            double dx = pts[i][0] - pts[j][0];
            double dy = pts[i][1] - pts[j][1];
            double dz = pts[i][2] - pts[j][2];
            double xx = dx * dx, yy = dy * dy, zz = dz * dz;
            d3 = std::max(d3, xx + yy + zz);
            dxy = std::max(dxy, xx + yy);
            dyz = std::max(dyz, yy + zz);
            dxz = std::max(dxz, xx + zz);
        }
    }
    return {std::sqrt(d3), std::sqrt(dxy), std::sqrt(dyz), std::sqrt(dxz)};
}

std::vector<Vec3> mask_points(const Mask& mask) {
    const Geometry& g = mask.geom;
    std::vector<Vec3> pts;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x)
                if (mask.data[g.linear(x, y, z)])
                    pts.push_back({x * g.spacing[0], y * g.spacing[1], z * g.spacing[2]});
    return pts;
}

std::vector<double> mask_values(const Volume& image, const Mask& mask) {
    std::vector<double> v;
    for (std::size_t i = 0; i < mask.data.size(); ++i)
        if (mask.data[i]) v.push_back(image.data[i]);
    return v;
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    double pos = p / 100.0 * (sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double f = pos - lo;
    return sorted[lo] * (1.0 - f) + sorted[hi] * f;
}

}  // namespace

detail::Diameters detail::max_pairwise_diameters(const std::vector<Vec3>& pts) {
    return diameters_impl<true>(pts);
}
detail::Diameters detail::max_pairwise_diameters_serial(const std::vector<Vec3>& pts) {
    return diameters_impl<false>(pts);
}

FeatureVector shape_features(const Mask& mask) {
    const Geometry& g = mask.geom;
    std::vector<Vec3> pts = mask_points(mask);
    if (pts.empty()) throw std::invalid_argument("shape_features: empty mask");
    const double n = static_cast<double>(pts.size());
    const double voxvol = g.voxel_volume();
    const double volume = n * voxvol;

    // Exposed-face surface area: a face counts when its 6-neighbor is
    // background or outside the grid.
    const double face_area[3] = {g.spacing[1] * g.spacing[2], g.spacing[0] * g.spacing[2],
                                 g.spacing[0] * g.spacing[1]};
    double area = 0;
    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x) {
                if (!mask.data[g.linear(x, y, z)]) continue;
                const std::int64_t nb[6][3] = {{x - 1, y, z}, {x + 1, y, z}, {x, y - 1, z},
                                               {x, y + 1, z}, {x, y, z - 1}, {x, y, z + 1}};
                for (int f = 0; f < 6; ++f) {
                    if (!g.in_bounds(nb[f][0], nb[f][1], nb[f][2]) ||
                        !mask.data[g.linear(nb[f][0], nb[f][1], nb[f][2])])
                        area += face_area[f / 2];
                }
            }

    detail::Diameters dia = detail::max_pairwise_diameters(pts);

    // Population covariance of physical voxel centers.
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : pts) mean += Eigen::Vector3d(p[0], p[1], p[2]);
    mean /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : pts) {
        Eigen::Vector3d d = Eigen::Vector3d(p[0], p[1], p[2]) - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    double l3 = std::max(0.0, es.eigenvalues()[0]);
    double l2 = std::max(0.0, es.eigenvalues()[1]);
    double l1 = std::max(0.0, es.eigenvalues()[2]);
    double major = 4.0 * std::sqrt(l1);
    double minor = 4.0 * std::sqrt(l2);
    double least = 4.0 * std::sqrt(l3);
    // Degenerate (single-voxel) masks: axis ratios defined as 1.
    double elongation = l1 > 0 ? std::sqrt(l2 / l1) : 1.0;
    double flatness = l1 > 0 ? std::sqrt(l3 / l1) : 1.0;

    double sphericity = std::cbrt(36.0 * M_PI * volume * volume) / area;
    double compactness = volume / (std::sqrt(M_PI) * std::pow(area, 1.5));

    FeatureVector fv;
    const double vals[kShapeFeatureCount] = {
        volume,      area,       area / volume, sphericity, dia.d3,     dia.slice_xy,
        dia.column_yz, dia.row_xz, major,       minor,      least,      elongation,
        flatness,    compactness};
    const auto& names = shape_feature_names();
    for (int i = 0; i < kShapeFeatureCount; ++i) fv.emplace_back("shape." + names[i], vals[i]);
    return fv;
}

FeatureVector firstorder_features(const Volume& image, const Mask& mask,
                                  const DiscretizationSpec& disc, const std::string& prefix) {
    if (!same_dims(image.geom, mask.geom))
        throw std::invalid_argument("firstorder_features: geometry mismatch");
    if (!(disc.bin_width > 0)) throw std::invalid_argument("firstorder_features: bin_width <= 0");
    std::vector<double> v = mask_values(image, mask);
    if (v.empty()) throw std::invalid_argument("firstorder_features: empty mask");
    const double n = static_cast<double>(v.size());
    const double voxvol = image.geom.voxel_volume();

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    double minimum = sorted.front(), maximum = sorted.back();
    double p10 = percentile_sorted(sorted, 10.0);
    double p25 = percentile_sorted(sorted, 25.0);
    double median = percentile_sorted(sorted, 50.0);
    double p75 = percentile_sorted(sorted, 75.0);
    double p90 = percentile_sorted(sorted, 90.0);

    double sum = 0, energy = 0;
    for (double x : v) {
        sum += x;
        energy += x * x;
    }
    double mean = sum / n;
    double m2 = 0, m3 = 0, m4 = 0, mad = 0;
    for (double x : v) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += std::abs(d);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    mad /= n;
    double skewness = m2 > 0 ? m3 / std::pow(m2, 1.5) : 0.0;
    double kurtosis = m2 > 0 ? m4 / (m2 * m2) : 0.0;

    double rsum = 0;
    std::size_t rcount = 0;
    for (double x : v)
        if (x >= p10 && x <= p90) {
            rsum += x;
            ++rcount;
        }
    double rmean = rcount ? rsum / rcount : 0.0;
    double rmad = 0;
    for (double x : v)
        if (x >= p10 && x <= p90) rmad += std::abs(x - rmean);
    if (rcount) rmad /= rcount;

    // Fixed-bin-width histogram with bin origin at the in-mask minimum.
    std::map<std::int64_t, std::size_t> hist;
    for (double x : v) ++hist[static_cast<std::int64_t>(std::floor((x - minimum) / disc.bin_width))];
    double entropy = 0, uniformity = 0;
    for (const auto& [bin, count] : hist) {
        (void)bin;
        double p = count / n;
        entropy -= p * std::log2(p);
        uniformity += p * p;
    }

    FeatureVector fv;
    const double vals[kFirstOrderFeatureCount] = {
        energy,  energy * voxvol, entropy,    minimum,   p10,
        p90,     maximum,         mean,       median,    p75 - p25,
        maximum - minimum, mad,   rmad,       std::sqrt(energy / n), skewness,
        kurtosis, m2,             std::sqrt(m2), uniformity};
    const auto& names = firstorder_feature_names();
    for (int i = 0; i < kFirstOrderFeatureCount; ++i)
        fv.emplace_back(prefix + "." + names[i], vals[i]);
    return fv;
}

std::vector<std::string> canonical_feature_names(const RadiomicsConfig& config) {
    std::vector<std::string> names;
    for (const auto& n : shape_feature_names()) names.push_back("shape." + n);
    for (const auto& seq : config.sequence_names)
        for (const auto& n : firstorder_feature_names())
            names.push_back(seq + ".firstorder." + n);
    return names;
}

FeatureVector extract_case_features(const std::vector<Volume>& sequences, const Mask& wt_mask,
                                    const RadiomicsConfig& config) {
    if (sequences.size() != config.sequence_names.size())
        throw std::invalid_argument("extract_case_features: sequence count mismatch");
    for (const auto& s : sequences)
        if (!same_dims(s.geom, wt_mask.geom))
            throw std::invalid_argument("extract_case_features: sequence/mask geometry mismatch");
    if (wt_mask.empty_mask()) throw std::invalid_argument("extract_case_features: empty WT mask");

    Mask rmask = resample_isotropic(wt_mask, config.isotropic_spacing);
    if (rmask.empty_mask())
        throw std::invalid_argument("extract_case_features: WT mask empty after resampling");
    Mask wt = largest_component(rmask, config.connectivity);

    FeatureVector fv = shape_features(wt);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
        Volume r = resample_isotropic(sequences[i], config.isotropic_spacing, Interp::Trilinear);
        FeatureVector fo =
            firstorder_features(r, wt, config.disc, config.sequence_names[i] + ".firstorder");
        fv.insert(fv.end(), fo.begin(), fo.end());
    }
    for (const auto& [name, value] : fv)
        if (!std::isfinite(value))
            throw std::runtime_error("extract_case_features: non-finite feature " + name);
    return fv;
}

}  // namespace tseg
