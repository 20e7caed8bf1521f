#ifndef TSEG_RADIOMICS_HPP
#define TSEG_RADIOMICS_HPP

#include <string>
#include <utility>
#include <vector>

#include "tseg/morphology.hpp"
#include "tseg/volume.hpp"

namespace tseg {

/// Ordered (name, value) pairs; names are namespaced as shape.<feature>
/// and <sequence>.firstorder.<feature>. Order is deterministic per task.
using FeatureVector = std::vector<std::pair<std::string, double>>;

struct DiscretizationSpec {
    double bin_width = 25.0;  // fixed-bin-width, origin at the in-mask minimum
};

constexpr int kShapeFeatureCount = 14;
constexpr int kFirstOrderFeatureCount = 19;

const std::vector<std::string>& shape_feature_names();
const std::vector<std::string>& firstorder_feature_names();

/// 14 shape features of a non-empty mask (callers pass largest_component
/// output). Axis lengths come from the population covariance of voxel-center
/// physical coordinates; surface area counts exposed faces.
FeatureVector shape_features(const Mask& mask);

/// 19 first-order intensity statistics over in-mask voxels.
FeatureVector firstorder_features(const Volume& image, const Mask& mask,
                                  const DiscretizationSpec& disc,
                                  const std::string& prefix = "firstorder");

struct RadiomicsConfig {
    std::vector<std::string> sequence_names;
    double isotropic_spacing = 1.0;
    DiscretizationSpec disc;
    Connectivity connectivity = Connectivity::Corners26;
};

/// Resample to the task spacing, take the largest WT component, then emit
/// shape features once plus first-order features per sequence.
FeatureVector extract_case_features(const std::vector<Volume>& sequences, const Mask& wt_mask,
                                    const RadiomicsConfig& config);

/// Canonical feature-name order for a task configuration.
std::vector<std::string> canonical_feature_names(const RadiomicsConfig& config);

namespace detail {
struct Diameters {
    double d3, slice_xy, column_yz, row_xz;
};
Diameters max_pairwise_diameters(const std::vector<Vec3>& points);
Diameters max_pairwise_diameters_serial(const std::vector<Vec3>& points);
}

}  // namespace tseg

#endif
