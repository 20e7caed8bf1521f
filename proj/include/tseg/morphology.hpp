#ifndef TSEG_MORPHOLOGY_HPP
#define TSEG_MORPHOLOGY_HPP

#include <cstdint>
#include <vector>

#include "tseg/volume.hpp"

namespace tseg {

enum class Connectivity : int { Faces6 = 6, Edges18 = 18, Corners26 = 26 };

/// Neighborhood offsets for a connectivity (excluding the center voxel).
const std::vector<Index3>& neighborhood_offsets(Connectivity c);

struct ComponentMap {
    Geometry geom;
    std::vector<std::int32_t> labels;  // 0 background, components 1..K
    std::int32_t component_count = 0;
    std::vector<std::size_t> voxel_counts;  // index 0 unused
    Connectivity connectivity = Connectivity::Corners26;

    double volume_mm3(std::int32_t id) const { return voxel_counts[id] * geom.voxel_volume(); }
    Mask component_mask(std::int32_t id) const;
};

/// Union-find component labeling; ids assigned in order of each component's
/// first voxel in linear-index order.
ComponentMap connected_components(const Mask& mask, Connectivity c);

/// Mask restricted to the largest component; ties go to the smallest id.
/// Throws on an empty mask.
Mask largest_component(const Mask& mask, Connectivity c);

/// `radius` iterations of dilation with the structuring element implied by
/// the connectivity.
Mask binary_dilate(const Mask& mask, int radius, Connectivity c);

/// Erase connected components of `label` smaller than min_volume mm^3.
LabelVolume remove_components_below(const LabelVolume& labels, int label, double min_volume,
                                    Connectivity c);

Mask label_mask(const LabelVolume& labels, int label);

namespace detail {
Mask binary_dilate_serial(const Mask& mask, int radius, Connectivity c);
}

}  // namespace tseg

#endif
