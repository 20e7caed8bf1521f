#ifndef TSEG_VOLUME_HPP
#define TSEG_VOLUME_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tseg/geometry.hpp"

namespace tseg {

enum class DType { UInt8, Int16, Float32 };

const char* dtype_name(DType t);

/// Scalar 3D grid with physical geometry. Voxel data is held as float32;
/// the dtype tag records the on-disk representation (uint8 and int16 values
/// are exactly representable in float32, so round-trips are lossless).
struct Volume {
    Geometry geom;
    DType dtype = DType::Float32;
    std::vector<float> data;

    Volume() = default;
    Volume(Geometry g, DType t, float fill = 0.0f)
        : geom(std::move(g)), dtype(t), data(geom.voxel_count(), fill) {
        geom.validate();
    }

    float& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data[geom.linear(x, y, z)]; }
    float at(std::int64_t x, std::int64_t y, std::int64_t z) const { return data[geom.linear(x, y, z)]; }

    void validate() const;
};

struct LabelEntry {
    int id;
    std::string name;
};
using LabelAlphabet = std::vector<LabelEntry>;

bool alphabet_contains(const LabelAlphabet& a, int id);
std::string label_name(const LabelAlphabet& a, int id);

/// Integer-valued grid over a task's label alphabet; 0 is background.
struct LabelVolume {
    Geometry geom;
    std::vector<std::int32_t> data;
    LabelAlphabet alphabet;

    LabelVolume() = default;
    LabelVolume(Geometry g, LabelAlphabet a)
        : geom(std::move(g)), data(geom.voxel_count(), 0), alphabet(std::move(a)) {
        geom.validate();
    }

    std::int32_t& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data[geom.linear(x, y, z)]; }
    std::int32_t at(std::int64_t x, std::int64_t y, std::int64_t z) const { return data[geom.linear(x, y, z)]; }

    /// Every voxel must be 0 or a member of the alphabet.
    void validate() const;
};

/// Binary mask over a grid; 0/1 voxels.
struct Mask {
    Geometry geom;
    std::vector<std::uint8_t> data;

    Mask() = default;
    explicit Mask(Geometry g) : geom(std::move(g)), data(geom.voxel_count(), 0) {}

    std::uint8_t& at(std::int64_t x, std::int64_t y, std::int64_t z) { return data[geom.linear(x, y, z)]; }
    std::uint8_t at(std::int64_t x, std::int64_t y, std::int64_t z) const { return data[geom.linear(x, y, z)]; }

    std::size_t count() const;
    bool empty_mask() const { return count() == 0; }
};

/// C aligned scalar channels, one per class (channel 0 = background).
struct ProbabilityStack {
    Geometry geom;
    std::vector<std::string> channel_names;
    std::vector<std::vector<float>> channels;
    bool normalized = false;

    std::size_t channel_count() const { return channels.size(); }
    void validate() const;
};

Volume label_to_volume(const LabelVolume& lv, DType dtype = DType::Int16);
LabelVolume volume_to_label(const Volume& v, const LabelAlphabet& alphabet);

}  // namespace tseg

#endif
