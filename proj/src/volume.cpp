#include "tseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tseg {

const char* dtype_name(DType t) {
    switch (t) {
        case DType::UInt8: return "uint8";
        case DType::Int16: return "int16";
        case DType::Float32: return "float32";
    }
    return "?";
}

void Volume::validate() const {
    geom.validate();
    if (data.size() != geom.voxel_count())
        throw std::invalid_argument("volume: data length does not match dims");
}

bool alphabet_contains(const LabelAlphabet& a, int id) {
    return std::any_of(a.begin(), a.end(), [&](const LabelEntry& e) { return e.id == id; });
}

std::string label_name(const LabelAlphabet& a, int id) {
    for (const auto& e : a)
        if (e.id == id) return e.name;
    throw std::invalid_argument("unknown label id " + std::to_string(id));
}

void LabelVolume::validate() const {
    geom.validate();
    if (data.size() != geom.voxel_count())
        throw std::invalid_argument("label volume: data length does not match dims");
    for (std::int32_t v : data) {
        if (v == 0) continue;
        if (v < 0 || !alphabet_contains(alphabet, v))
            throw std::invalid_argument("label volume: voxel value " + std::to_string(v) +
                                        " not in alphabet");
    }
}

std::size_t Mask::count() const {
    return static_cast<std::size_t>(
        std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

void ProbabilityStack::validate() const {
    geom.validate();
    if (channels.empty()) throw std::invalid_argument("probability stack: no channels");
    if (channel_names.size() != channels.size())
        throw std::invalid_argument("probability stack: channel name count mismatch");
    for (const auto& c : channels)
        if (c.size() != geom.voxel_count())
            throw std::invalid_argument("probability stack: channel size mismatch");
    if (normalized) {
        const std::size_t n = geom.voxel_count();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (const auto& c : channels) s += c[i];
            if (s < 1.0 - 1e-3 || s > 1.0 + 1e-3)
                throw std::invalid_argument("probability stack: voxel channel sum outside [1-1e-3, 1+1e-3]");
        }
    }
}

Volume label_to_volume(const LabelVolume& lv, DType dtype) {
    Volume v(lv.geom, dtype);
    for (std::size_t i = 0; i < lv.data.size(); ++i) v.data[i] = static_cast<float>(lv.data[i]);
    return v;
}

LabelVolume volume_to_label(const Volume& v, const LabelAlphabet& alphabet) {
    LabelVolume lv(v.geom, alphabet);
    for (std::size_t i = 0; i < v.data.size(); ++i) {
        float f = v.data[i];
        auto r = static_cast<std::int32_t>(std::lround(f));
        if (std::abs(f - r) > 1e-6f)
            throw std::invalid_argument("non-integer voxel value in label volume");
        lv.data[i] = r;
    }
    lv.validate();
    return lv;
}

}  // namespace tseg
