#include "tseg/morphology.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace tseg {
namespace {

std::vector<Index3> make_offsets(Connectivity c) {
    std::vector<Index3> offs;
    const int level = static_cast<int>(c);
    for (std::int64_t dz = -1; dz <= 1; ++dz)
        for (std::int64_t dy = -1; dy <= 1; ++dy)
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                int manhattan = std::abs(static_cast<int>(dx)) + std::abs(static_cast<int>(dy)) +
                                std::abs(static_cast<int>(dz));
                if (manhattan == 0) continue;
                if (level == 6 && manhattan > 1) continue;
                if (level == 18 && manhattan > 2) continue;
                offs.push_back({dx, dy, dz});
            }
    return offs;
}

struct UnionFind {
    std::vector<std::int32_t> parent;
    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

const std::vector<Index3>& neighborhood_offsets(Connectivity c) {
    static const std::vector<Index3> o6 = make_offsets(Connectivity::Faces6);
    static const std::vector<Index3> o18 = make_offsets(Connectivity::Edges18);
    static const std::vector<Index3> o26 = make_offsets(Connectivity::Corners26);
    switch (c) {
        case Connectivity::Faces6: return o6;
        case Connectivity::Edges18: return o18;
        default: return o26;
    }
}

Mask ComponentMap::component_mask(std::int32_t id) const {
    Mask m(geom);
    for (std::size_t i = 0; i < labels.size(); ++i) m.data[i] = labels[i] == id ? 1 : 0;
    return m;
}

ComponentMap connected_components(const Mask& mask, Connectivity c) {
    const Geometry& g = mask.geom;
    ComponentMap cm;
    cm.geom = g;
    cm.connectivity = c;
    cm.labels.assign(mask.data.size(), 0);

    const auto& offs = neighborhood_offsets(c);
    // Causal half of the neighborhood: offsets preceding the center in linear order.
    std::vector<Index3> prev;
    for (const auto& o : offs)
        if (o[2] < 0 || (o[2] == 0 && (o[1] < 0 || (o[1] == 0 && o[0] < 0)))) prev.push_back(o);

    UnionFind uf;
    uf.add();  // provisional label 0 = background
    std::vector<std::int32_t> prov(mask.data.size(), 0);

    for (std::int64_t z = 0; z < g.dims[2]; ++z)
        for (std::int64_t y = 0; y < g.dims[1]; ++y)
            for (std::int64_t x = 0; x < g.dims[0]; ++x) {
                std::size_t i = g.linear(x, y, z);
                if (!mask.data[i]) continue;
                std::int32_t lab = 0;
                for (const auto& o : prev) {
                    std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (!g.in_bounds(nx, ny, nz)) continue;
                    std::int32_t nl = prov[g.linear(nx, ny, nz)];
                    if (!nl) continue;
                    if (!lab)
                        lab = nl;
                    else
                        uf.unite(lab, nl);
                }
                if (!lab) lab = uf.add();
                prov[i] = lab;
            }

    // Compress to contiguous ids in first-voxel linear order.
    std::vector<std::int32_t> remap(uf.parent.size(), 0);
    std::int32_t next = 0;
    for (std::size_t i = 0; i < prov.size(); ++i) {
        if (!prov[i]) continue;
        std::int32_t root = uf.find(prov[i]);
        if (!remap[root]) remap[root] = ++next;
        cm.labels[i] = remap[root];
    }
    cm.component_count = next;
    cm.voxel_counts.assign(static_cast<std::size_t>(next) + 1, 0);
    for (std::int32_t l : cm.labels)
        if (l) ++cm.voxel_counts[l];
    return cm;
}

Mask largest_component(const Mask& mask, Connectivity c) {
    ComponentMap cm = connected_components(mask, c);
    if (cm.component_count == 0) throw std::runtime_error("largest_component: no foreground");
    std::int32_t best = 1;
    for (std::int32_t id = 2; id <= cm.component_count; ++id)
        if (cm.voxel_counts[id] > cm.voxel_counts[best]) best = id;
    return cm.component_mask(best);
}

namespace {

template <bool Parallel>
Mask dilate_impl(const Mask& mask, int radius, Connectivity c) {
    if (radius < 0) throw std::invalid_argument("binary_dilate: negative radius");
    const Geometry& g = mask.geom;
    const auto& offs = neighborhood_offsets(c);
    Mask cur = mask;
    Mask nxt(g);
    for (int it = 0; it < radius; ++it) {
#pragma omp parallel for schedule(static) if (Parallel)
        for (std::int64_t z = 0; z < g.dims[2]; ++z)
            for (std::int64_t y = 0; y < g.dims[1]; ++y)
                for (std::int64_t x = 0; x < g.dims[0]; ++x) {
                    std::size_t i = g.linear(x, y, z);
                    std::uint8_t v = cur.data[i];
                    if (!v) {
                        for (const auto& o : offs) {
                            std::int64_t nx = x + o[0], ny = y + o[1], nz = z + o[2];
                            if (g.in_bounds(nx, ny, nz) && cur.data[g.linear(nx, ny, nz)]) {
                                v = 1;
                                break;
                            }
                        }
                    }
                    nxt.data[i] = v;
                }
        std::swap(cur, nxt);
    }
    return cur;
}

}  // namespace

Mask binary_dilate(const Mask& mask, int radius, Connectivity c) {
    return dilate_impl<true>(mask, radius, c);
}

Mask detail::binary_dilate_serial(const Mask& mask, int radius, Connectivity c) {
    return dilate_impl<false>(mask, radius, c);
}

Mask label_mask(const LabelVolume& labels, int label) {
    Mask m(labels.geom);
    for (std::size_t i = 0; i < labels.data.size(); ++i) m.data[i] = labels.data[i] == label ? 1 : 0;
    return m;
}

LabelVolume remove_components_below(const LabelVolume& labels, int label, double min_volume,
                                    Connectivity c) {
    if (!alphabet_contains(labels.alphabet, label))
        throw std::invalid_argument("remove_components_below: label not in alphabet");
    LabelVolume out = labels;
    ComponentMap cm = connected_components(label_mask(labels, label), c);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        std::int32_t id = cm.labels[i];
        if (id && cm.volume_mm3(id) < min_volume) out.data[i] = 0;
    }
    return out;
}

}  // namespace tseg
