#include "tseg/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace tseg {

EnsembleWeights::EnsembleWeights(std::vector<std::pair<std::string, double>> raw)
    : entries(std::move(raw)) {
    double sum = 0;
    for (const auto& [name, w] : entries) {
        if (w < 0) throw std::invalid_argument("ensemble weight for " + name + " is negative");
        sum += w;
    }
    if (!(sum > 0)) throw std::invalid_argument("ensemble weights sum to zero");
    for (auto& [name, w] : entries) w /= sum;
}

namespace {

template <bool Parallel>
ProbabilityStack fuse_impl(const std::vector<ProbabilityStack>& stacks,
                           const EnsembleWeights& weights) {
    if (stacks.empty()) throw std::invalid_argument("fuse: no stacks");
    if (stacks.size() != weights.size())
        throw std::invalid_argument("fuse: stack/weight count mismatch");
    const ProbabilityStack& first = stacks[0];
    for (const auto& s : stacks) {
        if (!geometry_close(s.geom, first.geom)) throw std::invalid_argument("fuse: geometry mismatch");
        if (s.channel_names != first.channel_names)
            throw std::invalid_argument("fuse: channel name mismatch");
    }

    ProbabilityStack out;
    out.geom = first.geom;
    out.channel_names = first.channel_names;
    out.normalized = true;
    for (const auto& s : stacks) out.normalized = out.normalized && s.normalized;

    const std::size_t n = first.geom.voxel_count();
    const std::size_t nc = first.channel_count();
    out.channels.assign(nc, std::vector<float>(n));
    for (std::size_t c = 0; c < nc; ++c) {
        auto& dst = out.channels[c];
#pragma omp parallel for schedule(static) if (Parallel)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
            double acc = 0;
            for (std::size_t m = 0; m < stacks.size(); ++m)
                acc += weights.entries[m].second * stacks[m].channels[c][i];
            dst[i] = static_cast<float>(acc);
        }
    }
    return out;
}

}  // namespace

ProbabilityStack fuse(const std::vector<ProbabilityStack>& stacks, const EnsembleWeights& weights) {
    return fuse_impl<true>(stacks, weights);
}

ProbabilityStack detail::fuse_serial(const std::vector<ProbabilityStack>& stacks,
                                     const EnsembleWeights& weights) {
    return fuse_impl<false>(stacks, weights);
}

LabelVolume argmax_labels(const ProbabilityStack& stack, const LabelAlphabet& alphabet) {
    if (stack.channel_count() != alphabet.size() + 1)
        throw std::invalid_argument("argmax_labels: channel count must be |alphabet| + 1");
    LabelVolume lv(stack.geom, alphabet);
    const std::size_t n = stack.geom.voxel_count();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        float bv = stack.channels[0][i];
        for (std::size_t c = 1; c < stack.channel_count(); ++c) {
            if (stack.channels[c][i] > bv) {
                bv = stack.channels[c][i];
                best = c;
            }
        }
        lv.data[i] = best == 0 ? 0 : alphabet[best - 1].id;
    }
    return lv;
}

EnsembleWeights estimate_weights(const std::vector<std::pair<std::string, double>>& scores,
                                 double exclusion_floor) {
    std::vector<std::pair<std::string, double>> raw;
    for (const auto& [name, s] : scores) {
        if (s < 0 || s > 1)
            throw std::invalid_argument("estimate_weights: score for " + name + " outside [0,1]");
        raw.emplace_back(name, s < exclusion_floor ? 0.0 : s);
    }
    return EnsembleWeights(std::move(raw));  // throws when every score is zero
}

}  // namespace tseg
