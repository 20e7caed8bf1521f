#ifndef TSEG_FUSION_HPP
#define TSEG_FUSION_HPP

#include <string>
#include <vector>

#include "tseg/volume.hpp"

namespace tseg {

/// Ordered (model, weight) pairs; the constructor normalizes to sum 1.
struct EnsembleWeights {
    std::vector<std::pair<std::string, double>> entries;

    EnsembleWeights() = default;
    explicit EnsembleWeights(std::vector<std::pair<std::string, double>> raw);

    std::size_t size() const { return entries.size(); }
};

/// Per-voxel, per-channel convex combination; summation in ascending model
/// index so results are bit-reproducible.
ProbabilityStack fuse(const std::vector<ProbabilityStack>& stacks, const EnsembleWeights& weights);

/// Per voxel, the label of the maximal channel; ties go to the lowest
/// channel index (channel 0 = background).
LabelVolume argmax_labels(const ProbabilityStack& stack, const LabelAlphabet& alphabet);

/// Weights proportional to per-model cross-validated scores; scores below
/// the exclusion floor get weight 0 before normalization.
EnsembleWeights estimate_weights(const std::vector<std::pair<std::string, double>>& scores,
                                 double exclusion_floor = 0.0);

namespace detail {
ProbabilityStack fuse_serial(const std::vector<ProbabilityStack>& stacks,
                             const EnsembleWeights& weights);
}

}  // namespace tseg

#endif
