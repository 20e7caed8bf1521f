#ifndef TSEG_MANIFEST_HPP
#define TSEG_MANIFEST_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tseg {

struct ManifestCase {
    std::string id;
    std::map<std::string, std::string> sequences;      // sequence name -> NIfTI path
    std::map<std::string, std::string> probabilities;  // model name -> stack directory
    std::optional<std::string> ground_truth;
    std::optional<std::string> prediction;
    std::optional<int> fold;
};

struct Manifest {
    std::string task;
    std::vector<ManifestCase> cases;  // sorted by case id
};

/// Loads and eagerly validates a manifest: unique case ids, every referenced
/// path present on disk. Cases come back sorted by id.
Manifest load_manifest(const std::string& path);

}  // namespace tseg

#endif
