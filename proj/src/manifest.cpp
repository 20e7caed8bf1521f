#include "tseg/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace tseg {

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read manifest " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": invalid manifest JSON: " + e.what());
    }

    Manifest m;
    m.task = j.value("task", "custom");
    std::set<std::string> seen;
    std::vector<std::string> missing;
    auto check_path = [&](const std::string& p) {
        if (!std::filesystem::exists(p)) missing.push_back(p);
    };

    for (const auto& c : j.at("cases")) {
        ManifestCase mc;
        mc.id = c.at("id").get<std::string>();
        if (!seen.insert(mc.id).second)
            throw std::runtime_error(path + ": duplicate case id " + mc.id);
        if (c.contains("sequences"))
            for (const auto& [name, p] : c.at("sequences").items()) {
                mc.sequences[name] = p.get<std::string>();
                check_path(mc.sequences[name]);
            }
        if (c.contains("probabilities"))
            for (const auto& [name, p] : c.at("probabilities").items()) {
                mc.probabilities[name] = p.get<std::string>();
                check_path(mc.probabilities[name]);
            }
        if (c.contains("ground_truth")) {
            mc.ground_truth = c.at("ground_truth").get<std::string>();
            check_path(*mc.ground_truth);
        }
        if (c.contains("prediction")) {
            mc.prediction = c.at("prediction").get<std::string>();
            check_path(*mc.prediction);
        }
        if (c.contains("fold")) mc.fold = c.at("fold").get<int>();
        m.cases.push_back(std::move(mc));
    }
    if (!missing.empty()) {
        std::string msg = path + ": missing files:";
        for (const auto& p : missing) msg += "\n  " + p;
        throw std::runtime_error(msg);
    }
    std::sort(m.cases.begin(), m.cases.end(),
              [](const ManifestCase& a, const ManifestCase& b) { return a.id < b.id; });
    return m;
}

}  // namespace tseg
