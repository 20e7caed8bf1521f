#include "tseg/taskconfig.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tseg {
namespace {

using nlohmann::json;

json weights_to_json(const EnsembleWeights& w) {
    json j = json::array();
    for (const auto& [name, weight] : w.entries) j.push_back({{"model", name}, {"weight", weight}});
    return j;
}

EnsembleWeights weights_from_json(const json& j) {
    std::vector<std::pair<std::string, double>> raw;
    for (const auto& e : j) raw.emplace_back(e.at("model").get<std::string>(), e.at("weight").get<double>());
    return EnsembleWeights(std::move(raw));
}

}  // namespace

RadiomicsConfig TaskConfig::radiomics_config() const {
    RadiomicsConfig rc;
    rc.sequence_names = sequence_names;
    rc.isotropic_spacing = isotropic_spacing;
    rc.disc = disc;
    rc.connectivity = metrics.connectivity;
    return rc;
}

std::vector<std::string> TaskConfig::channel_names() const {
    std::vector<std::string> names = {"background"};
    for (const auto& e : alphabet) names.push_back(e.name);
    return names;
}

void TaskConfig::validate() const {
    if (alphabet.empty()) throw std::invalid_argument("task config: empty alphabet");
    for (const auto& [name, labels] : region_spec.regions) {
        if (labels.empty()) throw std::invalid_argument("task config: empty region " + name);
        for (int l : labels)
            if (!alphabet_contains(alphabet, l))
                throw std::invalid_argument("task config: region " + name +
                                            " references unknown label");
    }
    for (const auto& [src, tgt] : postproc.relabel_menu) {
        if (!alphabet_contains(alphabet, src))
            throw std::invalid_argument("task config: relabel source not in alphabet");
        if (tgt != 0 && !alphabet_contains(alphabet, tgt))
            throw std::invalid_argument("task config: relabel target not in alphabet");
    }
    if (!(isotropic_spacing > 0))
        throw std::invalid_argument("task config: non-positive isotropic spacing");
    if (weights.entries.size() != model_names.size())
        throw std::invalid_argument("task config: weight/model count mismatch");
}

TaskConfig task_preset(const std::string& name) {
    TaskConfig c;
    c.task = name;
    c.model_names = {"nnunet", "mednext", "swinunetr"};
    if (name == "ped") {
        c.alphabet = {{1, "ET"}, {2, "NET"}, {3, "CC"}, {4, "ED"}};
        c.region_spec.regions = {{"ET", {1}},      {"NET", {2}},       {"CC", {3}},
                                 {"ED", {4}},      {"TC", {1, 2, 3}},  {"WT", {1, 2, 3, 4}}};
        c.sequence_names = {"t1", "t1ce", "t2", "flair"};
        c.isotropic_spacing = 1.0;
        c.weights = EnsembleWeights({{"nnunet", 0.33}, {"mednext", 0.34}, {"swinunetr", 0.33}});
        c.postproc.relabel_menu = {{3, 2}, {4, 0}};  // CC -> NET, ED -> background
    } else if (name == "men-rt") {
        c.alphabet = {{1, "GTV"}};
        c.region_spec.regions = {{"GTV", {1}}};
        c.sequence_names = {"t1ce"};
        c.isotropic_spacing = 0.9375;
        c.weights = EnsembleWeights({{"nnunet", 0.33}, {"mednext", 0.33}, {"swinunetr", 0.34}});
    } else if (name == "met") {
        c.alphabet = {{1, "ET"}, {2, "NET"}, {3, "SNFH"}};
        c.region_spec.regions = {{"ET", {1}}, {"TC", {1, 2}}, {"WT", {1, 2, 3}}};
        c.sequence_names = {"t1", "t1ce", "t2", "flair"};
        c.isotropic_spacing = 1.0;
        c.weights = EnsembleWeights({{"nnunet", 0.487}, {"mednext", 0.513}, {"swinunetr", 0.0}});
        c.postproc.relabel_menu = {{2, 3}};  // NET -> SNFH
    } else {
        throw std::invalid_argument("unknown task preset: " + name);
    }
    c.region_spec.task = name;
    c.region_spec.alphabet = c.alphabet;
    c.validate();
    return c;
}

namespace {

json config_to_json(const TaskConfig& c) {
    json j;
    j["schema"] = "tumorseg.task-config";
    j["version"] = 1;
    j["task"] = c.task;
    j["alphabet"] = json::array();
    for (const auto& e : c.alphabet) j["alphabet"].push_back({{"id", e.id}, {"name", e.name}});
    j["regions"] = json::array();
    for (const auto& [name, labels] : c.region_spec.regions)
        j["regions"].push_back({{"name", name}, {"labels", labels}});
    j["sequences"] = c.sequence_names;
    j["isotropic_spacing"] = c.isotropic_spacing;
    j["models"] = c.model_names;
    j["weights"] = weights_to_json(c.weights);
    j["subtype"] = {{"k_min", c.subtype.k_min},
                    {"k_max", c.subtype.k_max},
                    {"seed", c.subtype.seed},
                    {"variance_threshold", c.subtype.variance_threshold}};
    j["bin_width"] = c.disc.bin_width;
    json menu = json::array();
    for (const auto& [s, t] : c.postproc.relabel_menu) menu.push_back({{"source", s}, {"target", t}});
    j["postproc"] = {{"candidate_volumes", c.postproc.candidate_volumes},
                     {"candidate_ratios", c.postproc.candidate_ratios},
                     {"relabel_menu", menu},
                     {"connectivity", static_cast<int>(c.postproc.connectivity)}};
    j["metrics"] = {{"dilation_radius", c.metrics.dilation_radius},
                    {"connectivity", static_cast<int>(c.metrics.connectivity)},
                    {"hd_penalty_mm", c.metrics.hd_penalty_mm}};
    return j;
}

}  // namespace

void save_task_config(const TaskConfig& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << config_to_json(c).dump(2) << '\n';
}

TaskConfig load_task_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": invalid config JSON: " + e.what());
    }
    if (j.value("schema", "") != "tumorseg.task-config")
        throw std::runtime_error(path + ": not a task config file");
    TaskConfig c;
    try {
        c.task = j.at("task").get<std::string>();
        for (const auto& e : j.at("alphabet"))
            c.alphabet.push_back({e.at("id").get<int>(), e.at("name").get<std::string>()});
        for (const auto& e : j.at("regions"))
            c.region_spec.regions.emplace_back(e.at("name").get<std::string>(),
                                               e.at("labels").get<std::set<int>>());
        c.sequence_names = j.at("sequences").get<std::vector<std::string>>();
        c.isotropic_spacing = j.at("isotropic_spacing").get<double>();
        c.model_names = j.at("models").get<std::vector<std::string>>();
        c.weights = weights_from_json(j.at("weights"));
        const auto& s = j.at("subtype");
        c.subtype.k_min = s.at("k_min").get<int>();
        c.subtype.k_max = s.at("k_max").get<int>();
        c.subtype.seed = s.at("seed").get<std::uint64_t>();
        c.subtype.variance_threshold = s.at("variance_threshold").get<double>();
        c.disc.bin_width = j.at("bin_width").get<double>();
        const auto& p = j.at("postproc");
        c.postproc.candidate_volumes = p.at("candidate_volumes").get<std::vector<double>>();
        c.postproc.candidate_ratios = p.at("candidate_ratios").get<std::vector<double>>();
        for (const auto& e : p.at("relabel_menu"))
            c.postproc.relabel_menu.emplace_back(e.at("source").get<int>(),
                                                 e.at("target").get<int>());
        c.postproc.connectivity = static_cast<Connectivity>(p.at("connectivity").get<int>());
        const auto& m = j.at("metrics");
        c.metrics.dilation_radius = m.at("dilation_radius").get<int>();
        c.metrics.connectivity = static_cast<Connectivity>(m.at("connectivity").get<int>());
        c.metrics.hd_penalty_mm = m.at("hd_penalty_mm").get<double>();
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": invalid config JSON: " + e.what());
    }
    c.region_spec.task = c.task;
    c.region_spec.alphabet = c.alphabet;
    c.validate();
    return c;
}

std::string config_hash(const TaskConfig& c) {
    const std::string dump = config_to_json(c).dump();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tseg
