#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "tseg/nifti.hpp"
#include "tseg/pipeline.hpp"

using namespace tseg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), {}};
}

TaskConfig demo_config() {
    TaskConfig cfg;
    cfg.task = "demo";
    cfg.alphabet = {{1, "A"}, {2, "B"}};
    cfg.region_spec.task = "demo";
    cfg.region_spec.alphabet = cfg.alphabet;
    cfg.region_spec.regions = {{"A", {1}}, {"B", {2}}, {"WT", {1, 2}}};
    cfg.sequence_names = {"t1"};
    cfg.isotropic_spacing = 1.0;
    cfg.model_names = {"m1", "m2"};
    cfg.weights = EnsembleWeights({{"m1", 0.6}, {"m2", 0.4}});
    cfg.subtype.k_min = 2;
    cfg.subtype.k_max = 3;
    cfg.postproc.relabel_menu = {{2, 1}};
    return cfg;
}

struct Dataset {
    std::string root;
    std::string manifest_path;
    TaskConfig cfg;
    std::map<std::string, LabelVolume> gt;
};

// Eight cases in two morphological groups (small and large tumors). The
// probability stacks one-hot encode the ground truth, so the fused
// prediction reproduces it exactly.
const Dataset& dataset() {
    static Dataset ds = [] {
        Dataset d;
        d.cfg = demo_config();
        d.root = (fs::temp_directory_path() / "tseg_tests" / "pipeline_ds").string();
        fs::remove_all(d.root);
        fs::create_directories(d.root);

        Geometry g = oracle::make_geom(16, 16, 16);
        nlohmann::json manifest;
        manifest["task"] = "demo";
        manifest["cases"] = nlohmann::json::array();

        std::mt19937 rng(9001);
        std::uniform_real_distribution<float> noise(-2.f, 2.f);
        for (int i = 0; i < 8; ++i) {
            const std::string id = "case" + std::to_string(i);
            const std::string cdir = d.root + "/" + id;
            fs::create_directories(cdir + "/m1");
            fs::create_directories(cdir + "/m2");

            LabelVolume lv(g, d.cfg.alphabet);
            const int half = i < 4 ? 1 : 4;  // 3^3 vs 9^3 tumor
            for (int z = 7 - half; z <= 7 + half; ++z)
                for (int y = 7 - half; y <= 7 + half; ++y)
                    for (int x = 7 - half; x <= 7 + half; ++x) lv.at(x, y, z) = 1;
            lv.at(7, 7, 7) = 2;  // small core of the second label
            write_label_volume(lv, cdir + "/gt.nii.gz");

            // intensity profile differs between the groups too, so the
            // first-order features reinforce the morphological split
            Volume t1(g, DType::Float32);
            const float base = i < 4 ? 20.f : 80.f;
            for (auto& v : t1.data) v = base + noise(rng);
            write_volume(t1, cdir + "/t1.nii.gz");

            for (const char* model : {"m1", "m2"}) {
                std::vector<std::string> names = d.cfg.channel_names();
                for (std::size_t c = 0; c < names.size(); ++c) {
                    Volume ch(g, DType::Float32);
                    const int label = c == 0 ? 0 : d.cfg.alphabet[c - 1].id;
                    for (std::size_t v = 0; v < ch.data.size(); ++v)
                        ch.data[v] = lv.data[v] == label ? 1.f : 0.f;
                    write_volume(ch, cdir + "/" + model + "/" + id + "_" + names[c] + ".nii.gz");
                }
            }

            manifest["cases"].push_back(
                {{"id", id},
                 {"sequences", {{"t1", cdir + "/t1.nii.gz"}}},
                 {"probabilities", {{"m1", cdir + "/m1"}, {"m2", cdir + "/m2"}}},
                 {"ground_truth", cdir + "/gt.nii.gz"}});
            d.gt.emplace(id, std::move(lv));
        }
        d.manifest_path = d.root + "/manifest.json";
        std::ofstream(d.manifest_path) << manifest.dump(2);
        return d;
    }();
    return ds;
}

}  // namespace

TEST_CASE("manifest: loads sorted, rejects duplicates and missing files") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    CHECK(m.task == "demo");
    REQUIRE(m.cases.size() == 8);
    CHECK(std::is_sorted(m.cases.begin(), m.cases.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
    CHECK(m.cases[0].sequences.count("t1") == 1);
    CHECK(m.cases[0].ground_truth.has_value());

    auto dup = d.root + "/dup_manifest.json";
    std::ofstream(dup) << R"({"task":"demo","cases":[{"id":"x"},{"id":"x"}]})";
    CHECK_THROWS_WITH(load_manifest(dup), doctest::Contains("duplicate"));

    auto missing = d.root + "/missing_manifest.json";
    std::ofstream(missing)
        << R"({"task":"demo","cases":[{"id":"x","ground_truth":"/nonexistent/gt.nii.gz"}]})";
    CHECK_THROWS_WITH(load_manifest(missing), doctest::Contains("missing files"));

    CHECK_THROWS_AS(load_manifest(d.root + "/not_there.json"), std::runtime_error);
    auto bad = d.root + "/bad_manifest.json";
    std::ofstream(bad) << "{ nope";
    CHECK_THROWS_WITH(load_manifest(bad), doctest::Contains("invalid manifest"));
}

TEST_CASE("features command: expected schema, reruns byte-identical") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string csv1 = d.root + "/features1.csv";
    const std::string csv2 = d.root + "/features2.csv";
    cmd_features(m, d.cfg, csv1, opts);
    cmd_features(m, d.cfg, csv2, opts);
    CHECK(slurp(csv1) == slurp(csv2));

    FeatureMatrix X = read_feature_csv(csv1);
    CHECK(X.n() == 8);
    CHECK(X.d() == 14 + 19);  // shape + first-order for the single sequence
    CHECK(X.feature_names == canonical_feature_names(d.cfg.radiomics_config()));
    // volumes separate the two groups
    std::size_t vol_idx = 0;
    while (X.feature_names[vol_idx] != "shape.voxel_volume") ++vol_idx;
    CHECK(X.rows[0][vol_idx] == doctest::Approx(27.0));
    CHECK(X.rows[7][vol_idx] == doctest::Approx(729.0));
}

TEST_CASE("cluster fit recovers the two morphological groups") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string csv = d.root + "/features_fit.csv";
    cmd_features(m, d.cfg, csv, opts);
    const std::string model_path = d.root + "/model.json";
    cmd_cluster_fit(csv, d.cfg, model_path, opts);
    SubtypeModel model = load_model(model_path);
    CHECK(model.k == 2);

    FeatureMatrix X = read_feature_csv(csv);
    std::vector<int> assigned;
    for (std::size_t i = 0; i < X.n(); ++i) {
        FeatureVector fv;
        for (std::size_t j = 0; j < X.d(); ++j) fv.emplace_back(X.feature_names[j], X.rows[i][j]);
        assigned.push_back(assign_subtype(model, fv));
    }
    for (int i = 1; i < 4; ++i) CHECK(assigned[i] == assigned[0]);
    for (int i = 5; i < 8; ++i) CHECK(assigned[i] == assigned[4]);
    CHECK(assigned[0] != assigned[4]);
}

TEST_CASE("ensemble command reproduces the ground truth from one-hot stacks") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string out_dir = d.root + "/ensemble";
    cmd_ensemble(m, d.cfg, out_dir, opts);
    for (const auto& mc : m.cases) {
        LabelVolume pred = read_label_volume(out_dir + "/" + mc.id + ".nii.gz", d.cfg.alphabet);
        CHECK(pred.data == d.gt.at(mc.id).data);
    }
}

TEST_CASE("postproc fit + apply on perfect predictions is the identity") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string csv = d.root + "/features_pp.csv";
    const std::string model_path = d.root + "/model_pp.json";
    cmd_features(m, d.cfg, csv, opts);
    cmd_cluster_fit(csv, d.cfg, model_path, opts);

    const std::string policy_path = d.root + "/policy.json";
    cmd_postproc_fit(m, d.cfg, model_path, policy_path, opts);
    CHECK(fs::exists(policy_path));
    CHECK(fs::exists(policy_path + ".audit.csv"));
    ThresholdPolicy policy = load_policy(policy_path);
    policy.validate(d.cfg.alphabet);
    // predictions already match ground truth, so fitted thresholds are 0
    for (const auto& [key, vol] : policy.stage1) {
        (void)key;
        CHECK(vol == doctest::Approx(0.0));
    }

    const std::string ens_dir = d.root + "/ensemble_pp";
    const std::string out_dir = d.root + "/final_pp";
    cmd_ensemble(m, d.cfg, ens_dir, opts);
    cmd_postproc_apply(m, d.cfg, model_path, policy_path, ens_dir, out_dir, opts);
    for (const auto& mc : m.cases) {
        LabelVolume out = read_label_volume(out_dir + "/" + mc.id + ".nii.gz", d.cfg.alphabet);
        CHECK(out.data == d.gt.at(mc.id).data);
    }
}

TEST_CASE("evaluate command: perfect predictions score 1 / 0 everywhere") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string ens_dir = d.root + "/ensemble_eval";
    cmd_ensemble(m, d.cfg, ens_dir, opts);
    const std::string prefix = d.root + "/report";
    cmd_evaluate(m, d.cfg, ens_dir, prefix, opts);

    std::ifstream cases(prefix + "_cases.csv");
    std::string line;
    std::getline(cases, line);
    CHECK(line == "case_id,region,lw_dice,lw_hd95,dice,hd95");
    int rows = 0;
    while (std::getline(cases, line)) {
        ++rows;
        CHECK(line.substr(line.size() - 8) == ",1,0,1,0");
    }
    CHECK(rows == 8 * 3);  // cases x regions

    std::ifstream agg(prefix + "_aggregate.csv");
    std::getline(agg, line);
    CHECK(line == "region,metric,mean,std,q25,median,q75");
}

TEST_CASE("full pipeline: summary written, repeat runs byte-identical, resume works") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string csv = d.root + "/features_full.csv";
    const std::string model_path = d.root + "/model_full.json";
    const std::string policy_path = d.root + "/policy_full.json";
    cmd_features(m, d.cfg, csv, opts);
    cmd_cluster_fit(csv, d.cfg, model_path, opts);
    cmd_postproc_fit(m, d.cfg, model_path, policy_path, opts);

    const std::string run1 = d.root + "/run1";
    const std::string run2 = d.root + "/run2";
    cmd_pipeline(m, d.cfg, model_path, policy_path, run1, opts);
    cmd_pipeline(m, d.cfg, model_path, policy_path, run2, opts);

    for (const auto& name : {"/run_summary.json", "/report_cases.csv", "/report_aggregate.csv"})
        CHECK(slurp(run1 + name) == slurp(run2 + name));
    for (const auto& mc : m.cases) {
        CHECK(slurp(run1 + "/ensemble/" + mc.id + ".nii.gz") ==
              slurp(run2 + "/ensemble/" + mc.id + ".nii.gz"));
        CHECK(slurp(run1 + "/final/" + mc.id + ".nii.gz") ==
              slurp(run2 + "/final/" + mc.id + ".nii.gz"));
    }

    nlohmann::json summary = nlohmann::json::parse(slurp(run1 + "/run_summary.json"));
    CHECK(summary.at("tool_version") == kToolVersion);
    CHECK(summary.at("task") == "demo");
    CHECK(summary.at("config_hash") == config_hash(d.cfg));
    CHECK(summary.at("cases").size() == 8);
    for (const auto& c : summary.at("cases")) {
        CHECK(c.at("ok").get<bool>());
        CHECK(c.at("cluster").get<int>() >= 0);
    }

    PipelineOptions resume = opts;
    resume.resume = true;
    cmd_pipeline(m, d.cfg, model_path, policy_path, run1, resume);
    CHECK(slurp(run1 + "/run_summary.json") == slurp(run2 + "/run_summary.json"));
}

TEST_CASE("folds command: round-robin within clusters") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    PipelineOptions opts;
    const std::string csv = d.root + "/features_folds.csv";
    const std::string model_path = d.root + "/model_folds.json";
    cmd_features(m, d.cfg, csv, opts);
    cmd_cluster_fit(csv, d.cfg, model_path, opts);
    const std::string out = d.root + "/folds.csv";
    cmd_folds(m, d.cfg, model_path, 2, out, opts);

    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "case_id,cluster,fold");
    std::map<std::pair<int, int>, int> counts;  // (cluster, fold) -> n
    int rows = 0;
    while (std::getline(in, line)) {
        auto c1 = line.find(','), c2 = line.rfind(',');
        counts[{std::stoi(line.substr(c1 + 1, c2 - c1 - 1)), std::stoi(line.substr(c2 + 1))}]++;
        ++rows;
    }
    CHECK(rows == 8);
    // each cluster has 4 members split 2/2 across the folds
    for (const auto& [key, n] : counts) {
        (void)key;
        CHECK(n == 2);
    }
    CHECK_THROWS_AS(cmd_folds(m, d.cfg, model_path, 0, out, opts), std::runtime_error);
}

TEST_CASE("strict mode surfaces per-case failures; non-strict skips them") {
    const Dataset& d = dataset();
    Manifest m = load_manifest(d.manifest_path);
    m.cases.resize(2);
    m.cases[1].ground_truth.reset();  // breaks the features command for this case

    PipelineOptions lax;
    const std::string csv = d.root + "/features_partial.csv";
    cmd_features(m, d.cfg, csv, lax);  // warns, keeps going
    CHECK(read_feature_csv(csv).n() == 1);

    PipelineOptions strict;
    strict.strict = true;
    CHECK_THROWS_AS(cmd_features(m, d.cfg, csv, strict), ProcessingError);
}

TEST_CASE("task config: presets validate, file round-trip preserves the hash") {
    for (const char* name : {"ped", "men-rt", "met"}) {
        TaskConfig cfg = task_preset(name);
        cfg.validate();
        auto p = (fs::temp_directory_path() / "tseg_tests" / (std::string("cfg_") + name + ".json")).string();
        fs::create_directories(fs::path(p).parent_path());
        save_task_config(cfg, p);
        TaskConfig loaded = load_task_config(p);
        CHECK(config_hash(loaded) == config_hash(cfg));
        CHECK(loaded.task == cfg.task);
        CHECK(loaded.alphabet.size() == cfg.alphabet.size());
    }
    CHECK_THROWS_AS(task_preset("nope"), std::invalid_argument);

    TaskConfig ped = task_preset("ped");
    CHECK(ped.alphabet.size() == 4);
    CHECK(ped.region_spec.region_labels("WT") == std::set<int>{1, 2, 3, 4});
    CHECK(ped.region_spec.region_labels("TC") == std::set<int>{1, 2, 3});
    TaskConfig met = task_preset("met");
    CHECK(met.weights.entries[0].second == doctest::Approx(0.487));
    CHECK(met.weights.entries[2].second == doctest::Approx(0.0));
    TaskConfig men = task_preset("men-rt");
    CHECK(men.isotropic_spacing == doctest::Approx(0.9375));
}
