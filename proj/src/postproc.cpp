#include "tseg/postproc.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tseg/morphology.hpp"

namespace tseg {
namespace {

std::vector<int> sorted_clusters(const std::vector<FitCase>& cases) {
    std::set<int> s;
    for (const auto& c : cases) s.insert(c.cluster);
    return {s.begin(), s.end()};
}

std::vector<std::string> regions_containing(const RegionSpec& spec, int label) {
    std::vector<std::string> out;
    for (const auto& [name, labels] : spec.regions)
        if (labels.count(label)) out.push_back(name);
    return out;
}

std::vector<std::string> all_regions(const RegionSpec& spec) {
    std::vector<std::string> out;
    for (const auto& [name, labels] : spec.regions) {
        (void)labels;
        out.push_back(name);
    }
    return out;
}

LabelVolume apply_stage2_rule(const LabelVolume& labels, const Stage2Rule& rule,
                              const std::set<int>& wt_labels) {
    std::size_t label_count = 0, wt_count = 0;
    for (std::int32_t v : labels.data) {
        label_count += v == rule.source_label;
        wt_count += wt_labels.count(v) != 0;
    }
    double ratio = wt_count ? static_cast<double>(label_count) / wt_count : 0.0;
    if (ratio >= rule.ratio_threshold) return labels;
    LabelVolume out = labels;
    for (std::int32_t& v : out.data)
        if (v == rule.source_label) v = rule.target_label;
    return out;
}

}  // namespace

void ThresholdPolicy::validate(const LabelAlphabet& alphabet) const {
    for (const auto& [key, vol] : stage1) {
        (void)vol;
        if (!alphabet_contains(alphabet, key.second))
            throw std::invalid_argument("policy references unknown label " +
                                        std::to_string(key.second));
    }
    for (const auto& r : stage2) {
        if (!alphabet_contains(alphabet, r.source_label))
            throw std::invalid_argument("policy references unknown label " +
                                        std::to_string(r.source_label));
        if (r.target_label != 0 && !alphabet_contains(alphabet, r.target_label))
            throw std::invalid_argument("policy references unknown label " +
                                        std::to_string(r.target_label));
        if (r.target_label == r.source_label)
            throw std::invalid_argument("policy rule relabels a label to itself");
        if (r.ratio_threshold < 0 || r.ratio_threshold > 1)
            throw std::invalid_argument("policy ratio threshold outside [0,1]");
    }
    for (int l : wt_labels)
        if (!alphabet_contains(alphabet, l))
            throw std::invalid_argument("policy WT label not in alphabet");
}

double mean_lesionwise_dice(const std::vector<const LabelVolume*>& preds,
                            const std::vector<const LabelVolume*>& gts, const RegionSpec& spec,
                            const std::vector<std::string>& regions,
                            const MetricConfig& metric_cfg) {
    if (preds.empty() || regions.empty())
        throw std::invalid_argument("mean_lesionwise_dice: nothing to evaluate");
    double total = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (const auto& region : regions) {
            Mask mp = region_mask(*preds[i], spec, region);
            Mask mg = region_mask(*gts[i], spec, region);
            total += lesionwise(mp, mg, metric_cfg).lw_dice;
            ++count;
        }
    }
    return total / count;
}

std::map<std::pair<int, int>, double> fit_stage1(const std::vector<FitCase>& cases,
                                                 const PostprocFitConfig& cfg,
                                                 const RegionSpec& spec,
                                                 const MetricConfig& metric_cfg, FitAudit* audit) {
    if (cfg.candidate_volumes.empty())
        throw std::invalid_argument("fit_stage1: empty candidate grid");
    std::vector<double> grid = cfg.candidate_volumes;
    std::sort(grid.begin(), grid.end());

    std::map<std::pair<int, int>, double> result;
    for (int cluster : sorted_clusters(cases)) {
        std::vector<const FitCase*> members;
        for (const auto& c : cases)
            if (c.cluster == cluster) members.push_back(&c);
        for (const auto& entry : spec.alphabet) {
            const int label = entry.id;
            std::vector<std::string> regions = regions_containing(spec, label);
            if (regions.empty()) {
                result[{cluster, label}] = 0.0;
                continue;
            }
            double best_score = -1.0, best_thr = 0.0;
            for (double thr : grid) {
                std::vector<LabelVolume> processed;
                processed.reserve(members.size());
                std::vector<const LabelVolume*> preds, gts;
                for (const FitCase* c : members) {
                    processed.push_back(
                        remove_components_below(c->prediction, label, thr, cfg.connectivity));
                    gts.push_back(&c->ground_truth);
                }
                for (const auto& p : processed) preds.push_back(&p);
                double score = mean_lesionwise_dice(preds, gts, spec, regions, metric_cfg);
                if (audit) audit->rows.push_back({cluster, label, thr, -1, score});
                if (score > best_score + 1e-12) {  // ties keep the smaller threshold
                    best_score = score;
                    best_thr = thr;
                }
            }
            result[{cluster, label}] = best_thr;
        }
    }
    return result;
}

std::vector<Stage2Rule> fit_stage2(const std::vector<FitCase>& cases,
                                   const std::map<std::pair<int, int>, double>& stage1,
                                   const PostprocFitConfig& cfg, const RegionSpec& spec,
                                   const MetricConfig& metric_cfg, FitAudit* audit) {
    std::vector<double> ratios = cfg.candidate_ratios;
    std::sort(ratios.begin(), ratios.end());
    std::vector<std::string> regions = all_regions(spec);

    std::vector<Stage2Rule> rules;
    for (int cluster : sorted_clusters(cases)) {
        // Stage-1-refined predictions for this cluster.
        std::vector<LabelVolume> refined;
        std::vector<const LabelVolume*> gts;
        for (const auto& c : cases) {
            if (c.cluster != cluster) continue;
            LabelVolume p = c.prediction;
            for (const auto& entry : spec.alphabet) {
                auto it = stage1.find({cluster, entry.id});
                if (it != stage1.end() && it->second > 0)
                    p = remove_components_below(p, entry.id, it->second, cfg.connectivity);
            }
            refined.push_back(std::move(p));
            gts.push_back(&c.ground_truth);
        }
        std::vector<const LabelVolume*> preds;
        for (const auto& p : refined) preds.push_back(&p);
        double baseline = mean_lesionwise_dice(preds, gts, spec, regions, metric_cfg);

        std::set<int> sources;
        for (const auto& [src, tgt] : cfg.relabel_menu) {
            (void)tgt;
            sources.insert(src);
        }
        const std::set<int>& wt = spec.region_labels(spec.has_region("WT") ? "WT" : spec.regions.front().first);
        for (int source : sources) {
            double best_score = baseline;
            bool adopted = false;
            Stage2Rule best{cluster, source, 0.0, 0};
            for (double r : ratios) {
                for (const auto& [src, tgt] : cfg.relabel_menu) {
                    if (src != source) continue;
                    Stage2Rule candidate{cluster, source, r, tgt};
                    std::vector<LabelVolume> rewritten;
                    rewritten.reserve(refined.size());
                    std::vector<const LabelVolume*> rp;
                    for (const auto& p : refined)
                        rewritten.push_back(apply_stage2_rule(p, candidate, wt));
                    for (const auto& p : rewritten) rp.push_back(&p);
                    double score = mean_lesionwise_dice(rp, gts, spec, regions, metric_cfg);
                    if (audit) audit->rows.push_back({cluster, source, r, tgt, score});
                    if (score > best_score + 1e-12) {  // strict improvement only
                        best_score = score;
                        best = candidate;
                        adopted = true;
                    }
                }
            }
            if (adopted) rules.push_back(best);
        }
    }
    return rules;
}

ThresholdPolicy fit_policy(const std::vector<FitCase>& cases, const PostprocFitConfig& cfg,
                           const RegionSpec& spec, const MetricConfig& metric_cfg,
                           FitAudit* audit) {
    if (cases.empty()) throw std::invalid_argument("fit_policy: no cases");
    for (const auto& c : cases)
        if (!same_dims(c.prediction.geom, c.ground_truth.geom))
            throw std::invalid_argument("fit_policy: prediction/GT geometry mismatch for case " +
                                        c.case_id);
    ThresholdPolicy policy;
    policy.task = spec.task;
    policy.connectivity = cfg.connectivity;
    policy.wt_labels =
        spec.has_region("WT") ? spec.region_labels("WT") : spec.region_labels(spec.regions.front().first);
    policy.stage1 = fit_stage1(cases, cfg, spec, metric_cfg, audit);
    policy.stage2 = fit_stage2(cases, policy.stage1, cfg, spec, metric_cfg, audit);
    return policy;
}

LabelVolume apply_policy(const LabelVolume& labels, int cluster, const ThresholdPolicy& policy) {
    policy.validate(labels.alphabet);
    LabelVolume out = labels;
    // ascending label id
    std::vector<std::pair<int, double>> removals;
    for (const auto& [key, vol] : policy.stage1)
        if (key.first == cluster && vol > 0) removals.emplace_back(key.second, vol);
    std::sort(removals.begin(), removals.end());
    for (const auto& [label, vol] : removals)
        out = remove_components_below(out, label, vol, policy.connectivity);
    for (const auto& rule : policy.stage2) {
        if (rule.cluster != cluster) continue;
        out = apply_stage2_rule(out, rule, policy.wt_labels);
    }
    return out;
}

void save_policy(const ThresholdPolicy& policy, const std::string& path) {
    nlohmann::json j;
    j["schema"] = "tumorseg.threshold-policy";
    j["version"] = policy.version;
    j["task"] = policy.task;
    j["connectivity"] = static_cast<int>(policy.connectivity);
    j["wt_labels"] = policy.wt_labels;
    j["provenance"] = policy.provenance;
    j["stage1"] = nlohmann::json::array();
    for (const auto& [key, vol] : policy.stage1)
        j["stage1"].push_back({{"cluster", key.first}, {"label", key.second}, {"min_volume", vol}});
    j["stage2"] = nlohmann::json::array();
    for (const auto& r : policy.stage2)
        j["stage2"].push_back({{"cluster", r.cluster},
                               {"source", r.source_label},
                               {"ratio", r.ratio_threshold},
                               {"target", r.target_label}});
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

ThresholdPolicy load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": corrupt policy file: " + e.what());
    }
    if (j.value("schema", "") != "tumorseg.threshold-policy")
        throw std::runtime_error(path + ": not a threshold policy file");
    if (j.value("version", -1) != 1)
        throw std::runtime_error(path + ": unsupported policy version");
    ThresholdPolicy p;
    try {
        p.task = j.at("task").get<std::string>();
        p.connectivity = static_cast<Connectivity>(j.at("connectivity").get<int>());
        p.wt_labels = j.at("wt_labels").get<std::set<int>>();
        p.provenance = j.value("provenance", "");
        for (const auto& e : j.at("stage1"))
            p.stage1[{e.at("cluster").get<int>(), e.at("label").get<int>()}] =
                e.at("min_volume").get<double>();
        for (const auto& e : j.at("stage2"))
            p.stage2.push_back({e.at("cluster").get<int>(), e.at("source").get<int>(),
                                e.at("ratio").get<double>(), e.at("target").get<int>()});
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": corrupt policy file: " + e.what());
    }
    return p;
}

void write_fit_audit_csv(const FitAudit& audit, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "stage,cluster,label,candidate,target,mean_lw_dice\n";
    for (const auto& r : audit.rows) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g,%d,%.9g", r.candidate, r.target, r.mean_lw_dice);
        out << (r.target < 0 ? 1 : 2) << ',' << r.cluster << ',' << r.label << ',' << buf << '\n';
    }
}

}  // namespace tseg
