#ifndef TSEG_POSTPROC_HPP
#define TSEG_POSTPROC_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tseg/metrics.hpp"
#include "tseg/volume.hpp"

namespace tseg {

struct Stage2Rule {
    int cluster;
    int source_label;
    double ratio_threshold;  // in [0,1]; fires when count(label)/count(WT) < ratio
    int target_label;        // may be 0 (background)
};

/// Fitted per-(subtype, label) post-processing rules: minimum component
/// volumes, then WT-ratio relabeling.
struct ThresholdPolicy {
    int version = 1;
    std::string task;
    std::map<std::pair<int, int>, double> stage1;  // (cluster, label) -> min volume mm^3
    std::vector<Stage2Rule> stage2;
    std::set<int> wt_labels;  // label set whose union defines WT for the ratio
    Connectivity connectivity = Connectivity::Corners26;
    std::string provenance;

    void validate(const LabelAlphabet& alphabet) const;
};

struct FitCase {
    std::string case_id;
    LabelVolume prediction;  // cross-validated ensemble output
    LabelVolume ground_truth;
    int cluster = 0;
};

struct PostprocFitConfig {
    std::vector<double> candidate_volumes = {0, 10, 20, 50, 100, 200, 500, 1000};  // mm^3
    std::vector<double> candidate_ratios = {0, 0.01, 0.02, 0.05, 0.1};
    std::vector<std::pair<int, int>> relabel_menu;  // (source label, target label)
    Connectivity connectivity = Connectivity::Corners26;
};

struct FitAudit {
    // (cluster, label or source, candidate, target or -1) -> mean lesion-wise Dice
    struct Row {
        int cluster;
        int label;
        double candidate;
        int target;  // -1 for stage1 rows
        double mean_lw_dice;
    };
    std::vector<Row> rows;
};

/// Stage 1: per cluster and label, the candidate minimum-volume threshold
/// maximizing mean lesion-wise Dice of the regions containing that label.
/// Ties go to the smallest (least destructive) threshold.
std::map<std::pair<int, int>, double> fit_stage1(const std::vector<FitCase>& cases,
                                                 const PostprocFitConfig& cfg,
                                                 const RegionSpec& spec,
                                                 const MetricConfig& metric_cfg,
                                                 FitAudit* audit = nullptr);

/// Stage 2 on stage-1-refined predictions: adopt a (source, ratio, target)
/// rule per cluster and source label only when it strictly improves the
/// cluster's mean lesion-wise Dice.
std::vector<Stage2Rule> fit_stage2(const std::vector<FitCase>& cases,
                                   const std::map<std::pair<int, int>, double>& stage1,
                                   const PostprocFitConfig& cfg, const RegionSpec& spec,
                                   const MetricConfig& metric_cfg, FitAudit* audit = nullptr);

ThresholdPolicy fit_policy(const std::vector<FitCase>& cases, const PostprocFitConfig& cfg,
                           const RegionSpec& spec, const MetricConfig& metric_cfg,
                           FitAudit* audit = nullptr);

/// Stage-1 removals in ascending label-id order, then stage-2 rules in
/// stored order. Unknown clusters pass through unchanged.
LabelVolume apply_policy(const LabelVolume& labels, int cluster, const ThresholdPolicy& policy);

void save_policy(const ThresholdPolicy& policy, const std::string& path);
ThresholdPolicy load_policy(const std::string& path);
void write_fit_audit_csv(const FitAudit& audit, const std::string& path);

/// Mean lesion-wise Dice over the given cases and regions.
double mean_lesionwise_dice(const std::vector<const LabelVolume*>& preds,
                            const std::vector<const LabelVolume*>& gts, const RegionSpec& spec,
                            const std::vector<std::string>& regions,
                            const MetricConfig& metric_cfg);

}  // namespace tseg

#endif
