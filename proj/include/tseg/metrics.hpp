#ifndef TSEG_METRICS_HPP
#define TSEG_METRICS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tseg/morphology.hpp"
#include "tseg/volume.hpp"

namespace tseg {

/// Composite evaluation regions as unions of base labels
/// (e.g. WT = {ET, NET, CC, ED}).
struct RegionSpec {
    std::string task;
    LabelAlphabet alphabet;
    std::vector<std::pair<std::string, std::set<int>>> regions;

    const std::set<int>& region_labels(const std::string& name) const;
    bool has_region(const std::string& name) const;
};

struct MetricConfig {
    int dilation_radius = 1;           // voxels; matching only
    Connectivity connectivity = Connectivity::Corners26;
    double hd_penalty_mm = 374.0;      // one-sided-empty and FP/FN penalty
};

Mask region_mask(const LabelVolume& labels, const RegionSpec& spec, const std::string& region);

/// 2|a∩b| / (|a|+|b|); both empty -> 1.
double dice(const Mask& a, const Mask& b);

/// 95th percentile (linear interpolation) of pooled directed surface
/// distances in mm; both empty -> 0, exactly one empty -> penalty.
double hd95(const Mask& a, const Mask& b, const MetricConfig& cfg = {});

struct LesionwiseResult {
    double lw_dice = 0.0;
    double lw_hd95 = 0.0;
    int gt_lesions = 0;
    int false_positives = 0;
    int false_negatives = 0;
};

LesionwiseResult lesionwise(const Mask& pred, const Mask& gt, const MetricConfig& cfg = {});

struct RegionScores {
    double lw_dice, lw_hd95, dice, hd95;
};

struct CaseReport {
    std::string case_id;
    std::map<std::string, RegionScores> regions;
};

struct AggregateRow {
    double mean, stddev, q25, median, q75;
};

struct DatasetReport {
    std::vector<CaseReport> cases;
    // key: (region, metric) with metric in {lw_dice, lw_hd95, dice, hd95}
    std::map<std::pair<std::string, std::string>, AggregateRow> aggregates;
};

CaseReport evaluate_case(const LabelVolume& pred, const LabelVolume& gt, const RegionSpec& spec,
                         const MetricConfig& cfg = {});
DatasetReport evaluate_dataset(const std::vector<CaseReport>& cases);

void write_case_report_csv(const DatasetReport& rep, const std::string& path);
void write_aggregate_csv(const DatasetReport& rep, const std::string& path);

/// Boundary voxels under the 6-neighborhood (out-of-grid counts as background).
Mask boundary_mask(const Mask& m);

namespace detail {
// Pooled directed surface distances (mm), serial reference kept for tests.
std::vector<double> surface_distances(const Mask& a, const Mask& b);
std::vector<double> surface_distances_serial(const Mask& a, const Mask& b);
double percentile(std::vector<double> values, double p);
}

}  // namespace tseg

#endif
