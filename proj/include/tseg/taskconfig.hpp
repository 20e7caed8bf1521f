#ifndef TSEG_TASKCONFIG_HPP
#define TSEG_TASKCONFIG_HPP

#include <string>
#include <vector>

#include "tseg/fusion.hpp"
#include "tseg/metrics.hpp"
#include "tseg/postproc.hpp"
#include "tseg/radiomics.hpp"
#include "tseg/subtype.hpp"

namespace tseg {

/// Everything task-specific in one place: label alphabet, evaluation
/// regions, sequences, resampling target, ensemble weight preset, subtype
/// and post-processing settings.
struct TaskConfig {
    std::string task;
    LabelAlphabet alphabet;
    RegionSpec region_spec;
    std::vector<std::string> sequence_names;
    double isotropic_spacing = 1.0;
    EnsembleWeights weights;
    std::vector<std::string> model_names;
    SubtypeFitConfig subtype;
    DiscretizationSpec disc;
    PostprocFitConfig postproc;
    MetricConfig metrics;

    RadiomicsConfig radiomics_config() const;
    std::vector<std::string> channel_names() const;  // background + label names
    void validate() const;
};

/// Shipped presets: "ped", "men-rt", "met".
TaskConfig task_preset(const std::string& name);

TaskConfig load_task_config(const std::string& path);
void save_task_config(const TaskConfig& cfg, const std::string& path);

/// Stable hash of the serialized config, recorded in run summaries.
std::string config_hash(const TaskConfig& cfg);

}  // namespace tseg

#endif
