#ifndef TSEG_PIPELINE_HPP
#define TSEG_PIPELINE_HPP

#include <cstdint>
#include <string>

#include "tseg/manifest.hpp"
#include "tseg/taskconfig.hpp"

namespace tseg {

inline constexpr const char* kToolVersion = "0.1.0";

struct PipelineOptions {
    bool strict = false;
    int jobs = 0;  // 0 = all available cores
    std::uint64_t seed = 20240;
    bool resume = false;
    std::string wt_source = "gt";  // "gt" | "prediction" (features command)
};

/// Thrown when per-case processing failed and --strict is set.
struct ProcessingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void cmd_features(const Manifest& manifest, const TaskConfig& cfg, const std::string& out_csv,
                  const PipelineOptions& opts);
void cmd_cluster_fit(const std::string& features_csv, const TaskConfig& cfg,
                     const std::string& model_out, const PipelineOptions& opts);
void cmd_ensemble(const Manifest& manifest, const TaskConfig& cfg, const std::string& out_dir,
                  const PipelineOptions& opts);
void cmd_postproc_fit(const Manifest& manifest, const TaskConfig& cfg,
                      const std::string& model_path, const std::string& policy_out,
                      const PipelineOptions& opts);
void cmd_postproc_apply(const Manifest& manifest, const TaskConfig& cfg,
                        const std::string& model_path, const std::string& policy_path,
                        const std::string& pred_dir, const std::string& out_dir,
                        const PipelineOptions& opts);
void cmd_evaluate(const Manifest& manifest, const TaskConfig& cfg, const std::string& pred_dir,
                  const std::string& out_prefix, const PipelineOptions& opts);
void cmd_pipeline(const Manifest& manifest, const TaskConfig& cfg, const std::string& model_path,
                  const std::string& policy_path, const std::string& out_dir,
                  const PipelineOptions& opts);
/// Round-robin fold assignment within each subtype cluster.
void cmd_folds(const Manifest& manifest, const TaskConfig& cfg, const std::string& model_path,
               int n_folds, const std::string& out_csv, const PipelineOptions& opts);

}  // namespace tseg

#endif
