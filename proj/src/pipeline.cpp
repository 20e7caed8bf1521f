#include "tseg/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "tseg/fusion.hpp"
#include "tseg/metrics.hpp"
#include "tseg/nifti.hpp"
#include "tseg/postproc.hpp"
#include "tseg/subtype.hpp"

namespace fs = std::filesystem;

namespace tseg {
namespace {

int effective_jobs(const PipelineOptions& opts) {
    return opts.jobs > 0 ? opts.jobs : omp_get_max_threads();
}

void check_failures(const std::vector<std::string>& errors, const PipelineOptions& opts) {
    for (const auto& e : errors)
        if (!e.empty()) std::cerr << "error: " << e << '\n';
    if (!opts.strict) return;
    for (const auto& e : errors)
        if (!e.empty()) throw ProcessingError("failed cases present (strict mode)");
}

std::string stack_channel_path(const std::string& dir, const std::string& case_id,
                               const std::string& channel) {
    std::string base = dir + "/" + case_id + "_" + channel;
    if (fs::exists(base + ".nii.gz")) return base + ".nii.gz";
    if (fs::exists(base + ".nii")) return base + ".nii";
    throw std::runtime_error("probability channel not found: " + base + ".nii[.gz]");
}

ProbabilityStack load_case_stack(const ManifestCase& mc, const std::string& model,
                                 const TaskConfig& cfg) {
    auto it = mc.probabilities.find(model);
    if (it == mc.probabilities.end())
        throw std::runtime_error("case " + mc.id + ": no probability directory for model " + model);
    ProbabilityStack stack;
    stack.channel_names = cfg.channel_names();
    bool first = true;
    for (const auto& channel : stack.channel_names) {
        Volume v = read_volume(stack_channel_path(it->second, mc.id, channel));
        if (first) {
            stack.geom = v.geom;
            first = false;
        } else if (!geometry_close(stack.geom, v.geom)) {
            throw std::runtime_error("case " + mc.id + ": channel geometry mismatch in model " +
                                     model);
        }
        stack.channels.push_back(std::move(v.data));
    }
    return stack;
}

LabelVolume ensemble_case(const ManifestCase& mc, const TaskConfig& cfg) {
    std::vector<ProbabilityStack> stacks;
    std::vector<std::pair<std::string, double>> used;
    for (const auto& [model, weight] : cfg.weights.entries) {
        if (weight <= 0 && !mc.probabilities.count(model)) continue;  // zero-weight model may be absent
        stacks.push_back(load_case_stack(mc, model, cfg));
        used.emplace_back(model, weight);
    }
    if (stacks.empty()) throw std::runtime_error("case " + mc.id + ": no probability stacks");
    ProbabilityStack fused = fuse(stacks, EnsembleWeights(used));
    return argmax_labels(fused, cfg.alphabet);
}

Mask wt_mask_of(const LabelVolume& lv, const TaskConfig& cfg) {
    const std::string region =
        cfg.region_spec.has_region("WT") ? "WT" : cfg.region_spec.regions.front().first;
    return region_mask(lv, cfg.region_spec, region);
}

std::vector<Volume> load_sequences(const ManifestCase& mc, const TaskConfig& cfg) {
    std::vector<Volume> seqs;
    for (const auto& name : cfg.sequence_names) {
        auto it = mc.sequences.find(name);
        if (it == mc.sequences.end())
            throw std::runtime_error("case " + mc.id + ": missing sequence " + name);
        seqs.push_back(read_volume(it->second));
    }
    return seqs;
}

FeatureVector case_features(const ManifestCase& mc, const TaskConfig& cfg,
                            const LabelVolume& wt_source_labels) {
    return extract_case_features(load_sequences(mc, cfg), wt_mask_of(wt_source_labels, cfg),
                                 cfg.radiomics_config());
}

int cluster_of(const ManifestCase& mc, const TaskConfig& cfg, const LabelVolume& labels,
               const SubtypeModel& model) {
    return assign_subtype(model, case_features(mc, cfg, labels));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory " + dir);
}

}  // namespace

void cmd_features(const Manifest& manifest, const TaskConfig& cfg, const std::string& out_csv,
                  const PipelineOptions& opts) {
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<FeatureVector> features(n);
    std::vector<std::string> errors(n), skipped(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        try {
            LabelVolume src;
            if (opts.wt_source == "prediction") {
                if (!mc.prediction) throw std::runtime_error("case " + mc.id + ": no prediction path");
                src = read_label_volume(*mc.prediction, cfg.alphabet);
            } else {
                if (!mc.ground_truth) throw std::runtime_error("case " + mc.id + ": no ground truth path");
                src = read_label_volume(*mc.ground_truth, cfg.alphabet);
            }
            if (wt_mask_of(src, cfg).empty_mask()) {
                skipped[i] = mc.id;
            } else {
                features[i] = case_features(mc, cfg, src);
            }
        } catch (const std::exception& e) {
            errors[i] = std::string(e.what());
        }
    }

    FeatureMatrix m;
    m.feature_names = canonical_feature_names(cfg.radiomics_config());
    for (std::int64_t i = 0; i < n; ++i) {
        if (features[i].empty()) continue;
        m.case_ids.push_back(manifest.cases[i].id);
        std::vector<double> row;
        for (const auto& [name, v] : features[i]) {
            (void)name;
            row.push_back(v);
        }
        m.rows.push_back(std::move(row));
    }
    write_feature_csv(m, out_csv);

    std::ofstream sidecar(out_csv + ".skipped.txt");
    for (const auto& s : skipped)
        if (!s.empty()) {
            sidecar << s << '\n';
            std::cerr << "warning: case " << s << " skipped (empty WT)\n";
        }
    check_failures(errors, opts);
}

void cmd_cluster_fit(const std::string& features_csv, const TaskConfig& cfg,
                     const std::string& model_out, const PipelineOptions& opts) {
    FeatureMatrix X = read_feature_csv(features_csv);
    SubtypeFitConfig fit_cfg = cfg.subtype;
    fit_cfg.seed = opts.seed;
    if (X.n() < static_cast<std::size_t>(fit_cfg.k_min) + 1)
        throw std::runtime_error("cluster fit: too few cases for k range");
    fit_cfg.k_max = std::min<int>(fit_cfg.k_max, static_cast<int>(X.n()) - 1);
    save_model(fit_subtype_model(X, fit_cfg), model_out);
}

void cmd_ensemble(const Manifest& manifest, const TaskConfig& cfg, const std::string& out_dir,
                  const PipelineOptions& opts) {
    ensure_dir(out_dir);
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        const std::string out = out_dir + "/" + mc.id + ".nii.gz";
        if (opts.resume && fs::exists(out)) continue;
        try {
            write_label_volume(ensemble_case(mc, cfg), out);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    check_failures(errors, opts);
}

void cmd_postproc_fit(const Manifest& manifest, const TaskConfig& cfg,
                      const std::string& model_path, const std::string& policy_out,
                      const PipelineOptions& opts) {
    SubtypeModel model = load_model(model_path);
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<FitCase> slots(n);
    std::vector<char> ok(n, 0);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        try {
            if (!mc.ground_truth) {
                errors[i] = "case " + mc.id + ": no ground truth; excluded from fit";
                continue;
            }
            FitCase fc;
            fc.case_id = mc.id;
            fc.prediction = mc.prediction ? read_label_volume(*mc.prediction, cfg.alphabet)
                                          : ensemble_case(mc, cfg);
            fc.ground_truth = read_label_volume(*mc.ground_truth, cfg.alphabet);
            fc.cluster = cluster_of(mc, cfg, fc.prediction, model);
            slots[i] = std::move(fc);
            ok[i] = 1;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    std::vector<FitCase> cases;
    for (std::int64_t i = 0; i < n; ++i)
        if (ok[i]) cases.push_back(std::move(slots[i]));
    if (cases.empty()) throw std::runtime_error("postproc fit: no usable cases");

    FitAudit audit;
    ThresholdPolicy policy = fit_policy(cases, cfg.postproc, cfg.region_spec, cfg.metrics, &audit);
    policy.provenance = "fit on " + std::to_string(cases.size()) + " cases, config " + config_hash(cfg);
    save_policy(policy, policy_out);
    write_fit_audit_csv(audit, policy_out + ".audit.csv");
    check_failures(errors, opts);
}

void cmd_postproc_apply(const Manifest& manifest, const TaskConfig& cfg,
                        const std::string& model_path, const std::string& policy_path,
                        const std::string& pred_dir, const std::string& out_dir,
                        const PipelineOptions& opts) {
    SubtypeModel model = load_model(model_path);
    ThresholdPolicy policy = load_policy(policy_path);
    policy.validate(cfg.alphabet);
    ensure_dir(out_dir);
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        const std::string out = out_dir + "/" + mc.id + ".nii.gz";
        if (opts.resume && fs::exists(out)) continue;
        try {
            std::string pred_path;
            if (!pred_dir.empty())
                pred_path = pred_dir + "/" + mc.id + ".nii.gz";
            else if (mc.prediction)
                pred_path = *mc.prediction;
            else
                throw std::runtime_error("case " + mc.id + ": no prediction source");
            LabelVolume pred = read_label_volume(pred_path, cfg.alphabet);
            if (wt_mask_of(pred, cfg).empty_mask()) {
                std::cerr << "warning: case " << mc.id << ": empty WT, policy not applied\n";
                write_label_volume(pred, out);
            } else {
                int cluster = cluster_of(mc, cfg, pred, model);
                write_label_volume(apply_policy(pred, cluster, policy), out);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    check_failures(errors, opts);
}

void cmd_evaluate(const Manifest& manifest, const TaskConfig& cfg, const std::string& pred_dir,
                  const std::string& out_prefix, const PipelineOptions& opts) {
    if (manifest.cases.empty()) throw std::runtime_error("evaluate: empty manifest");
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<CaseReport> reports(n);
    std::vector<char> ok(n, 0);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        try {
            if (!mc.ground_truth) throw std::runtime_error("case " + mc.id + ": no ground truth");
            std::string pred_path = !pred_dir.empty() ? pred_dir + "/" + mc.id + ".nii.gz"
                                    : mc.prediction   ? *mc.prediction
                                                      : "";
            if (pred_path.empty()) throw std::runtime_error("case " + mc.id + ": no prediction");
            LabelVolume pred = read_label_volume(pred_path, cfg.alphabet);
            LabelVolume gt = read_label_volume(*mc.ground_truth, cfg.alphabet);
            reports[i] = evaluate_case(pred, gt, cfg.region_spec, cfg.metrics);
            reports[i].case_id = mc.id;
            ok[i] = 1;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    std::vector<CaseReport> kept;
    for (std::int64_t i = 0; i < n; ++i)
        if (ok[i]) kept.push_back(std::move(reports[i]));
    if (kept.empty()) throw std::runtime_error("evaluate: no cases evaluated");
    DatasetReport rep = evaluate_dataset(kept);
    write_case_report_csv(rep, out_prefix + "_cases.csv");
    write_aggregate_csv(rep, out_prefix + "_aggregate.csv");
    check_failures(errors, opts);
}

void cmd_pipeline(const Manifest& manifest, const TaskConfig& cfg, const std::string& model_path,
                  const std::string& policy_path, const std::string& out_dir,
                  const PipelineOptions& opts) {
    ensure_dir(out_dir);
    const std::string ens_dir = out_dir + "/ensemble";
    const std::string final_dir = out_dir + "/final";
    ensure_dir(ens_dir);
    ensure_dir(final_dir);

    SubtypeModel model = load_model(model_path);
    ThresholdPolicy policy = load_policy(policy_path);
    policy.validate(cfg.alphabet);

    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<int> clusters(n, -1);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        try {
            const std::string ens_path = ens_dir + "/" + mc.id + ".nii.gz";
            LabelVolume pred;
            if (opts.resume && fs::exists(ens_path)) {
                pred = read_label_volume(ens_path, cfg.alphabet);
            } else {
                pred = ensemble_case(mc, cfg);
                write_label_volume(pred, ens_path);
            }
            const std::string final_path = final_dir + "/" + mc.id + ".nii.gz";
            if (wt_mask_of(pred, cfg).empty_mask()) {
                write_label_volume(pred, final_path);
            } else {
                clusters[i] = cluster_of(mc, cfg, pred, model);
                write_label_volume(apply_policy(pred, clusters[i], policy), final_path);
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    bool all_gt = std::all_of(manifest.cases.begin(), manifest.cases.end(),
                              [](const ManifestCase& c) { return c.ground_truth.has_value(); });
    bool any_error = std::any_of(errors.begin(), errors.end(),
                                 [](const std::string& e) { return !e.empty(); });
    if (all_gt && !any_error && n > 0)
        cmd_evaluate(manifest, cfg, final_dir, out_dir + "/report", opts);

    nlohmann::json summary;
    summary["tool_version"] = kToolVersion;
    summary["task"] = cfg.task;
    summary["config_hash"] = config_hash(cfg);
    summary["seed"] = opts.seed;
    summary["cases"] = nlohmann::json::array();
    for (std::int64_t i = 0; i < n; ++i)
        summary["cases"].push_back({{"id", manifest.cases[i].id},
                                    {"cluster", clusters[i]},
                                    {"ok", errors[i].empty()}});
    std::ofstream out(out_dir + "/run_summary.json");
    out << summary.dump(2) << '\n';

    check_failures(errors, opts);
}

void cmd_folds(const Manifest& manifest, const TaskConfig& cfg, const std::string& model_path,
               int n_folds, const std::string& out_csv, const PipelineOptions& opts) {
    if (n_folds < 1) throw std::runtime_error("folds: need at least 1 fold");
    SubtypeModel model = load_model(model_path);
    const auto n = static_cast<std::int64_t>(manifest.cases.size());
    std::vector<int> clusters(n, -1);
    std::vector<std::string> errors(n);

#pragma omp parallel for schedule(dynamic) num_threads(effective_jobs(opts))
    for (std::int64_t i = 0; i < n; ++i) {
        const ManifestCase& mc = manifest.cases[i];
        try {
            if (!mc.ground_truth) throw std::runtime_error("case " + mc.id + ": no ground truth");
            LabelVolume gt = read_label_volume(*mc.ground_truth, cfg.alphabet);
            clusters[i] = cluster_of(mc, cfg, gt, model);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    // Round-robin within each cluster; cases are already id-sorted.
    std::map<int, int> next_fold;
    std::ofstream out(out_csv);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    out << "case_id,cluster,fold\n";
    for (std::int64_t i = 0; i < n; ++i) {
        if (clusters[i] < 0) continue;
        int fold = next_fold[clusters[i]]++ % n_folds;
        out << manifest.cases[i].id << ',' << clusters[i] << ',' << fold << '\n';
    }
    check_failures(errors, opts);
}

}  // namespace tseg
