#include <CLI11.hpp>

#include <iostream>

#include "tseg/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string manifest_path;
    std::string config_path;  // preset name or config JSON path
    tseg::PipelineOptions opts;
};

tseg::TaskConfig resolve_config(const std::string& spec) {
    if (spec == "ped" || spec == "men-rt" || spec == "met") return tseg::task_preset(spec);
    return tseg::load_task_config(spec);
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_manifest = true) {
    if (needs_manifest)
        cmd->add_option("--manifest", args.manifest_path, "Manifest JSON")->required();
    cmd->add_option("--config", args.config_path,
                    "Task preset (ped|men-rt|met) or task config JSON path")
        ->required();
    cmd->add_flag("--strict", args.opts.strict, "Fail on any per-case error");
    cmd->add_option("--jobs", args.opts.jobs, "Case-level parallelism (0 = all cores)");
    cmd->add_option("--seed", args.opts.seed, "Seed for fitting operations");
    cmd->add_flag("--resume", args.opts.resume, "Reuse existing stage artifacts");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tumor segmentation toolkit: radiomic subtyping, probability ensembling, "
                 "adaptive post-processing, and lesion-wise evaluation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string out, model_path, policy_path, pred_dir, features_csv;
    int n_folds = 5;

    auto* features = app.add_subcommand("features", "Extract radiomic features per case");
    add_common(features, args);
    features->add_option("--out", out, "Output feature CSV")->required();
    features->add_option("--wt-source", args.opts.wt_source,
                         "WT mask source: gt or prediction (default gt)");

    auto* cluster_fit = app.add_subcommand("cluster-fit", "Fit the subtype model from a feature CSV");
    add_common(cluster_fit, args, false);
    cluster_fit->add_option("--features", features_csv, "Feature CSV")->required();
    cluster_fit->add_option("--out", out, "Output model JSON")->required();

    auto* ensemble = app.add_subcommand("ensemble", "Weighted probability fusion + argmax labels");
    add_common(ensemble, args);
    ensemble->add_option("--out", out, "Output directory")->required();

    auto* ppfit = app.add_subcommand("postproc-fit", "Fit the subtype-adaptive threshold policy");
    add_common(ppfit, args);
    ppfit->add_option("--model", model_path, "Subtype model JSON")->required();
    ppfit->add_option("--out", out, "Output policy JSON")->required();

    auto* ppapply = app.add_subcommand("postproc-apply", "Apply a fitted threshold policy");
    add_common(ppapply, args);
    ppapply->add_option("--model", model_path, "Subtype model JSON")->required();
    ppapply->add_option("--policy", policy_path, "Threshold policy JSON")->required();
    ppapply->add_option("--pred-dir", pred_dir, "Directory of <case>.nii.gz predictions");
    ppapply->add_option("--out", out, "Output directory")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Lesion-wise evaluation reports");
    add_common(evaluate, args);
    evaluate->add_option("--pred-dir", pred_dir, "Directory of <case>.nii.gz predictions");
    evaluate->add_option("--out", out, "Report path prefix")->required();

    auto* pipeline = app.add_subcommand("pipeline", "Full ensemble + post-processing pipeline");
    add_common(pipeline, args);
    pipeline->add_option("--model", model_path, "Subtype model JSON")->required();
    pipeline->add_option("--policy", policy_path, "Threshold policy JSON")->required();
    pipeline->add_option("--out", out, "Output directory")->required();

    auto* folds = app.add_subcommand("folds", "Round-robin fold assignment by subtype");
    add_common(folds, args);
    folds->add_option("--model", model_path, "Subtype model JSON")->required();
    folds->add_option("--folds", n_folds, "Number of folds (default 5)");
    folds->add_option("--out", out, "Output CSV")->required();

    CLI11_PARSE(app, argc, argv);

    tseg::TaskConfig cfg;
    tseg::Manifest manifest;
    try {
        cfg = resolve_config(args.config_path);
        if (!args.manifest_path.empty()) manifest = tseg::load_manifest(args.manifest_path);
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (features->parsed())
            tseg::cmd_features(manifest, cfg, out, args.opts);
        else if (cluster_fit->parsed())
            tseg::cmd_cluster_fit(features_csv, cfg, out, args.opts);
        else if (ensemble->parsed())
            tseg::cmd_ensemble(manifest, cfg, out, args.opts);
        else if (ppfit->parsed())
            tseg::cmd_postproc_fit(manifest, cfg, model_path, out, args.opts);
        else if (ppapply->parsed())
            tseg::cmd_postproc_apply(manifest, cfg, model_path, policy_path, pred_dir, out, args.opts);
        else if (evaluate->parsed())
            tseg::cmd_evaluate(manifest, cfg, pred_dir, out, args.opts);
        else if (pipeline->parsed())
            tseg::cmd_pipeline(manifest, cfg, model_path, policy_path, out, args.opts);
        else if (folds->parsed())
            tseg::cmd_folds(manifest, cfg, model_path, n_folds, out, args.opts);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
