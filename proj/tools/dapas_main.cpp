#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dapas/cli.hpp"
#include "dapas/version.hpp"

namespace {

std::optional<std::uint64_t> seed_from_env() {
    const char* env = std::getenv("DAPAS_SEED");
    if (!env || !*env) return std::nullopt;
    try {
        return std::stoull(env);
    } catch (const std::exception&) {
        throw std::runtime_error("DAPAS_SEED is not a valid unsigned integer");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dapas: gradient attacks, denoiser purification and mIoU-ratio evaluation for "
                 "semantic segmentation"};
    app.set_version_flag("--version", dapas::kToolkitVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string segmenter_ckpt;
    std::vector<std::string> dae_ckpts;
    std::string attacks_dir;
    std::vector<std::string> metrics_files;
    std::string out_dir = "report";

    CLI::App* train_dae = app.add_subcommand("train-dae", "train the denoising autoencoder");
    train_dae->add_option("--config", config_path, "experiment config JSON")->required();

    CLI::App* train_seg =
        app.add_subcommand("train-segmenter", "train the reference segmenter to its gate");
    train_seg->add_option("--config", config_path, "experiment config JSON")->required();

    CLI::App* attack = app.add_subcommand("attack", "generate adversarial images for the grid");
    attack->add_option("--config", config_path, "experiment config JSON")->required();
    attack->add_option("--segmenter", segmenter_ckpt, "victim segmenter checkpoint")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "compute mIoU ratios for clean and "
                                                        "adversarial datasets");
    evaluate->add_option("--config", config_path, "experiment config JSON")->required();
    evaluate->add_option("--dae", dae_ckpts,
                         "denoiser checkpoint (repeatable); 'identity' for a pass-through");
    evaluate->add_option("--segmenter", segmenter_ckpt, "segmenter checkpoint")->required();
    evaluate->add_option("--attacks", attacks_dir, "directory written by the attack command");

    CLI::App* report = app.add_subcommand("report", "plots and summary from metrics files");
    report->add_option("metrics", metrics_files, "metrics JSON files")->required();
    report->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        dapas::cli::CommandContext ctx;
        ctx.config_path = config_path;
        ctx.seed_override = seed_from_env();

        if (train_dae->parsed()) return dapas::cli::cmd_train_dae(ctx);
        if (train_seg->parsed()) return dapas::cli::cmd_train_segmenter(ctx);
        if (attack->parsed()) return dapas::cli::cmd_attack(ctx, segmenter_ckpt);
        if (evaluate->parsed()) {
            return dapas::cli::cmd_evaluate(ctx, dae_ckpts, segmenter_ckpt, attacks_dir);
        }
        if (report->parsed()) {
            std::vector<std::filesystem::path> files(metrics_files.begin(), metrics_files.end());
            return dapas::cli::cmd_report(files, out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
