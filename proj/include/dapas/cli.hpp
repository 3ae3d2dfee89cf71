#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dapas/config.hpp"

namespace dapas::cli {

/// Shared command inputs. seed_override (from DAPAS_SEED) replaces the
/// config's seed and the derived training seed.
struct CommandContext {
    std::filesystem::path config_path;
    std::optional<std::uint64_t> seed_override;
};

/// Trains the denoiser; writes checkpoint, history CSV and a run manifest.
int cmd_train_dae(const CommandContext& ctx);

/// Trains the reference segmenter to its quality gate; writes checkpoint
/// and manifest.
int cmd_train_segmenter(const CommandContext& ctx);

/// Generates adversarial PNGs for every (family, epsilon) in the grid
/// against the given segmenter; writes per-run manifest with measured
/// L-inf deltas. Aborts nonzero if the budget invariant is violated.
int cmd_attack(const CommandContext& ctx, const std::filesystem::path& segmenter_ckpt);

/// Computes mIoU_CO / mIoU_AO / mIoU_CP / mIoU_AP and the three ratios per
/// (family, epsilon, distribution) cell; writes metrics JSON + table CSVs.
/// dae_ckpts entries are checkpoint paths, or the sentinel "identity" for a
/// pass-through purifier.
int cmd_evaluate(const CommandContext& ctx, const std::vector<std::string>& dae_ckpts,
                 const std::filesystem::path& segmenter_ckpt,
                 const std::filesystem::path& attacks_dir);

/// Renders ratio-vs-epsilon curves and a text summary from metrics files.
int cmd_report(const std::vector<std::filesystem::path>& metrics_files,
               const std::filesystem::path& out_dir);

}  // namespace dapas::cli
