#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/dae.hpp"
#include "dapas/pipeline.hpp"
#include "dapas/training.hpp"

#include "json.hpp"

namespace dapas {

/// The attack grid epsilons studied in the evaluation: 0.001 ... 0.032.
const std::vector<double>& default_epsilon_grid();

struct DatasetConfig {
    std::string source = "synthetic";  // "synthetic" | "voc"
    int count = 200;                   // synthetic train size
    int val_count = 40;                // synthetic val size
    std::pair<int, int> resolution{64, 64};
    int num_classes = 4;
    int ignore_index = kDefaultIgnoreIndex;
    std::filesystem::path root;  // voc only
};

struct SegmenterConfig {
    std::string kind = "reference";  // "reference" | "external"
    int base_channels = 16;
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 8;
    double miou_gate = 0.85;
    // External adapters declare their contract here; running one requires
    // embedding via the library API.
    std::optional<SegmenterInfo> external;
};

struct AttackGridConfig {
    std::vector<AttackFamily> families{AttackFamily::Fgsm, AttackFamily::Ifgsm};
    std::vector<double> epsilons;  // defaults to default_epsilon_grid()
    double alpha = kDefaultIfgsmAlpha;
    bool targeted = false;
    int count = 40;  // number of validation images to attack
};

struct EvaluationConfig {
    int max_images = 0;  // 0 = all
};

struct OutputConfig {
    std::filesystem::path dir = "out";
    std::vector<std::string> formats{"json", "csv", "png"};
};

/// Experiment file: a strict-schema JSON document. Unknown keys anywhere
/// are rejected with a diagnostic naming the offending key.
struct ExperimentConfig {
    std::uint64_t seed = 7;
    DatasetConfig dataset;
    DAEConfig dae;
    TrainConfig dae_train;
    SegmenterConfig segmenter;
    AttackGridConfig attack;
    EvaluationConfig evaluation;
    OutputConfig output;

    /// Epsilons above the studied regime and similar non-fatal findings.
    std::vector<std::string> warnings;

    void validate();
    nlohmann::json to_json() const;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

NoiseSpec noise_spec_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json noise_spec_to_json(const NoiseSpec& spec);

/// FNV-1a 64-bit hash, hex-encoded; used for config and artifact hashes in
/// run manifests.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::filesystem::path& path);
std::string config_hash(const ExperimentConfig& config);

}  // namespace dapas
