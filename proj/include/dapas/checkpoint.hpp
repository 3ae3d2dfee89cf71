#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dapas/tensor.hpp"

#include "json.hpp"

namespace dapas {

constexpr std::uint32_t kCheckpointVersion = 1;

/// Versioned checkpoint container: a magic tag, a JSON header (model kind,
/// config, tensor manifest, free-form metadata), then raw little-endian
/// double blobs in manifest order. Round-trips exactly.
struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    std::string model_kind;
    nlohmann::json config;
    nlohmann::json meta;
    std::vector<std::pair<std::string, Tensor>> tensors;

    const Tensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dapas
