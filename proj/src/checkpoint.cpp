#include "dapas/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dapas {

namespace {
constexpr char kMagic[8] = {'D', 'A', 'P', 'A', 'S', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return v;
}
}  // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors) {
        if (n == name) return t;
    }
    throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");

    nlohmann::json header;
    header["version"] = ckpt.version;
    header["model"] = ckpt.model_kind;
    header["config"] = ckpt.config;
    header["meta"] = ckpt.meta;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, t] : ckpt.tensors) {
        manifest.push_back({{"name", name},
                            {"shape", {t.shape.n, t.shape.c, t.shape.h, t.shape.w}}});
    }
    header["tensors"] = manifest;
    const std::string hs = header.dump();

    out.write(kMagic, sizeof(kMagic));
    write_pod(out, static_cast<std::uint64_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("'" + path.string() + "' is not a checkpoint file");
    }
    const auto header_len = read_pod<std::uint64_t>(in);
    std::string hs(header_len, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw std::runtime_error("checkpoint: truncated header");
    const nlohmann::json header = nlohmann::json::parse(hs);

    Checkpoint ckpt;
    ckpt.version = header.at("version").get<std::uint32_t>();
    if (ckpt.version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint schema version " + std::to_string(ckpt.version) +
                                 " not supported");
    }
    ckpt.model_kind = header.at("model").get<std::string>();
    ckpt.config = header.at("config");
    ckpt.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
        const auto shape = entry.at("shape");
        Tensor t(Shape4{shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>(),
                        shape.at(3).get<int>()});
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
        ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(t));
    }
    return ckpt;
}

}  // namespace dapas
