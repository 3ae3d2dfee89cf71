#include "dapas/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace dapas {

const std::vector<double>& default_epsilon_grid() {
    static const std::vector<double> grid{0.001, 0.002, 0.004, 0.008, 0.016, 0.032};
    return grid;
}

namespace {

/// Tracks which keys of a JSON object were consumed; leftover keys are
/// schema violations and get reported with their full path.
class StrictObject {
public:
    StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw std::invalid_argument("config: '" + path_ + "' must be an object");
        }
    }

    const nlohmann::json* find(const std::string& key) {
        consumed_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        const nlohmann::json* v = find(key);
        if (!v) return fallback;
        try {
            return v->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument("config: bad value type for '" + sub(key) + "'");
        }
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!consumed_.contains(key)) {
                throw std::invalid_argument("config: unknown key '" + sub(key) + "'");
            }
        }
    }

    std::string sub(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

std::pair<int, int> parse_resolution(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) {
        throw std::invalid_argument("config: '" + path + "' must be [height, width]");
    }
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

NoiseSpec noise_spec_from_json(const nlohmann::json& j, const std::string& path) {
    StrictObject o(j, path);
    const nlohmann::json* kind_v = o.find("kind");
    if (!kind_v) throw std::invalid_argument("config: '" + path + "' needs a 'kind'");
    const NoiseKind kind = noise_kind_from_string(kind_v->get<std::string>());
    NoiseSpec spec;
    switch (kind) {
        case NoiseKind::Gaussian:
            spec = NoiseSpec::gaussian(o.get_or<double>("mean", 0.0),
                                       o.get_or<double>("std", 0.004));
            break;
        case NoiseKind::Uniform:
            spec = NoiseSpec::uniform(o.get_or<double>("low", -0.035),
                                      o.get_or<double>("high", 0.035));
            break;
        case NoiseKind::Bimodal: {
            std::pair<double, double> centers{-0.024, 0.024};
            std::pair<double, double> weights{0.5, 0.5};
            if (const nlohmann::json* c = o.find("centers")) {
                centers = {c->at(0).get<double>(), c->at(1).get<double>()};
            }
            if (const nlohmann::json* w = o.find("weights")) {
                weights = {w->at(0).get<double>(), w->at(1).get<double>()};
            }
            spec = NoiseSpec::bimodal(centers.first, centers.second,
                                      o.get_or<double>("std", 0.004), weights.first,
                                      weights.second);
            break;
        }
    }
    o.finish();
    return spec;
}

nlohmann::json noise_spec_to_json(const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::Gaussian:
            return {{"kind", "gaussian"}, {"mean", spec.mean}, {"std", spec.std}};
        case NoiseKind::Uniform:
            return {{"kind", "uniform"}, {"low", spec.low}, {"high", spec.high}};
        case NoiseKind::Bimodal:
        default:
            return {{"kind", "bimodal"},
                    {"centers", {spec.mode_centers.first, spec.mode_centers.second}},
                    {"std", spec.std},
                    {"weights", {spec.mode_weights.first, spec.mode_weights.second}}};
    }
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    StrictObject root(j, "");

    cfg.seed = root.get_or<std::uint64_t>("seed", 7);

    if (const nlohmann::json* d = root.find("dataset")) {
        StrictObject o(*d, "dataset");
        cfg.dataset.source = o.get_or<std::string>("source", "synthetic");
        cfg.dataset.count = o.get_or<int>("count", 200);
        cfg.dataset.val_count = o.get_or<int>("val_count", 40);
        if (const nlohmann::json* r = o.find("resolution")) {
            cfg.dataset.resolution = parse_resolution(*r, "dataset.resolution");
        }
        cfg.dataset.num_classes = o.get_or<int>("num_classes", 4);
        cfg.dataset.ignore_index = o.get_or<int>("ignore_index", kDefaultIgnoreIndex);
        cfg.dataset.root = o.get_or<std::string>("root", "");
        o.finish();
    }

    cfg.dae.resolution = cfg.dataset.resolution;
    if (const nlohmann::json* d = root.find("dae")) {
        StrictObject o(*d, "dae");
        cfg.dae.input_channels = o.get_or<int>("input_channels", 3);
        cfg.dae.base_channels = o.get_or<int>("base_channels", 64);
        cfg.dae.channel_schedule = DAEConfig::schedule_from_base(cfg.dae.base_channels);
        if (const nlohmann::json* s = o.find("channel_schedule")) {
            if (!s->is_array() || s->size() != 5) {
                throw std::invalid_argument(
                    "config: 'dae.channel_schedule' must list five channel counts");
            }
            for (std::size_t i = 0; i < 5; ++i) {
                cfg.dae.channel_schedule[i] = s->at(i).get<int>();
            }
        }
        cfg.dae.kernel_size = o.get_or<int>("kernel_size", 4);
        if (const nlohmann::json* r = o.find("resolution")) {
            cfg.dae.resolution = parse_resolution(*r, "dae.resolution");
        }
        if (const nlohmann::json* t = o.find("train")) {
            StrictObject to(*t, "dae.train");
            if (const nlohmann::json* n = to.find("noise")) {
                cfg.dae_train.noise_spec = noise_spec_from_json(*n, "dae.train.noise");
            }
            cfg.dae_train.clean_probability = to.get_or<double>("clean_probability", 0.5);
            cfg.dae_train.learning_rate = to.get_or<double>("learning_rate", 5e-4);
            cfg.dae_train.epochs = to.get_or<int>("epochs", 20);
            cfg.dae_train.batch_size = to.get_or<int>("batch_size", 8);
            cfg.dae_train.loss = loss_kind_from_string(to.get_or<std::string>("loss", "mse"));
            cfg.dae_train.seed = to.get_or<std::uint64_t>("seed", cfg.seed);
            to.finish();
        } else {
            cfg.dae_train.seed = cfg.seed;
        }
        o.finish();
    } else {
        cfg.dae_train.seed = cfg.seed;
    }

    if (const nlohmann::json* s = root.find("segmenter")) {
        StrictObject o(*s, "segmenter");
        cfg.segmenter.kind = o.get_or<std::string>("kind", "reference");
        cfg.segmenter.base_channels = o.get_or<int>("base_channels", 16);
        cfg.segmenter.learning_rate = o.get_or<double>("learning_rate", 1e-3);
        cfg.segmenter.epochs = o.get_or<int>("epochs", 30);
        cfg.segmenter.batch_size = o.get_or<int>("batch_size", 8);
        cfg.segmenter.miou_gate = o.get_or<double>("miou_gate", 0.85);
        if (const nlohmann::json* e = o.find("external")) {
            StrictObject eo(*e, "segmenter.external");
            SegmenterInfo info;
            if (const nlohmann::json* r = eo.find("resolution")) {
                info.resolution = parse_resolution(*r, "segmenter.external.resolution");
            }
            info.norm_mean = eo.get_or<std::vector<double>>("norm_mean", {});
            info.norm_std = eo.get_or<std::vector<double>>("norm_std", {});
            info.num_classes = eo.get_or<int>("num_classes", 0);
            info.ignore_index = eo.get_or<int>("ignore_index", kDefaultIgnoreIndex);
            eo.finish();
            cfg.segmenter.external = info;
        }
        o.finish();
    }

    cfg.attack.epsilons = default_epsilon_grid();
    if (const nlohmann::json* a = root.find("attack")) {
        StrictObject o(*a, "attack");
        if (const nlohmann::json* f = o.find("families")) {
            cfg.attack.families.clear();
            for (const auto& fam : *f) {
                cfg.attack.families.push_back(attack_family_from_string(fam.get<std::string>()));
            }
        }
        if (const nlohmann::json* e = o.find("epsilons")) {
            cfg.attack.epsilons = e->get<std::vector<double>>();
        }
        cfg.attack.alpha = o.get_or<double>("alpha", kDefaultIfgsmAlpha);
        cfg.attack.targeted = o.get_or<bool>("targeted", false);
        cfg.attack.count = o.get_or<int>("count", 40);
        o.finish();
    }

    if (const nlohmann::json* e = root.find("evaluation")) {
        StrictObject o(*e, "evaluation");
        cfg.evaluation.max_images = o.get_or<int>("max_images", 0);
        o.finish();
    }

    if (const nlohmann::json* out = root.find("output")) {
        StrictObject o(*out, "output");
        cfg.output.dir = o.get_or<std::string>("dir", "out");
        cfg.output.formats = o.get_or<std::vector<std::string>>("formats", cfg.output.formats);
        o.finish();
    }

    root.finish();
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() {
    warnings.clear();

    if (dataset.source != "synthetic" && dataset.source != "voc") {
        throw std::invalid_argument("config: dataset.source must be 'synthetic' or 'voc'");
    }
    if (dataset.source == "voc" && dataset.root.empty()) {
        throw std::invalid_argument("config: dataset.root required for the voc source");
    }
    if (dataset.count < 1 || dataset.val_count < 1) {
        throw std::invalid_argument("config: dataset sizes must be >= 1");
    }
    if (dataset.num_classes < 2) {
        throw std::invalid_argument("config: dataset.num_classes must be >= 2");
    }
    const auto [h, w] = dataset.resolution;
    if (h % kResolutionDivisor != 0 || w % kResolutionDivisor != 0 || h < kResolutionDivisor ||
        w < kResolutionDivisor) {
        throw std::invalid_argument("config: dataset.resolution must be divisible by 32");
    }

    dae.validate();
    dae_train.validate();

    if (segmenter.kind != "reference" && segmenter.kind != "external") {
        throw std::invalid_argument("config: segmenter.kind must be 'reference' or 'external'");
    }
    if (segmenter.kind == "external" && !segmenter.external) {
        throw std::invalid_argument(
            "config: segmenter.kind 'external' needs a segmenter.external block");
    }

    if (attack.families.empty()) {
        throw std::invalid_argument("config: attack.families cannot be empty");
    }
    if (attack.epsilons.empty()) {
        throw std::invalid_argument("config: attack.epsilons cannot be empty");
    }
    for (double eps : attack.epsilons) {
        if (!(eps > 0.0) || eps > 1.0) {
            throw std::invalid_argument("config: attack epsilon " + std::to_string(eps) +
                                        " must lie in (0, 1]");
        }
        if (eps > kStudiedEpsilonLimit + 1e-12) {
            std::ostringstream os;
            os << "attack epsilon " << eps << " exceeds the studied regime (<= 0.032)";
            warnings.push_back(os.str());
        }
    }
    if (!(attack.alpha > 0.0)) {
        throw std::invalid_argument("config: attack.alpha must be > 0");
    }
    if (attack.count < 1) {
        throw std::invalid_argument("config: attack.count must be >= 1");
    }

    if (evaluation.max_images < 0) {
        throw std::invalid_argument("config: evaluation.max_images must be >= 0");
    }

    if (output.dir.empty()) {
        throw std::invalid_argument("config: output.dir cannot be empty");
    }
    for (const std::string& f : output.formats) {
        if (f != "json" && f != "csv" && f != "png") {
            throw std::invalid_argument("config: unknown output format '" + f + "'");
        }
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["dataset"] = {{"source", dataset.source},
                    {"count", dataset.count},
                    {"val_count", dataset.val_count},
                    {"resolution", {dataset.resolution.first, dataset.resolution.second}},
                    {"num_classes", dataset.num_classes},
                    {"ignore_index", dataset.ignore_index},
                    {"root", dataset.root.string()}};
    j["dae"] = dae.to_json();
    j["dae"]["train"] = {{"noise", noise_spec_to_json(dae_train.noise_spec)},
                         {"clean_probability", dae_train.clean_probability},
                         {"learning_rate", dae_train.learning_rate},
                         {"epochs", dae_train.epochs},
                         {"batch_size", dae_train.batch_size},
                         {"loss", to_string(dae_train.loss)},
                         {"seed", dae_train.seed}};
    j["segmenter"] = {{"kind", segmenter.kind},
                      {"base_channels", segmenter.base_channels},
                      {"learning_rate", segmenter.learning_rate},
                      {"epochs", segmenter.epochs},
                      {"batch_size", segmenter.batch_size},
                      {"miou_gate", segmenter.miou_gate}};
    nlohmann::json fams = nlohmann::json::array();
    for (AttackFamily f : attack.families) fams.push_back(to_string(f));
    j["attack"] = {{"families", fams},
                   {"epsilons", attack.epsilons},
                   {"alpha", attack.alpha},
                   {"targeted", attack.targeted},
                   {"count", attack.count}};
    j["evaluation"] = {{"max_images", evaluation.max_images}};
    j["output"] = {{"dir", output.dir.string()}, {"formats", output.formats}};
    return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j);
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return fnv1a_hex(os.str());
}

std::string config_hash(const ExperimentConfig& config) {
    return fnv1a_hex(config.to_json().dump());
}

}  // namespace dapas
