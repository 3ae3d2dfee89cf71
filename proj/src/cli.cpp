#include "dapas/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "dapas/attacks.hpp"
#include "dapas/metrics.hpp"
#include "dapas/report.hpp"
#include "dapas/rng.hpp"
#include "dapas/version.hpp"

namespace dapas::cli {

namespace fs = std::filesystem;

namespace {

// Seed-stream tags so the dataset, weight init and training draws never share
// an engine state.
constexpr std::uint64_t kTrainSetStream = 0x747261696e;
constexpr std::uint64_t kValSetStream = 0x76616c;
constexpr std::uint64_t kInitStream = 0x696e6974;

ExperimentConfig load_config(const CommandContext& ctx) {
    ExperimentConfig cfg = load_experiment_config(ctx.config_path);
    if (ctx.seed_override) {
        cfg.seed = *ctx.seed_override;
        cfg.dae_train.seed = *ctx.seed_override;
    }
    for (const std::string& w : cfg.warnings) {
        std::cerr << "warning: " << w << "\n";
    }
    return cfg;
}

std::shared_ptr<DatasetHandle> make_dataset(const ExperimentConfig& cfg, bool val) {
    if (cfg.dataset.source == "synthetic") {
        const int count = val ? cfg.dataset.val_count : cfg.dataset.count;
        const std::uint64_t seed = derive_seed(cfg.seed, val ? kValSetStream : kTrainSetStream);
        return synth_shapes(count, cfg.dataset.resolution, cfg.dataset.num_classes, seed);
    }
    return load_voc_dir(cfg.dataset.root, val ? Split::Val : Split::Train,
                        cfg.dataset.resolution, cfg.dataset.num_classes,
                        cfg.dataset.ignore_index);
}

nlohmann::json dataset_provenance(const ExperimentConfig& cfg, bool val) {
    nlohmann::json j;
    j["source"] = cfg.dataset.source;
    j["count"] = val ? cfg.dataset.val_count : cfg.dataset.count;
    j["resolution"] = {cfg.dataset.resolution.first, cfg.dataset.resolution.second};
    j["num_classes"] = cfg.dataset.num_classes;
    j["seed"] = cfg.seed;
    if (cfg.dataset.source == "voc") j["root"] = cfg.dataset.root.string();
    return j;
}

void write_manifest(const fs::path& path, const std::string& command,
                    const ExperimentConfig& cfg, const std::vector<fs::path>& outputs,
                    const nlohmann::json& extra) {
    nlohmann::json j;
    j["command"] = command;
    j["toolkit_version"] = kToolkitVersion;
    j["config_hash"] = config_hash(cfg);
    j["seed"] = cfg.seed;
    j["warnings"] = cfg.warnings;
    nlohmann::json outs = nlohmann::json::array();
    for (const fs::path& p : outputs) {
        outs.push_back({{"path", p.string()}, {"fnv1a", hash_file(p)}});
    }
    j["outputs"] = outs;
    j["extra"] = extra;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

std::string format_eps(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return buf;
}

std::shared_ptr<ReferenceSegmenter> load_reference(const ExperimentConfig& cfg,
                                                   const fs::path& ckpt) {
    if (cfg.segmenter.kind == "external") {
        throw std::runtime_error(
            "segmenter.kind 'external' declares an adapter contract only; running an external "
            "model requires embedding it via the library API (see README)");
    }
    return load_segmenter(ckpt);
}

struct LoadedDefense {
    std::string label;  // noise kind, or "identity"
    std::string checkpoint;
    std::shared_ptr<Purifier> purifier;
};

std::vector<LoadedDefense> load_defenses(const std::vector<std::string>& dae_ckpts) {
    std::vector<LoadedDefense> defenses;
    for (const std::string& entry : dae_ckpts) {
        LoadedDefense d;
        d.checkpoint = entry;
        if (entry == "identity") {
            d.label = "identity";
            d.purifier = std::make_shared<IdentityPurifier>();
        } else {
            nlohmann::json meta;
            auto model = std::make_shared<DAEModel>(load_dae(entry, &meta));
            d.label = meta.contains("noise") && meta["noise"].contains("kind")
                          ? meta["noise"]["kind"].get<std::string>()
                          : "dae";
            d.purifier = model;
        }
        defenses.push_back(std::move(d));
    }
    return defenses;
}

}  // namespace

int cmd_train_dae(const CommandContext& ctx) {
    ExperimentConfig cfg = load_config(ctx);
    const auto train_set = make_dataset(cfg, false);
    const auto val_set = make_dataset(cfg, true);

    DAEModel model = build_dae(cfg.dae, derive_seed(cfg.dae_train.seed, kInitStream));
    const TrainHistory history = train_dae(model, *train_set, *val_set, cfg.dae_train);

    fs::create_directories(cfg.output.dir);
    const std::string kind = to_string(cfg.dae_train.noise_spec.kind);
    const fs::path ckpt_path = cfg.output.dir / ("dae_" + kind + ".ckpt");
    const fs::path history_path = cfg.output.dir / ("dae_" + kind + "_history.csv");

    nlohmann::json meta;
    meta["noise"] = noise_spec_to_json(cfg.dae_train.noise_spec);
    meta["seed"] = cfg.dae_train.seed;
    meta["epochs"] = cfg.dae_train.epochs;
    meta["loss"] = to_string(cfg.dae_train.loss);
    meta["config_hash"] = config_hash(cfg);
    save_dae(ckpt_path, model, meta);
    history.write_csv(history_path);

    nlohmann::json extra;
    extra["dataset"] = dataset_provenance(cfg, false);
    extra["final_val_psnr"] = history.records.back().validation_psnr;
    extra["final_train_loss"] = history.records.back().train_loss;
    write_manifest(cfg.output.dir / ("dae_" + kind + "_manifest.json"), "train-dae", cfg,
                   {ckpt_path, history_path}, extra);

    std::cout << "trained " << kind << " dae: final val psnr "
              << history.records.back().validation_psnr << " dB, checkpoint " << ckpt_path
              << "\n";
    return 0;
}

int cmd_train_segmenter(const CommandContext& ctx) {
    ExperimentConfig cfg = load_config(ctx);
    if (cfg.segmenter.kind != "reference") {
        throw std::runtime_error("train-segmenter only trains the reference segmenter");
    }
    const auto train_set = make_dataset(cfg, false);
    const auto val_set = make_dataset(cfg, true);

    SegTrainConfig tc;
    tc.learning_rate = cfg.segmenter.learning_rate;
    tc.epochs = cfg.segmenter.epochs;
    tc.batch_size = cfg.segmenter.batch_size;
    tc.seed = cfg.seed;
    tc.miou_gate = cfg.segmenter.miou_gate;
    tc.early_stop_miou = std::max(tc.early_stop_miou, cfg.segmenter.miou_gate + 0.03);
    const SegTrainResult result = train_reference_segmenter(*train_set, *val_set, tc);

    fs::create_directories(cfg.output.dir);
    const fs::path ckpt_path = cfg.output.dir / "segmenter.ckpt";
    nlohmann::json meta;
    meta["val_miou"] = result.val_miou;
    meta["epochs_run"] = result.epochs_run;
    meta["seed"] = cfg.seed;
    meta["config_hash"] = config_hash(cfg);
    save_segmenter(ckpt_path, *result.model, meta);

    nlohmann::json extra;
    extra["dataset"] = dataset_provenance(cfg, false);
    extra["val_miou"] = result.val_miou;
    extra["epochs_run"] = result.epochs_run;
    write_manifest(cfg.output.dir / "segmenter_manifest.json", "train-segmenter", cfg,
                   {ckpt_path}, extra);

    std::cout << "trained reference segmenter: val miou " << result.val_miou << " ("
              << result.epochs_run << " epochs), checkpoint " << ckpt_path << "\n";
    return 0;
}

int cmd_attack(const CommandContext& ctx, const fs::path& segmenter_ckpt) {
    ExperimentConfig cfg = load_config(ctx);
    const auto val_set = make_dataset(cfg, true);
    auto segmenter = load_reference(cfg, segmenter_ckpt);

    const std::size_t count =
        std::min<std::size_t>(val_set->size(), static_cast<std::size_t>(cfg.attack.count));
    const fs::path attacks_root = cfg.output.dir / "attacks";
    fs::create_directories(attacks_root);

    nlohmann::json cells = nlohmann::json::array();
    std::vector<fs::path> outputs;
    for (AttackFamily family : cfg.attack.families) {
        for (double eps : cfg.attack.epsilons) {
            AttackSpec spec;
            spec.family = family;
            spec.epsilon = eps;
            spec.alpha = cfg.attack.alpha;
            spec.targeted = cfg.attack.targeted;
            spec.steps = family == AttackFamily::Fgsm ? 1 : step_count(eps);
            spec.validate();

            const std::string cell_dir_name = to_string(family) + "_eps" + format_eps(eps);
            const fs::path cell_dir = attacks_root / cell_dir_name;
            fs::create_directories(cell_dir);

            double max_raw = 0.0;
            double max_png = 0.0;
            nlohmann::json images = nlohmann::json::array();
            for (std::size_t i = 0; i < count; ++i) {
                Sample sample = val_set->get(i);
                SegmentationMask labels = sample.mask;
                if (cfg.attack.targeted) {
                    // Adversary-chosen labels: shift every class by one.
                    for (std::int32_t& v : labels.labels) {
                        if (v != labels.ignore_index) v = (v + 1) % labels.num_classes;
                    }
                }
                const AttackResult result = run_attack(*segmenter, sample.image, labels, spec);
                if (result.linf_delta > eps + 1e-6) {
                    throw std::runtime_error("attack budget invariant violated: linf " +
                                             std::to_string(result.linf_delta) + " > eps " +
                                             std::to_string(eps));
                }
                char name[32];
                std::snprintf(name, sizeof(name), "img_%05zu.png", i);
                const fs::path img_path = cell_dir / name;
                write_png(img_path, image_to_raw(result.adversarial, 0));

                // Re-validate after the 8-bit quantization of the PNG handoff.
                const ImageBatch reloaded = raw_to_image(read_png(img_path));
                const double png_delta = linf_diff(reloaded.data, sample.image.data);
                if (png_delta > eps + 2.0 * kQuantizationBound + 1e-9) {
                    throw std::runtime_error("attack budget invariant violated after "
                                             "quantization: linf " + std::to_string(png_delta));
                }
                max_raw = std::max(max_raw, result.linf_delta);
                max_png = std::max(max_png, png_delta);
                images.push_back({{"file", name},
                                  {"linf_raw", result.linf_delta},
                                  {"linf_png", png_delta}});
            }
            cells.push_back({{"family", to_string(family)},
                             {"epsilon", eps},
                             {"steps", spec.steps},
                             {"alpha", spec.alpha},
                             {"dir", cell_dir_name},
                             {"count", count},
                             {"max_linf_raw", max_raw},
                             {"max_linf_png", max_png},
                             {"images", images}});
            std::cout << "attacked " << count << " images: " << cell_dir_name << " (steps "
                      << spec.steps << ", max linf " << max_raw << ")\n";
        }
    }

    nlohmann::json extra;
    extra["dataset"] = dataset_provenance(cfg, true);
    extra["segmenter_checkpoint"] = segmenter_ckpt.string();
    extra["segmenter_hash"] = hash_file(segmenter_ckpt);
    extra["count"] = count;
    extra["targeted"] = cfg.attack.targeted;
    extra["cells"] = cells;
    write_manifest(attacks_root / "manifest.json", "attack", cfg, outputs, extra);
    return 0;
}

int cmd_evaluate(const CommandContext& ctx, const std::vector<std::string>& dae_ckpts,
                 const fs::path& segmenter_ckpt, const fs::path& attacks_dir) {
    ExperimentConfig cfg = load_config(ctx);
    const auto val_set = make_dataset(cfg, true);
    auto segmenter = load_reference(cfg, segmenter_ckpt);
    std::vector<LoadedDefense> defenses = load_defenses(dae_ckpts);

    nlohmann::json attack_manifest;
    if (!attacks_dir.empty()) {
        std::ifstream in(attacks_dir / "manifest.json");
        if (!in) {
            throw std::runtime_error("no attack manifest under '" + attacks_dir.string() + "'");
        }
        in >> attack_manifest;
        const std::string recorded = attack_manifest.at("extra").at("segmenter_hash");
        if (recorded != hash_file(segmenter_ckpt)) {
            throw std::runtime_error(
                "adversarial images were generated against a different segmenter checkpoint");
        }
    }

    std::size_t count = cfg.evaluation.max_images > 0
                            ? std::min<std::size_t>(val_set->size(), cfg.evaluation.max_images)
                            : val_set->size();
    if (!attacks_dir.empty()) {
        count = std::min<std::size_t>(count,
                                      attack_manifest.at("extra").at("count").get<std::size_t>());
    }

    std::vector<Sample> clean;
    clean.reserve(count);
    for (std::size_t i = 0; i < count; ++i) clean.push_back(val_set->get(i));

    EvaluationDoc doc;
    {
        ConfusionAccumulator acc(val_set->num_classes(), val_set->ignore_index());
        for (const Sample& s : clean) acc.accumulate(segmenter->predict(s.image), s.mask);
        doc.clean_report = make_report(acc);
        doc.miou_co = doc.clean_report->miou;
    }
    if (!(doc.miou_co > 0.0)) {
        throw std::runtime_error("clean/original mIoU is zero; ratios are undefined");
    }

    for (const LoadedDefense& d : defenses) {
        const double miou_cp = evaluate_miou_pairs(*segmenter, clean, d.purifier.get());
        const IouRatios r = iou_ratios(doc.miou_co, std::nullopt, miou_cp, std::nullopt);
        DefenseSummary summary;
        summary.noise_kind = d.label;
        summary.checkpoint = d.checkpoint;
        summary.miou_cp = miou_cp;
        summary.ratio_red = r.red->value;
        doc.defenses.push_back(summary);
        if (r.red->value > 1.0) {
            cfg.warnings.push_back("RatioRED above 100% for " + d.label +
                                   " (defense helped clean images)");
        }
    }

    if (!attacks_dir.empty()) {
        for (const auto& cell : attack_manifest.at("extra").at("cells")) {
            const AttackFamily family =
                attack_family_from_string(cell.at("family").get<std::string>());
            const double eps = cell.at("epsilon").get<double>();
            const fs::path cell_dir = attacks_dir / cell.at("dir").get<std::string>();

            std::vector<Sample> adversarial;
            adversarial.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::string file = cell.at("images").at(i).at("file").get<std::string>();
                Sample s;
                s.image = raw_to_image(read_png(cell_dir / file));
                s.mask = clean[i].mask;
                adversarial.push_back(std::move(s));
            }

            AttackCell out_cell;
            out_cell.family = family;
            out_cell.epsilon = eps;
            out_cell.steps = cell.at("steps").get<int>();
            out_cell.miou_ao = evaluate_miou_pairs(*segmenter, adversarial);
            out_cell.ratio_att =
                iou_ratios(doc.miou_co, out_cell.miou_ao, std::nullopt, std::nullopt)
                    .att->value;
            for (const LoadedDefense& d : defenses) {
                const double miou_ap =
                    evaluate_miou_pairs(*segmenter, adversarial, d.purifier.get());
                DefenseCell dc;
                dc.noise_kind = d.label;
                dc.miou_ap = miou_ap;
                dc.ratio_rob =
                    iou_ratios(doc.miou_co, std::nullopt, std::nullopt, miou_ap).rob->value;
                out_cell.defended.push_back(dc);
            }
            doc.attacks.push_back(std::move(out_cell));
            std::cout << "evaluated " << to_string(family) << " eps " << format_eps(eps)
                      << ": ratio_att " << format_ratio_pct(doc.attacks.back().ratio_att)
                      << "%\n";
        }
    }

    doc.provenance["dataset"] = dataset_provenance(cfg, true);
    doc.provenance["segmenter_checkpoint"] = segmenter_ckpt.string();
    doc.provenance["segmenter_hash"] = hash_file(segmenter_ckpt);
    doc.provenance["toolkit_version"] = kToolkitVersion;
    doc.provenance["config_hash"] = config_hash(cfg);
    doc.provenance["images_evaluated"] = count;

    const fs::path metrics_dir = cfg.output.dir / "metrics";
    fs::create_directories(metrics_dir);
    std::vector<fs::path> outputs;
    const bool want_json = std::find(cfg.output.formats.begin(), cfg.output.formats.end(),
                                     "json") != cfg.output.formats.end();
    const bool want_csv = std::find(cfg.output.formats.begin(), cfg.output.formats.end(),
                                    "csv") != cfg.output.formats.end();
    if (want_json) {
        const fs::path metrics_path = metrics_dir / "metrics.json";
        std::ofstream out(metrics_path);
        out << doc.to_json().dump(2) << "\n";
        if (!out) throw std::runtime_error("failed writing metrics JSON");
        outputs.push_back(metrics_path);
    }
    if (want_csv) {
        const auto tables = write_tables_csv(metrics_dir, doc);
        outputs.insert(outputs.end(), tables.begin(), tables.end());
    }
    write_manifest(metrics_dir / "manifest.json", "evaluate", cfg, outputs,
                   {{"images_evaluated", count}});
    std::cout << "clean/original miou " << format_ratio_pct(doc.miou_co) << "%, metrics under "
              << metrics_dir << "\n";
    return 0;
}

int cmd_report(const std::vector<fs::path>& metrics_files, const fs::path& out_dir) {
    if (metrics_files.empty()) {
        throw std::invalid_argument("report: at least one metrics file required");
    }
    std::vector<EvaluationDoc> docs;
    for (const fs::path& p : metrics_files) {
        std::ifstream in(p);
        if (!in) throw std::runtime_error("cannot open metrics file '" + p.string() + "'");
        nlohmann::json j;
        in >> j;
        docs.push_back(EvaluationDoc::from_json(j));
    }
    const EvaluationDoc doc = merge_docs(docs);

    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;
    for (AttackFamily family : {AttackFamily::Fgsm, AttackFamily::Ifgsm}) {
        const auto series = build_family_series(doc, family);
        if (series.empty()) continue;
        std::vector<double> ticks;
        for (const auto& [eps, pct] : series.front().points) ticks.push_back(eps);
        const fs::path plot_path = out_dir / ("ratio_" + to_string(family) + ".png");
        render_ratio_plot(plot_path, "iou ratio vs epsilon (" + to_string(family) + ")", series,
                          ticks);
        outputs.push_back(plot_path);
    }
    const fs::path summary_path = out_dir / "summary.txt";
    write_summary_text(summary_path, doc);
    outputs.push_back(summary_path);

    nlohmann::json j;
    j["command"] = "report";
    j["toolkit_version"] = kToolkitVersion;
    nlohmann::json ins = nlohmann::json::array();
    for (const fs::path& p : metrics_files) {
        ins.push_back({{"path", p.string()}, {"fnv1a", hash_file(p)}});
    }
    j["inputs"] = ins;
    nlohmann::json outs = nlohmann::json::array();
    for (const fs::path& p : outputs) {
        outs.push_back({{"path", p.string()}, {"fnv1a", hash_file(p)}});
    }
    j["outputs"] = outs;
    std::ofstream out(out_dir / "manifest.json");
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing report manifest");

    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

}  // namespace dapas::cli
