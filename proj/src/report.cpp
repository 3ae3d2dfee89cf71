#include "dapas/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dapas/metrics.hpp"

namespace dapas {

namespace {

nlohmann::json ratio_json(double value, double numerator, double denominator) {
    return {{"value", value}, {"numerator", numerator}, {"denominator", denominator}};
}

std::string format_eps(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", eps);
    return buf;
}

}  // namespace

nlohmann::json EvaluationDoc::to_json() const {
    nlohmann::json j;
    j["miou_co"] = miou_co;
    j["provenance"] = provenance;
    nlohmann::json defs = nlohmann::json::array();
    for (const DefenseSummary& d : defenses) {
        defs.push_back({{"noise_kind", d.noise_kind},
                        {"checkpoint", d.checkpoint},
                        {"miou_cp", d.miou_cp},
                        {"ratio_red", ratio_json(d.ratio_red, d.miou_cp, miou_co)}});
    }
    j["defenses"] = defs;
    nlohmann::json cells = nlohmann::json::array();
    for (const AttackCell& c : attacks) {
        nlohmann::json cell = {{"family", to_string(c.family)},
                               {"epsilon", c.epsilon},
                               {"steps", c.steps},
                               {"miou_ao", c.miou_ao},
                               {"ratio_att", ratio_json(c.ratio_att, c.miou_ao, miou_co)}};
        nlohmann::json defended = nlohmann::json::array();
        for (const DefenseCell& d : c.defended) {
            defended.push_back({{"noise_kind", d.noise_kind},
                                {"miou_ap", d.miou_ap},
                                {"ratio_rob", ratio_json(d.ratio_rob, d.miou_ap, miou_co)}});
        }
        cell["defended"] = defended;
        cells.push_back(cell);
    }
    j["attacks"] = cells;
    if (clean_report) j["clean_report"] = report_to_json(*clean_report);
    return j;
}

EvaluationDoc EvaluationDoc::from_json(const nlohmann::json& j) {
    EvaluationDoc doc;
    doc.miou_co = j.at("miou_co").get<double>();
    doc.provenance = j.value("provenance", nlohmann::json::object());
    for (const auto& d : j.value("defenses", nlohmann::json::array())) {
        DefenseSummary s;
        s.noise_kind = d.at("noise_kind").get<std::string>();
        s.checkpoint = d.value("checkpoint", "");
        s.miou_cp = d.at("miou_cp").get<double>();
        s.ratio_red = d.at("ratio_red").at("value").get<double>();
        doc.defenses.push_back(std::move(s));
    }
    for (const auto& c : j.value("attacks", nlohmann::json::array())) {
        AttackCell cell;
        cell.family = attack_family_from_string(c.at("family").get<std::string>());
        cell.epsilon = c.at("epsilon").get<double>();
        cell.steps = c.value("steps", 1);
        cell.miou_ao = c.at("miou_ao").get<double>();
        cell.ratio_att = c.at("ratio_att").at("value").get<double>();
        for (const auto& d : c.value("defended", nlohmann::json::array())) {
            DefenseCell dc;
            dc.noise_kind = d.at("noise_kind").get<std::string>();
            dc.miou_ap = d.at("miou_ap").get<double>();
            dc.ratio_rob = d.at("ratio_rob").at("value").get<double>();
            cell.defended.push_back(std::move(dc));
        }
        doc.attacks.push_back(std::move(cell));
    }
    return doc;
}

EvaluationDoc merge_docs(const std::vector<EvaluationDoc>& docs) {
    if (docs.empty()) throw std::invalid_argument("merge_docs: no documents");
    EvaluationDoc merged = docs.front();
    for (std::size_t i = 1; i < docs.size(); ++i) {
        const EvaluationDoc& doc = docs[i];
        if (std::abs(doc.miou_co - merged.miou_co) > 1e-9) {
            throw std::invalid_argument(
                "merge_docs: documents have different clean baselines (mIoU_CO " +
                std::to_string(merged.miou_co) + " vs " + std::to_string(doc.miou_co) + ")");
        }
        merged.defenses.insert(merged.defenses.end(), doc.defenses.begin(), doc.defenses.end());
        for (const AttackCell& cell : doc.attacks) {
            auto match = std::find_if(merged.attacks.begin(), merged.attacks.end(),
                                      [&](const AttackCell& c) {
                                          return c.family == cell.family &&
                                                 std::abs(c.epsilon - cell.epsilon) < 1e-12;
                                      });
            if (match == merged.attacks.end()) {
                merged.attacks.push_back(cell);
            } else {
                match->defended.insert(match->defended.end(), cell.defended.begin(),
                                       cell.defended.end());
            }
        }
    }
    return merged;
}

std::vector<PlotSeries> build_family_series(const EvaluationDoc& doc, AttackFamily family) {
    std::vector<AttackCell> cells;
    for (const AttackCell& c : doc.attacks) {
        if (c.family == family) cells.push_back(c);
    }
    std::sort(cells.begin(), cells.end(),
              [](const AttackCell& a, const AttackCell& b) { return a.epsilon < b.epsilon; });

    static const std::map<std::string, PlotColor> palette = {
        {"gaussian", {200, 60, 50}},
        {"uniform", {0, 140, 140}},
        {"bimodal", {60, 90, 200}},
    };

    std::vector<PlotSeries> series;
    PlotSeries attack_series;
    attack_series.label = "no defense";
    attack_series.color = {0, 0, 0};
    for (const AttackCell& c : cells) {
        attack_series.points.emplace_back(c.epsilon, 100.0 * c.ratio_att);
    }
    if (!attack_series.points.empty()) series.push_back(std::move(attack_series));

    std::set<std::string> kinds;
    for (const AttackCell& c : cells) {
        for (const DefenseCell& d : c.defended) kinds.insert(d.noise_kind);
    }
    for (const std::string& kind : kinds) {
        PlotSeries s;
        s.label = kind;
        const auto it = palette.find(kind);
        s.color = it != palette.end() ? it->second : PlotColor{120, 120, 120};
        for (const AttackCell& c : cells) {
            for (const DefenseCell& d : c.defended) {
                if (d.noise_kind == kind) s.points.emplace_back(c.epsilon, 100.0 * d.ratio_rob);
            }
        }
        if (!s.points.empty()) series.push_back(std::move(s));
    }
    return series;
}

namespace {

std::vector<std::string> defense_kinds(const EvaluationDoc& doc) {
    std::vector<std::string> kinds;
    for (const DefenseSummary& d : doc.defenses) {
        if (std::find(kinds.begin(), kinds.end(), d.noise_kind) == kinds.end()) {
            kinds.push_back(d.noise_kind);
        }
    }
    for (const AttackCell& c : doc.attacks) {
        for (const DefenseCell& d : c.defended) {
            if (std::find(kinds.begin(), kinds.end(), d.noise_kind) == kinds.end()) {
                kinds.push_back(d.noise_kind);
            }
        }
    }
    return kinds;
}

std::vector<double> sorted_epsilons(const EvaluationDoc& doc) {
    std::set<double> eps;
    for (const AttackCell& c : doc.attacks) eps.insert(c.epsilon);
    return {eps.begin(), eps.end()};
}

const AttackCell* find_cell(const EvaluationDoc& doc, AttackFamily family, double epsilon) {
    for (const AttackCell& c : doc.attacks) {
        if (c.family == family && std::abs(c.epsilon - epsilon) < 1e-12) return &c;
    }
    return nullptr;
}

const DefenseCell* find_defended(const AttackCell& cell, const std::string& kind) {
    for (const DefenseCell& d : cell.defended) {
        if (d.noise_kind == kind) return &d;
    }
    return nullptr;
}

void write_robust_table(const std::filesystem::path& path, const EvaluationDoc& doc,
                        AttackFamily family) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    const auto kinds = defense_kinds(doc);
    out << "epsilon";
    for (const std::string& k : kinds) {
        out << "," << k << "_miou_pct," << k << "_ratio_rob_pct";
    }
    out << "\n";
    for (double eps : sorted_epsilons(doc)) {
        const AttackCell* cell = find_cell(doc, family, eps);
        if (!cell) continue;
        out << format_eps(eps);
        for (const std::string& k : kinds) {
            const DefenseCell* d = find_defended(*cell, k);
            if (d) {
                out << "," << format_ratio_pct(d->miou_ap) << ","
                    << format_ratio_pct(d->ratio_rob);
            } else {
                out << ",,";
            }
        }
        out << "\n";
    }
}

}  // namespace

std::vector<std::filesystem::path> write_tables_csv(const std::filesystem::path& dir,
                                                    const EvaluationDoc& doc) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    {
        const auto path = dir / "table1_reduction.csv";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        out << "noise,miou_clean_pct,miou_dapas_pct,ratio_red_pct\n";
        for (const DefenseSummary& d : doc.defenses) {
            out << d.noise_kind << "," << format_ratio_pct(doc.miou_co) << ","
                << format_ratio_pct(d.miou_cp) << "," << format_ratio_pct(d.ratio_red) << "\n";
        }
        written.push_back(path);
    }

    {
        const auto path = dir / "table2_attack.csv";
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        out << "epsilon,fgsm_miou_pct,fgsm_ratio_att_pct,ifgsm_miou_pct,ifgsm_ratio_att_pct\n";
        for (double eps : sorted_epsilons(doc)) {
            out << format_eps(eps);
            for (AttackFamily family : {AttackFamily::Fgsm, AttackFamily::Ifgsm}) {
                const AttackCell* cell = find_cell(doc, family, eps);
                if (cell) {
                    out << "," << format_ratio_pct(cell->miou_ao) << ","
                        << format_ratio_pct(cell->ratio_att);
                } else {
                    out << ",,";
                }
            }
            out << "\n";
        }
        written.push_back(path);
    }

    const auto t3 = dir / "table3_robust_fgsm.csv";
    write_robust_table(t3, doc, AttackFamily::Fgsm);
    written.push_back(t3);
    const auto t4 = dir / "table4_robust_ifgsm.csv";
    write_robust_table(t4, doc, AttackFamily::Ifgsm);
    written.push_back(t4);
    return written;
}

void write_summary_text(const std::filesystem::path& path, const EvaluationDoc& doc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "clean/original mIoU: " << format_ratio_pct(doc.miou_co) << "%\n\n";
    out << "clean-image reduction (RatioRED):\n";
    for (const DefenseSummary& d : doc.defenses) {
        out << "  " << d.noise_kind << ": mIoU " << format_ratio_pct(d.miou_cp) << "% -> "
            << format_ratio_pct(d.ratio_red) << "%\n";
    }
    for (AttackFamily family : {AttackFamily::Fgsm, AttackFamily::Ifgsm}) {
        bool any = false;
        for (const AttackCell& c : doc.attacks) any = any || c.family == family;
        if (!any) continue;
        out << "\n" << to_string(family) << ":\n";
        for (double eps : sorted_epsilons(doc)) {
            const AttackCell* cell = find_cell(doc, family, eps);
            if (!cell) continue;
            out << "  eps " << format_eps(eps) << ": RatioATT "
                << format_ratio_pct(cell->ratio_att) << "%";
            for (const DefenseCell& d : cell->defended) {
                out << ", " << d.noise_kind << " RatioROB " << format_ratio_pct(d.ratio_rob)
                    << "%";
            }
            out << "\n";
        }
    }
}

}  // namespace dapas
