#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dapas/core_types.hpp"
#include "dapas/plot.hpp"

#include "json.hpp"

namespace dapas {

/// One defended measurement inside an attack cell.
struct DefenseCell {
    std::string noise_kind;
    double miou_ap = 0.0;
    double ratio_rob = 0.0;
};

/// One (family, epsilon) attack measurement with its defended counterparts.
struct AttackCell {
    AttackFamily family = AttackFamily::Fgsm;
    double epsilon = 0.0;
    int steps = 1;
    double miou_ao = 0.0;
    double ratio_att = 0.0;
    std::vector<DefenseCell> defended;
};

/// Clean-image measurement for one trained denoiser.
struct DefenseSummary {
    std::string noise_kind;
    std::string checkpoint;
    double miou_cp = 0.0;
    double ratio_red = 0.0;
};

/// Everything one evaluation run measured, the unit the report command
/// consumes. Serializes to the metrics JSON document.
struct EvaluationDoc {
    double miou_co = 0.0;
    std::vector<DefenseSummary> defenses;
    std::vector<AttackCell> attacks;
    std::optional<MetricsReport> clean_report;
    nlohmann::json provenance;  // dataset / checkpoint / hash info

    nlohmann::json to_json() const;
    static EvaluationDoc from_json(const nlohmann::json& j);
};

/// Merges evaluation documents over the same clean baseline (same dataset
/// and segmenter); distinct defenses and attack cells are concatenated.
EvaluationDoc merge_docs(const std::vector<EvaluationDoc>& docs);

/// Curves for one attack family: the undefended attack ratio plus one
/// defended curve per noise distribution, ratios in percent, sorted by
/// epsilon.
std::vector<PlotSeries> build_family_series(const EvaluationDoc& doc, AttackFamily family);

/// Writes the four result tables as CSV (percent cells, one decimal):
/// table1 = clean-image reduction, table2 = attack ratios per family,
/// table3/table4 = defended ratios per distribution for fgsm / ifgsm.
/// Returns the paths written.
std::vector<std::filesystem::path> write_tables_csv(const std::filesystem::path& dir,
                                                    const EvaluationDoc& doc);

void write_summary_text(const std::filesystem::path& path, const EvaluationDoc& doc);

}  // namespace dapas
