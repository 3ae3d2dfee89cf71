#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dapas/core_types.hpp"

#include "json.hpp"

namespace dapas {

/// Confusion-count accumulator, rows = ground truth, columns = prediction.
/// Pixels whose ground-truth label equals ignore_index are skipped.
/// Accumulators merge associatively, so workers can own private copies.
class ConfusionAccumulator {
public:
    explicit ConfusionAccumulator(int num_classes, int ignore_index = kDefaultIgnoreIndex);

    void accumulate(const SegmentationMask& pred, const SegmentationMask& gt);
    void merge(const ConfusionAccumulator& other);

    int num_classes() const { return num_classes_; }
    int ignore_index() const { return ignore_index_; }
    std::int64_t total() const;
    std::int64_t at(int gt, int pred) const {
        return matrix_[static_cast<std::size_t>(gt) * num_classes_ + pred];
    }
    const std::vector<std::int64_t>& matrix() const { return matrix_; }

private:
    int num_classes_;
    int ignore_index_;
    std::vector<std::int64_t> matrix_;
};

/// Free-function form of ConfusionAccumulator::accumulate.
ConfusionAccumulator& accumulate(ConfusionAccumulator& acc, const SegmentationMask& pred,
                                 const SegmentationMask& gt);

/// Per-class IoU_c = TP_c / (TP_c + FP_c + FN_c); classes absent from both
/// prediction and ground truth carry no value.
std::vector<std::optional<double>> per_class_iou(const ConfusionAccumulator& acc);

/// Mean of per-class IoU over classes with nonzero union. Throws on an
/// empty accumulator.
double miou(const ConfusionAccumulator& acc);

/// The three relative metrics, each against the clean/original mIoU:
/// RatioATT = miou_ao / miou_co, RatioROB = miou_ap / miou_co,
/// RatioRED = miou_cp / miou_co. Undefined ratios are omitted.
/// Throws when miou_co is zero (denominator undefined).
IouRatios iou_ratios(double miou_co, std::optional<double> miou_ao,
                     std::optional<double> miou_cp, std::optional<double> miou_ap);

MetricsReport make_report(const ConfusionAccumulator& acc,
                          std::optional<IouRatios> ratios = std::nullopt);

nlohmann::json report_to_json(const MetricsReport& report);

/// Ratio formatted the way the result tables print it: percent, one decimal.
std::string format_ratio_pct(double ratio);

}  // namespace dapas
