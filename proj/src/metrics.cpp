#include "dapas/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace dapas {

ConfusionAccumulator::ConfusionAccumulator(int num_classes, int ignore_index)
    : num_classes_(num_classes), ignore_index_(ignore_index),
      matrix_(static_cast<std::size_t>(num_classes) * num_classes, 0) {
    if (num_classes < 2) {
        throw std::invalid_argument("confusion accumulator needs num_classes >= 2");
    }
}

void ConfusionAccumulator::accumulate(const SegmentationMask& pred, const SegmentationMask& gt) {
    if (pred.n != gt.n || pred.h != gt.h || pred.w != gt.w) {
        throw std::invalid_argument("accumulate: prediction/ground-truth shape mismatch");
    }
    for (std::size_t i = 0; i < gt.labels.size(); ++i) {
        const std::int32_t g = gt.labels[i];
        if (g == ignore_index_) continue;
        const std::int32_t p = pred.labels[i];
        if (g < 0 || g >= num_classes_) {
            throw std::invalid_argument("accumulate: ground-truth label " + std::to_string(g) +
                                        " out of range");
        }
        if (p < 0 || p >= num_classes_) {
            throw std::invalid_argument("accumulate: predicted label " + std::to_string(p) +
                                        " out of range");
        }
        ++matrix_[static_cast<std::size_t>(g) * num_classes_ + p];
    }
}

void ConfusionAccumulator::merge(const ConfusionAccumulator& other) {
    if (other.num_classes_ != num_classes_) {
        throw std::invalid_argument("merge: accumulator class counts differ");
    }
    for (std::size_t i = 0; i < matrix_.size(); ++i) matrix_[i] += other.matrix_[i];
}

std::int64_t ConfusionAccumulator::total() const {
    std::int64_t t = 0;
    for (std::int64_t v : matrix_) t += v;
    return t;
}

ConfusionAccumulator& accumulate(ConfusionAccumulator& acc, const SegmentationMask& pred,
                                 const SegmentationMask& gt) {
    acc.accumulate(pred, gt);
    return acc;
}

std::vector<std::optional<double>> per_class_iou(const ConfusionAccumulator& acc) {
    const int k = acc.num_classes();
    std::vector<std::optional<double>> iou(k);
    for (int c = 0; c < k; ++c) {
        const std::int64_t tp = acc.at(c, c);
        std::int64_t fp = 0;
        std::int64_t fn = 0;
        for (int o = 0; o < k; ++o) {
            if (o == c) continue;
            fp += acc.at(o, c);
            fn += acc.at(c, o);
        }
        const std::int64_t uni = tp + fp + fn;
        if (uni > 0) {
            iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
        }
    }
    return iou;
}

double miou(const ConfusionAccumulator& acc) {
    if (acc.total() == 0) {
        throw std::invalid_argument("miou: empty accumulator");
    }
    const auto iou = per_class_iou(acc);
    double sum = 0.0;
    int present = 0;
    for (const auto& v : iou) {
        if (v) {
            sum += *v;
            ++present;
        }
    }
    return sum / static_cast<double>(present);
}

IouRatios iou_ratios(double miou_co, std::optional<double> miou_ao,
                     std::optional<double> miou_cp, std::optional<double> miou_ap) {
    if (!(miou_co > 0.0)) {
        throw std::invalid_argument("iou_ratios: clean/original mIoU must be > 0");
    }
    auto ratio = [miou_co](double num) {
        return IouRatio{num / miou_co, num, miou_co};
    };
    IouRatios out;
    if (miou_ao) out.att = ratio(*miou_ao);
    if (miou_cp) out.red = ratio(*miou_cp);
    if (miou_ap) out.rob = ratio(*miou_ap);
    return out;
}

MetricsReport make_report(const ConfusionAccumulator& acc, std::optional<IouRatios> ratios) {
    MetricsReport report;
    report.num_classes = acc.num_classes();
    report.confusion = acc.matrix();
    report.per_class_iou = per_class_iou(acc);
    report.miou = miou(acc);
    report.ratios = std::move(ratios);
    return report;
}

namespace {
nlohmann::json ratio_to_json(const IouRatio& r) {
    return {{"value", r.value}, {"numerator", r.numerator}, {"denominator", r.denominator}};
}
}  // namespace

nlohmann::json report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["num_classes"] = report.num_classes;
    j["confusion"] = report.confusion;
    nlohmann::json iou = nlohmann::json::array();
    for (const auto& v : report.per_class_iou) {
        if (v) {
            iou.push_back(*v);
        } else {
            iou.push_back(nullptr);
        }
    }
    j["per_class_iou"] = iou;
    j["miou"] = report.miou;
    if (report.ratios) {
        nlohmann::json r;
        if (report.ratios->att) r["ratio_att"] = ratio_to_json(*report.ratios->att);
        if (report.ratios->rob) r["ratio_rob"] = ratio_to_json(*report.ratios->rob);
        if (report.ratios->red) r["ratio_red"] = ratio_to_json(*report.ratios->red);
        j["ratios"] = r;
    }
    return j;
}

std::string format_ratio_pct(double ratio) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", ratio * 100.0);
    return buf;
}

}  // namespace dapas
