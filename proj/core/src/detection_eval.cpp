#include "pedcloud/detection_eval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "pedcloud/errors.hpp"

namespace pedcloud {

double iou(const Box2D& a, const Box2D& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<Box2D> filter_detections(std::span<const Box2D> boxes, double conf_thresh, double nms_iou) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (!boxes[i].score) throw MissingScore("detection " + std::to_string(i) + " has no score");
        if (*boxes[i].score >= conf_thresh) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (*boxes[l].score != *boxes[r].score) return *boxes[l].score > *boxes[r].score;
        return boxes[l].area() > boxes[r].area();
    });
    std::vector<Box2D> kept;
    for (std::size_t i : order) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                            [&](const Box2D& k) { return iou(k, boxes[i]) > nms_iou; });
        if (!suppressed) kept.push_back(boxes[i]);
    }
    return kept;
}

Scores scores_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    Scores s;
    if (tp + fp + fn == 0) {
        s.precision = s.recall = s.f1 = 1.0;
        return s;
    }
    s.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    s.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double denom = s.precision + s.recall;
    s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    return s;
}

MatchReport match_and_score(std::span<const Box2D> preds, std::span<const Box2D> gts, double iou_thresh) {
    std::vector<std::size_t> order(preds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const bool ls = preds[l].score.has_value();
        const bool rs = preds[r].score.has_value();
        if (ls && rs) return *preds[l].score > *preds[r].score;
        return ls && !rs;
    });

    MatchReport report;
    std::vector<bool> gt_taken(gts.size(), false);
    for (std::size_t p : order) {
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g]) continue;
            const double v = iou(preds[p], gts[g]);
            if (v > best) {
                best = v;
                best_gt = g;
            }
        }
        if (best_gt < gts.size() && best > iou_thresh) {
            gt_taken[best_gt] = true;
            report.result.matches.push_back({p, best_gt, best});
        }
    }
    report.result.tp = report.result.matches.size();
    report.result.fp = preds.size() - report.result.tp;
    report.result.fn = gts.size() - report.result.tp;
    report.scores = scores_from_counts(report.result.tp, report.result.fp, report.result.fn);
    return report;
}

EvalReport evaluate_detections(const std::map<std::string, std::vector<Box2D>>& predictions,
                               const std::map<std::string, std::vector<Box2D>>& ground_truth,
                               const EvalOptions& options) {
    std::set<std::string> frames;
    for (const auto& [id, _] : predictions) frames.insert(id);
    for (const auto& [id, _] : ground_truth) frames.insert(id);

    auto select = [&](const std::map<std::string, std::vector<Box2D>>& m, const std::string& id) {
        std::vector<Box2D> out;
        if (auto it = m.find(id); it != m.end()) {
            std::copy_if(it->second.begin(), it->second.end(), std::back_inserter(out),
                         [&](const Box2D& b) { return b.label == options.label; });
        }
        return out;
    };

    EvalReport report;
    for (const auto& id : frames) {
        auto preds = select(predictions, id);
        if (options.apply_filter) preds = filter_detections(preds, options.conf_thresh, options.nms_iou);
        const auto gts = select(ground_truth, id);
        FrameEval fe{id, match_and_score(preds, gts, options.iou_thresh)};
        report.tp += fe.report.result.tp;
        report.fp += fe.report.result.fp;
        report.fn += fe.report.result.fn;
        report.frames.push_back(std::move(fe));
    }
    report.scores = scores_from_counts(report.tp, report.fp, report.fn);
    return report;
}

}  // namespace pedcloud
