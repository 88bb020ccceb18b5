#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

/// Intersection over union of two valid boxes, in [0, 1].
double iou(const Box2D& a, const Box2D& b);

/// Drops boxes scored below `conf_thresh`, then greedy NMS: boxes sorted by
/// score descending (ties: larger area, then input order), a box is kept iff
/// its IOU with every kept box is <= `nms_iou`. Throws MissingScore.
std::vector<Box2D> filter_detections(std::span<const Box2D> boxes, double conf_thresh, double nms_iou);

struct Match {
    std::size_t pred_index = 0;
    std::size_t gt_index = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<Match> matches;
};

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// precision = tp/(tp+fp), recall = tp/(tp+fn). Both are 1 when there are
/// no predictions and no ground truth; any other 0/0 is 0.
Scores scores_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

struct MatchReport {
    MatchResult result;
    Scores scores;
};

inline constexpr double kDefaultMatchIou = 0.5;

/// Greedy one-to-one matching. Predictions are visited by score descending
/// (unscored keep input order); each takes the unmatched ground-truth box
/// with the highest IOU when that IOU is strictly above `iou_thresh`.
MatchReport match_and_score(std::span<const Box2D> preds, std::span<const Box2D> gts,
                            double iou_thresh = kDefaultMatchIou);

struct EvalOptions {
    std::string label{kPedestrian};
    bool apply_filter = true;
    double conf_thresh = 0.8;
    double nms_iou = 0.3;
    double iou_thresh = kDefaultMatchIou;
};

struct FrameEval {
    std::string frame_id;
    MatchReport report;
};

struct EvalReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    Scores scores;
    std::vector<FrameEval> frames;
};

/// Per-frame matching over the union of frame ids, aggregated by summing
/// counts. Only boxes carrying `options.label` take part.
EvalReport evaluate_detections(const std::map<std::string, std::vector<Box2D>>& predictions,
                               const std::map<std::string, std::vector<Box2D>>& ground_truth,
                               const EvalOptions& options);

}  // namespace pedcloud
