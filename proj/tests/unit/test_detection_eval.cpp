#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "pedcloud/detection_eval.hpp"
#include "pedcloud/errors.hpp"

using namespace pedcloud;
using fixtures::make_box;
using fixtures::scored;

namespace {

// Counts unit pixels covered by integer-cornered boxes.
double raster_iou(const Box2D& a, const Box2D& b) {
    const int x0 = static_cast<int>(std::min(a.x_min, b.x_min));
    const int x1 = static_cast<int>(std::max(a.x_max, b.x_max));
    const int y0 = static_cast<int>(std::min(a.y_min, b.y_min));
    const int y1 = static_cast<int>(std::max(a.y_max, b.y_max));
    long inter = 0;
    long uni = 0;
    for (int x = x0; x < x1; ++x) {
        for (int y = y0; y < y1; ++y) {
            const bool in_a = x >= a.x_min && x < a.x_max && y >= a.y_min && y < a.y_max;
            const bool in_b = x >= b.x_min && x < b.x_max && y >= b.y_min && y < b.y_max;
            inter += in_a && in_b;
            uni += in_a || in_b;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Box2D random_int_box(std::mt19937_64& rng, int extent = 60) {
    std::uniform_int_distribution<int> pos(0, extent);
    std::uniform_int_distribution<int> size(1, extent / 2);
    const int x = pos(rng);
    const int y = pos(rng);
    return make_box(x, y, x + size(rng), y + size(rng));
}

// Box sharing the same height with `ref`, shifted so the IOU is `target`.
Box2D shifted_for_iou(const Box2D& ref, double target) {
    // Equal-size boxes offset by d along x: iou = (w - d) / (w + d).
    const double w = ref.width();
    const double d = w * (1 - target) / (1 + target);
    return make_box(ref.x_min + d, ref.y_min, ref.x_max + d, ref.y_max);
}

}  // namespace

TEST(Iou, BasicCases) {
    const auto a = make_box(0, 0, 10, 10);
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, make_box(20, 20, 30, 30)), 0.0);
    EXPECT_EQ(iou(a, make_box(10, 0, 20, 10)), 0.0);  // touching edges
    EXPECT_NEAR(iou(a, make_box(5, 0, 15, 10)), 1.0 / 3.0, 1e-9);
    EXPECT_NEAR(raster_iou(a, make_box(5, 0, 15, 10)), 1.0 / 3.0, 1e-12);
}

TEST(Iou, MatchesRasterOracle) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
        const auto a = random_int_box(rng);
        const auto b = random_int_box(rng);
        ASSERT_NEAR(iou(a, b), raster_iou(a, b), 1e-12);
        ASSERT_DOUBLE_EQ(iou(a, b), iou(b, a));
    }
}

TEST(Iou, BoundsOnContinuousBoxes) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 100);
    for (int i = 0; i < 5000; ++i) {
        const double x = u(rng), y = u(rng);
        const auto a = make_box(x, y, x + 0.01 + u(rng), y + 0.01 + u(rng));
        const auto b = make_box(y, x, y + 0.01 + u(rng), x + 0.01 + u(rng));
        const double v = iou(a, b);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        ASSERT_EQ(v, iou(b, a));
    }
}

TEST(Filter, HighOverlapKeepsBestScore) {
    const auto a = scored(make_box(0, 0, 100, 100), 0.9);
    auto b = scored(shifted_for_iou(a, 0.9), 0.8);
    ASSERT_NEAR(iou(a, b), 0.9, 1e-12);
    const std::vector<Box2D> in{b, a};
    const auto out = filter_detections(in, 0.8, 0.3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0], a);
}

TEST(Filter, LowOverlapKeepsBoth) {
    const auto a = scored(make_box(0, 0, 100, 100), 0.9);
    const auto b = scored(shifted_for_iou(a, 0.1), 0.85);
    ASSERT_NEAR(iou(a, b), 0.1, 1e-12);
    const std::vector<Box2D> in{a, b};
    const auto out = filter_detections(in, 0.8, 0.3);
    EXPECT_EQ(out, in);
}

TEST(Filter, ConfidenceThresholdIsInclusive) {
    const std::vector<Box2D> in{scored(make_box(0, 0, 10, 10), 0.79), scored(make_box(50, 0, 60, 10), 0.8)};
    const auto out = filter_detections(in, 0.8, 0.3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(*out[0].score, 0.8);
}

TEST(Filter, NmsThresholdIsInclusive) {
    const auto a = scored(make_box(0, 0, 100, 100), 0.95);
    const auto b = scored(make_box(50, 0, 150, 100), 0.9);  // iou exactly 1/3
    EXPECT_EQ(filter_detections(std::vector{a, b}, 0.8, 1.0 / 3.0).size(), 2u);
    EXPECT_EQ(filter_detections(std::vector{a, b}, 0.8, 0.3).size(), 1u);
}

TEST(Filter, TieBreaksByAreaThenInputOrder) {
    const auto small = scored(make_box(0, 0, 10, 10), 0.9);
    const auto big = scored(make_box(0, 0, 11, 11), 0.9);
    auto out = filter_detections(std::vector{small, big}, 0.5, 0.3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0], big);
    auto first = scored(make_box(0, 0, 10, 10, "pedestrian"), 0.9);
    auto second = scored(make_box(0, 0, 10, 10, "other"), 0.9);
    out = filter_detections(std::vector{first, second}, 0.5, 0.3);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].label, "pedestrian");
}

TEST(Filter, MissingScore) {
    EXPECT_THROW(filter_detections(std::vector{make_box(0, 0, 1, 1)}, 0.8, 0.3), MissingScore);
}

TEST(Filter, DeploymentThresholdFixture) {
    // Three people, one with a duplicate detection, plus weak detections.
    const std::vector<Box2D> in{
        scored(make_box(100, 200, 160, 380), 0.97),  // person A
        scored(make_box(105, 205, 165, 385), 0.91),  // duplicate of A (IOU ~0.8)
        scored(make_box(400, 220, 450, 360), 0.88),  // person B
        scored(make_box(430, 220, 480, 360), 0.86),  // overlaps B with IOU 0.25
        scored(make_box(700, 150, 760, 320), 0.81),  // person C
        scored(make_box(900, 150, 960, 320), 0.79),  // below confidence
        scored(make_box(1000, 100, 1050, 260), 0.30),
    };
    const auto out = filter_detections(in, 0.8, 0.3);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[0], in[0]);
    EXPECT_EQ(out[1], in[2]);
    EXPECT_EQ(out[2], in[3]);
    EXPECT_EQ(out[3], in[4]);
}

TEST(Filter, Properties) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> s(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Box2D> in;
        for (int i = 0; i < 12; ++i) in.push_back(scored(random_int_box(rng, 80), s(rng)));
        const double lo = s(rng) * 0.5;
        const auto a = filter_detections(in, lo, 0.3);
        const auto b = filter_detections(in, lo + 0.3, 0.3);
        for (std::size_t i = 1; i < a.size(); ++i) ASSERT_GE(*a[i - 1].score, *a[i].score);
        for (const auto& x : a) ASSERT_NE(std::find(in.begin(), in.end(), x), in.end());
        for (std::size_t i = 0; i < a.size(); ++i) {
            for (std::size_t j = i + 1; j < a.size(); ++j) ASSERT_LE(iou(a[i], a[j]), 0.3);
        }
        // Greedy decisions for a box depend only on higher-ranked boxes, so a
        // stricter threshold yields exactly the high-scored part of the output.
        std::vector<Box2D> expect;
        for (const auto& x : a) {
            if (*x.score >= lo + 0.3) expect.push_back(x);
        }
        ASSERT_EQ(b, expect);
    }
}

TEST(Match, AboveHalfIsTruePositive) {
    const auto gt = make_box(0, 0, 100, 100);
    const auto pred = scored(shifted_for_iou(gt, 0.6), 0.9);
    const auto r = match_and_score(std::vector{pred}, std::vector{gt});
    EXPECT_EQ(r.result.tp, 1u);
    EXPECT_EQ(r.result.fp, 0u);
    EXPECT_EQ(r.result.fn, 0u);
    EXPECT_EQ(r.scores.precision, 1.0);
    EXPECT_EQ(r.scores.recall, 1.0);
    EXPECT_EQ(r.scores.f1, 1.0);
}

TEST(Match, BelowHalfIsMiss) {
    const auto gt = make_box(0, 0, 100, 100);
    const auto pred = scored(shifted_for_iou(gt, 0.4), 0.9);
    const auto r = match_and_score(std::vector{pred}, std::vector{gt});
    EXPECT_EQ(r.result.tp, 0u);
    EXPECT_EQ(r.result.fp, 1u);
    EXPECT_EQ(r.result.fn, 1u);
    EXPECT_EQ(r.scores.precision, 0.0);
    EXPECT_EQ(r.scores.recall, 0.0);
}

TEST(Match, ExactlyHalfIsNotAbove) {
    const auto gt = make_box(0, 0, 30, 10);
    const auto pred = make_box(10, 0, 40, 10);  // inter 200, union 400
    ASSERT_EQ(iou(gt, pred), 0.5);
    EXPECT_EQ(match_and_score(std::vector{pred}, std::vector{gt}).result.tp, 0u);
}

TEST(Match, GreedyOneToOne) {
    const auto gt = make_box(0, 0, 100, 100);
    const auto p1 = scored(shifted_for_iou(gt, 0.7), 0.95);
    const auto p2 = scored(shifted_for_iou(gt, 0.9), 0.85);
    const auto r = match_and_score(std::vector{p2, p1}, std::vector{gt});
    EXPECT_EQ(r.result.tp, 1u);
    EXPECT_EQ(r.result.fp, 1u);
    ASSERT_EQ(r.result.matches.size(), 1u);
    // The higher-scored prediction claims the box first.
    EXPECT_EQ(r.result.matches[0].pred_index, 1u);
    EXPECT_NEAR(r.result.matches[0].iou, 0.7, 1e-12);
}

TEST(Match, EmptyConventions) {
    auto r = match_and_score({}, {});
    EXPECT_EQ(r.scores.precision, 1.0);
    EXPECT_EQ(r.scores.recall, 1.0);
    EXPECT_EQ(r.scores.f1, 1.0);
    r = match_and_score({}, std::vector{make_box(0, 0, 1, 1)});
    EXPECT_EQ(r.result.fn, 1u);
    EXPECT_EQ(r.scores.precision, 0.0);
    EXPECT_EQ(r.scores.recall, 0.0);
    r = match_and_score(std::vector{make_box(0, 0, 1, 1)}, {});
    EXPECT_EQ(r.result.fp, 1u);
    EXPECT_EQ(r.scores.precision, 0.0);
    EXPECT_EQ(r.scores.recall, 0.0);
    EXPECT_EQ(r.scores.f1, 0.0);
}

TEST(Match, CountingIdentitiesOnRandomFrames) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> n(0, 8);
    std::uniform_real_distribution<double> s(0, 1);
    for (int f = 0; f < 500; ++f) {
        std::vector<Box2D> preds, gts;
        for (int i = n(rng); i > 0; --i) preds.push_back(scored(random_int_box(rng), s(rng)));
        for (int i = n(rng); i > 0; --i) gts.push_back(random_int_box(rng));
        const auto r = match_and_score(preds, gts);
        ASSERT_EQ(r.result.tp, r.result.matches.size());
        ASSERT_EQ(r.result.tp + r.result.fp, preds.size());
        ASSERT_EQ(r.result.tp + r.result.fn, gts.size());
        std::set<std::size_t> used_p, used_g;
        for (const auto& m : r.result.matches) {
            ASSERT_TRUE(used_p.insert(m.pred_index).second);
            ASSERT_TRUE(used_g.insert(m.gt_index).second);
            ASSERT_GT(m.iou, 0.5);
            ASSERT_DOUBLE_EQ(m.iou, iou(preds[m.pred_index], gts[m.gt_index]));
        }
    }
}

TEST(Scores, FromCounts) {
    const auto s = scores_from_counts(9, 2, 1);
    EXPECT_DOUBLE_EQ(s.precision, 9.0 / 11.0);
    EXPECT_DOUBLE_EQ(s.recall, 0.9);
    EXPECT_DOUBLE_EQ(s.f1, 2 * (9.0 / 11.0) * 0.9 / (9.0 / 11.0 + 0.9));
}

TEST(Evaluate, AggregatesFramesAndFiltersByClass) {
    std::map<std::string, std::vector<Box2D>> preds, gts;
    preds["f1"] = {scored(make_box(0, 0, 100, 100), 0.9), scored(make_box(5, 5, 100, 100), 0.85),
                   scored(make_box(300, 0, 400, 100, "car"), 0.99)};
    gts["f1"] = {make_box(0, 0, 100, 100), make_box(300, 0, 400, 100, "car")};
    preds["f2"] = {scored(make_box(0, 0, 50, 50), 0.5)};  // dropped by the confidence filter
    gts["f2"] = {make_box(0, 0, 50, 50)};
    gts["f3"] = {};
    const auto r = evaluate_detections(preds, gts, EvalOptions{});
    EXPECT_EQ(r.tp, 1u);
    EXPECT_EQ(r.fp, 0u);
    EXPECT_EQ(r.fn, 1u);
    ASSERT_EQ(r.frames.size(), 3u);
    EXPECT_EQ(r.frames[2].report.scores.precision, 1.0);

    EvalOptions raw;
    raw.apply_filter = false;
    const auto u = evaluate_detections(preds, gts, raw);
    EXPECT_EQ(u.tp, 2u);
    EXPECT_EQ(u.fp, 1u);
    EXPECT_EQ(u.fn, 0u);
}
