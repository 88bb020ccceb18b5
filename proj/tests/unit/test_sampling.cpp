#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "pedcloud/errors.hpp"
#include "pedcloud/sampling.hpp"

using namespace pedcloud;

namespace {

double dist(const Point3& a, const Point3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

double norm(const Point3& p) { return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z); }

// Quadratic-per-step FPS recomputing every distance to the whole selection.
std::vector<std::size_t> fps_oracle(const std::vector<Point3>& pts, std::size_t k, std::size_t seed) {
    std::vector<std::size_t> sel{seed};
    while (sel.size() < k) {
        std::size_t best = 0;
        double best_d = -1;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
            double d = INFINITY;
            for (auto s : sel) d = std::min(d, dist(pts[i], pts[s]));
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

// Groups points by voxel in a map keyed on (i, j, k) computed independently.
std::vector<Point3> voxel_oracle(const std::vector<Point3>& pts, double s) {
    double lx = INFINITY, ly = INFINITY, lz = INFINITY;
    for (const auto& p : pts) {
        lx = std::min(lx, p.x);
        ly = std::min(ly, p.y);
        lz = std::min(lz, p.z);
    }
    std::map<std::array<long, 3>, std::vector<Point3>> groups;
    for (const auto& p : pts) {
        groups[{long(std::floor((p.x - lx) / s)), long(std::floor((p.y - ly) / s)), long(std::floor((p.z - lz) / s))}]
            .push_back(p);
    }
    std::vector<Point3> out;
    for (const auto& [k, g] : groups) {
        Point3 c;
        for (const auto& p : g) {
            c.x += p.x / g.size();
            c.y += p.y / g.size();
            c.z += p.z / g.size();
        }
        out.push_back(c);
    }
    return out;
}

}  // namespace

TEST(Fps, CollinearExample) {
    std::vector<Point3> line;
    for (int i = 0; i < 10; ++i) line.push_back({double(i), 0, 0});
    const auto idx = fps(line, 3, 0);
    EXPECT_EQ(idx, (std::vector<std::size_t>{0, 9, 4}));
}

TEST(Fps, DefaultSeedIsNearestToCentroid) {
    std::vector<Point3> line;
    for (int i = 0; i < 10; ++i) line.push_back({double(i), 0, 0});
    // Centroid 4.5: indices 4 and 5 tie, lowest wins.
    EXPECT_EQ(nearest_to_centroid(line), 4u);
    EXPECT_EQ(fps(line, 1)[0], 4u);
    EXPECT_EQ(fps(line, 2)[1], 9u);
}

TEST(Fps, MatchesBruteForceOracle) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = fixtures::random_cloud(200, rng);
        const std::size_t seed = trial % 200;
        ASSERT_EQ(fps(pts, 40, seed), fps_oracle(pts, 40, seed));
    }
}

TEST(Fps, DistinctIndicesAndFullCoverage) {
    std::mt19937_64 rng(12);
    const auto pts = fixtures::random_cloud(64, rng);
    auto idx = fps(pts, 64);
    std::sort(idx.begin(), idx.end());
    for (std::size_t i = 0; i < 64; ++i) ASSERT_EQ(idx[i], i);
}

TEST(Fps, CoverageRadiusNeverIncreases) {
    std::mt19937_64 rng(13);
    const auto pts = fixtures::random_cloud(300, rng);
    const auto idx = fps(pts, 60);
    double prev = INFINITY;
    for (std::size_t k = 1; k < idx.size(); ++k) {
        double d = INFINITY;
        for (std::size_t j = 0; j < k; ++j) d = std::min(d, dist(pts[idx[k]], pts[idx[j]]));
        ASSERT_LE(d, prev + 1e-12);
        prev = d;
    }
}

TEST(Fps, Errors) {
    std::vector<Point3> pts(5);
    EXPECT_THROW(fps(pts, 0), TooFewPoints);
    EXPECT_THROW(fps(pts, 6), TooFewPoints);
    EXPECT_THROW(fps(std::vector<Point3>{}, 1), TooFewPoints);
    EXPECT_THROW(fps(pts, 2, 7), std::out_of_range);
}

TEST(Voxel, CubeCorners) {
    std::vector<Point3> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
    EXPECT_EQ(voxel_grid_filter(pts, 0.5).size(), 8u);
    const auto one = voxel_grid_filter(pts, 2.0);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_DOUBLE_EQ(one[0].x, 0.5);
    EXPECT_DOUBLE_EQ(one[0].y, 0.5);
    EXPECT_DOUBLE_EQ(one[0].z, 0.5);
}

TEST(Voxel, MatchesOracle) {
    std::mt19937_64 rng(14);
    for (double s : {0.05, 0.2, 0.7}) {
        const auto pts = fixtures::random_cloud(2000, rng, -2, 3);
        const auto got = voxel_grid_filter(pts, s);
        const auto want = voxel_oracle(pts, s);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) ASSERT_LT(dist(got[i], want[i]), 1e-12);
    }
}

TEST(Voxel, EmptyAndBadSize) {
    EXPECT_TRUE(voxel_grid_filter(std::vector<Point3>{}, 0.1).empty());
    EXPECT_THROW(voxel_grid_filter(std::vector<Point3>(3), 0.0), std::invalid_argument);
}

TEST(Normalize, Examples) {
    const auto two = normalize(std::vector<Point3>{{0, 0, 0}, {2, 0, 0}});
    EXPECT_DOUBLE_EQ(two[0].x, -1.0);
    EXPECT_DOUBLE_EQ(two[1].x, 1.0);
    const auto tri = normalize(std::vector<Point3>{{1, 1, 1}, {1, 1, 4}, {1, 1, 7}});
    EXPECT_DOUBLE_EQ(tri[0].z, -1.0);
    EXPECT_DOUBLE_EQ(tri[1].z, 0.0);
    EXPECT_DOUBLE_EQ(tri[2].z, 1.0);
    EXPECT_THROW(normalize(std::vector<Point3>(4, Point3{3, 3, 3})), DegenerateCluster);
    EXPECT_THROW(normalize(std::vector<Point3>{}), DegenerateCluster);
}

TEST(Normalize, UnitSphereInvariants) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const double s = std::pow(10.0, std::uniform_real_distribution<double>(-6, 6)(rng));
        auto pts = fixtures::random_cloud(50, rng, -s, s);
        for (auto& p : pts) p.x += 1e3 * s;
        const auto n = normalize(pts);
        double mx = 0, cx = 0, cy = 0, cz = 0;
        for (const auto& p : n) {
            mx = std::max(mx, norm(p));
            cx += p.x;
            cy += p.y;
            cz += p.z;
        }
        ASSERT_LE(mx, 1.0);
        ASSERT_GT(mx, 1.0 - 1e-12);
        ASSERT_NEAR(cx / 50, 0.0, 1e-9);
        ASSERT_NEAR(cy / 50, 0.0, 1e-9);
        ASSERT_NEAR(cz / 50, 0.0, 1e-9);
    }
}

TEST(Normalize, Idempotent) {
    std::mt19937_64 rng(16);
    const auto once = normalize(fixtures::random_cloud(100, rng));
    const auto twice = normalize(once);
    for (std::size_t i = 0; i < once.size(); ++i) ASSERT_LT(dist(once[i], twice[i]), 1e-12);
}

TEST(Augment, RotationQuarterTurn) {
    std::mt19937_64 rng(1);
    AugmentSpec spec;
    spec.rotation_lo = spec.rotation_hi = std::numbers::pi / 2;
    spec.jitter_sigma = 0.0;
    const std::vector<Point3> p{{1, 0, 0.5}};
    const auto z = augment(p, spec, rng);
    EXPECT_NEAR(z[0].x, 0.0, 1e-15);
    EXPECT_NEAR(z[0].y, 1.0, 1e-15);
    EXPECT_EQ(z[0].z, 0.5);
    spec.rotation_axis = Axis::x;
    const auto x = augment(p, spec, rng);
    EXPECT_EQ(x[0].x, 1.0);
    EXPECT_NEAR(x[0].y, -0.5, 1e-15);
    EXPECT_NEAR(x[0].z, 0.0, 1e-15);
}

TEST(Augment, RotationPreservesDistancesWithoutJitter) {
    std::mt19937_64 rng(17);
    const auto pts = fixtures::random_cloud(40, rng);
    AugmentSpec spec;
    spec.rotation_lo = -std::numbers::pi;
    spec.rotation_hi = std::numbers::pi;
    spec.jitter_sigma = 0.0;
    for (auto axis : {Axis::x, Axis::y, Axis::z}) {
        spec.rotation_axis = axis;
        const auto r = augment(pts, spec, rng);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            ASSERT_NEAR(norm(r[i]), norm(pts[i]), 1e-12);
            for (std::size_t j = i + 1; j < pts.size(); ++j) {
                ASSERT_NEAR(dist(r[i], r[j]), dist(pts[i], pts[j]), 1e-12);
            }
        }
    }
}

TEST(Augment, JitterIsClipped) {
    std::mt19937_64 rng(18);
    const std::vector<Point3> pts(5000);
    AugmentSpec spec;
    spec.jitter_sigma = 0.1;
    spec.jitter_clip = 0.05;
    bool hit_clip = false;
    for (const auto& p : augment(pts, spec, rng)) {
        for (double v : {p.x, p.y, p.z}) {
            ASSERT_LE(std::abs(v), 0.05);
            hit_clip |= std::abs(v) == 0.05;
        }
    }
    EXPECT_TRUE(hit_clip);
    spec.jitter_sigma = -1;
    EXPECT_THROW(augment(pts, spec, rng), std::invalid_argument);
}

TEST(RandomSample, OrderAndDeterminism) {
    std::vector<Point3> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({double(i), 0, 0});
    const auto a = random_sample(pts, 30, 5);
    EXPECT_EQ(a, random_sample(pts, 30, 5));
    EXPECT_NE(a, random_sample(pts, 30, 6));
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 1; i < a.size(); ++i) ASSERT_LT(a[i - 1].x, a[i].x);
    EXPECT_EQ(random_sample(pts, 100, 1), pts);
    EXPECT_THROW(random_sample(pts, 101, 1), TooFewPoints);
}

TEST(Preprocess, Methods) {
    std::mt19937_64 rng(19);
    const auto pts = fixtures::random_cloud(3000, rng, 0, 5);
    SampleSpec spec;
    spec.target_count = 1024;
    const auto f = preprocess_cluster(pts, spec);
    EXPECT_EQ(f.size(), 1024u);
    const auto expected = normalize(gather(pts, fps(pts, 1024)));
    EXPECT_EQ(f, expected);
    spec.method = SampleMethod::random;
    EXPECT_EQ(preprocess_cluster(pts, spec).size(), 1024u);
    spec.method = SampleMethod::voxel_grid;
    spec.voxel_size = 1.0;
    EXPECT_EQ(preprocess_cluster(pts, spec).size(), voxel_oracle(pts, 1.0).size());
    spec.method = SampleMethod::fps;
    spec.target_count = 4000;
    EXPECT_THROW(preprocess_cluster(pts, spec), TooFewPoints);
}
