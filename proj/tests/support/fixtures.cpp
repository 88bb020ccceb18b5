#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "pedcloud/sampling.hpp"

namespace pedcloud::fixtures {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "pedcloud-test-XXXXXX").string();
    if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::vector<Point3> random_cloud(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Point3> pts(n);
    for (auto& p : pts) {
        p.x = u(rng);
        p.y = u(rng);
        p.z = u(rng);
    }
    return pts;
}

CameraProjection pinhole(double f, double cx, double cy, int width, int height) {
    CameraProjection c;
    c.p = {f, 0, cx, 0, 0, f, cy, 0, 0, 0, 1, 0};
    c.image_width = width;
    c.image_height = height;
    return c;
}

namespace {

Point3 unproject(const CameraProjection& c, double u, double v, double depth) {
    const double f = c.p[0];
    const double cx = c.p[2];
    const double cy = c.p[6];
    return {(u - cx) * depth / f, (v - cy) * depth / f, depth};
}

bool inside(const Box2D& b, double u, double v) { return u >= b.x_min && u < b.x_max && v >= b.y_min && v < b.y_max; }

}  // namespace

std::vector<Point3> points_in_box(const Box2D& box, const CameraProjection& camera, std::size_t n,
                                  std::mt19937_64& rng, double near, double far) {
    // Keep a small margin so rounding in the round trip cannot cross an edge.
    const double mx = 1e-3 * box.width();
    const double my = 1e-3 * box.height();
    std::uniform_real_distribution<double> du(box.x_min + mx, box.x_max - mx);
    std::uniform_real_distribution<double> dv(box.y_min + my, box.y_max - my);
    std::uniform_real_distribution<double> dd(near, far);
    std::vector<Point3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(unproject(camera, du(rng), dv(rng), dd(rng)));
    return out;
}

std::vector<Point3> points_outside(const std::vector<Box2D>& avoid, const CameraProjection& camera, std::size_t n,
                                   std::mt19937_64& rng) {
    std::uniform_real_distribution<double> du(0.0, camera.image_width);
    std::uniform_real_distribution<double> dv(0.0, camera.image_height);
    std::uniform_real_distribution<double> dd(5.0, 20.0);
    std::vector<Point3> out;
    out.reserve(n);
    while (out.size() < n) {
        const double u = du(rng);
        const double v = dv(rng);
        bool hit = false;
        for (const auto& b : avoid) {
            // One pixel of clearance around each box.
            Box2D grown = b;
            grown.x_min -= 1;
            grown.y_min -= 1;
            grown.x_max += 1;
            grown.y_max += 1;
            hit = hit || inside(grown, u, v);
        }
        if (!hit) out.push_back(unproject(camera, u, v, dd(rng)));
    }
    return out;
}

Box2D make_box(double x0, double y0, double x1, double y1, std::string label) {
    Box2D b;
    b.label = std::move(label);
    b.x_min = x0;
    b.y_min = y0;
    b.x_max = x1;
    b.y_max = y1;
    return b;
}

Box2D scored(Box2D b, double score) {
    b.score = score;
    return b;
}

namespace {

Point3 rotate_z(const Point3& p, double a) {
    const double c = std::cos(a);
    const double s = std::sin(a);
    return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

Point3 rotate_x(const Point3& p, double a) {
    const double c = std::cos(a);
    const double s = std::sin(a);
    return {p.x, c * p.y - s * p.z, s * p.y + c * p.z};
}

}  // namespace

std::vector<Point3> pedestrian_shape(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double height = 1.55 + 0.35 * u(rng);
    const double girth = 0.11 + 0.06 * u(rng);
    const double head_r = 0.07 + 0.02 * u(rng);
    const std::size_t head = n * 15 / 100;
    std::vector<Point3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Point3 p;
        if (i < head) {
            p = {head_r * g(rng), head_r * g(rng), height - head_r + head_r * g(rng)};
        } else {
            // Body returns stop at the ground.
            do {
                p = {girth * g(rng), girth * g(rng), 0.45 * height + 0.12 * height * g(rng)};
            } while (p.z < 0.0);
        }
        pts.push_back(p);
    }
    return pts;
}

std::vector<Point3> non_pedestrian_shape(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point3> pts;
    pts.reserve(n);
    const int kind = static_cast<int>(u(rng) * 3.0);
    const double yaw = 2.0 * std::numbers::pi * u(rng);
    if (kind == 0) {
        // Wall or ground patch.
        const double a = 0.8 + 2.5 * u(rng);
        const double b = 0.8 + 2.5 * u(rng);
        const double tilt = (u(rng) < 0.5 ? 0.0 : std::numbers::pi / 2) + 0.2 * g(rng);
        for (std::size_t i = 0; i < n; ++i) {
            Point3 p{a * (u(rng) - 0.5), b * (u(rng) - 0.5), 0.01 * g(rng)};
            pts.push_back(rotate_z(rotate_x(p, tilt), yaw));
        }
    } else if (kind == 1) {
        // Surface of a box (car, bin, cabinet).
        const double sx = 0.4 + 2.0 * u(rng);
        const double sy = 0.4 + 1.5 * u(rng);
        const double sz = 0.4 + 1.2 * u(rng);
        for (std::size_t i = 0; i < n; ++i) {
            Point3 p{sx * (u(rng) - 0.5), sy * (u(rng) - 0.5), sz * (u(rng) - 0.5)};
            switch (static_cast<int>(u(rng) * 3.0)) {
                case 0: p.x = (u(rng) < 0.5 ? -0.5 : 0.5) * sx; break;
                case 1: p.y = (u(rng) < 0.5 ? -0.5 : 0.5) * sy; break;
                default: p.z = (u(rng) < 0.5 ? -0.5 : 0.5) * sz; break;
            }
            pts.push_back(rotate_z(p, yaw));
        }
    } else {
        // Bush, pole base, or other single blob.
        const double sx = 0.1 + 0.5 * u(rng);
        const double sy = 0.1 + 0.5 * u(rng);
        const double sz = 0.1 + 0.5 * u(rng);
        for (std::size_t i = 0; i < n; ++i) pts.push_back(rotate_z({sx * g(rng), sy * g(rng), sz * g(rng)}, yaw));
    }
    return pts;
}

std::vector<Sample> synthetic_samples(std::size_t positives, std::size_t negatives, std::size_t points,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    out.reserve(positives + negatives);
    for (std::size_t i = 0; i < positives; ++i) out.push_back({normalize(pedestrian_shape(points, rng)), 1});
    for (std::size_t i = 0; i < negatives; ++i) out.push_back({normalize(non_pedestrian_shape(points, rng)), 0});
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

ClusterManifest reference_split_manifest() {
    ClusterManifest m;
    std::size_t next = 0;
    auto add = [&](const std::string& scene, ClusterLabel label, ClusterSource source, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            ManifestEntry e;
            e.cluster_id = "c" + std::to_string(next++);
            e.path = "clusters/" + e.cluster_id + ".ply";
            e.label = label;
            e.scene_id = scene;
            e.frame_id = scene + "_f" + std::to_string(i / 10);
            e.source = source;
            e.point_count = 2048;
            m.entries.push_back(std::move(e));
        }
    };
    // Test scene: 345 pedestrian (35 manual), 3,040 non-pedestrian.
    add("test", ClusterLabel::pedestrian, ClusterSource::automatic, 310);
    add("test", ClusterLabel::pedestrian, ClusterSource::manual, 35);
    add("test", ClusterLabel::non_pedestrian, ClusterSource::automatic, 3040);
    // Train/val pool: 8,665 pedestrian (867 manual), 75,486 non-pedestrian,
    // spread over eight scenes.
    const std::size_t scenes = 8;
    const std::size_t ped_auto = 8665 - 867;
    const std::size_t ped_manual = 867;
    const std::size_t non_ped = 75486;
    for (std::size_t s = 0; s < scenes; ++s) {
        const std::string scene = "scene" + std::to_string(s);
        auto share = [&](std::size_t total) { return total / scenes + (s < total % scenes ? 1 : 0); };
        add(scene, ClusterLabel::pedestrian, ClusterSource::automatic, share(ped_auto));
        add(scene, ClusterLabel::pedestrian, ClusterSource::manual, share(ped_manual));
        add(scene, ClusterLabel::non_pedestrian, ClusterSource::automatic, share(non_ped));
    }
    return m;
}

namespace {

struct ClassCount {
    const char* name;
    std::size_t train;
    std::size_t test;
};

// Official ModelNet40 object counts per class.
constexpr ClassCount kModelNet40[] = {
    {"airplane", 626, 100},   {"bathtub", 106, 50},    {"bed", 515, 100},         {"bench", 173, 20},
    {"bookshelf", 572, 100},  {"bottle", 335, 100},    {"bowl", 64, 20},          {"car", 197, 100},
    {"chair", 889, 100},      {"cone", 167, 20},       {"cup", 79, 20},           {"curtain", 138, 20},
    {"desk", 200, 86},        {"door", 109, 20},       {"dresser", 200, 86},      {"flower_pot", 149, 20},
    {"glass_box", 171, 100},  {"guitar", 155, 100},    {"keyboard", 145, 20},     {"lamp", 124, 20},
    {"laptop", 149, 20},      {"mantel", 284, 100},    {"monitor", 465, 100},     {"night_stand", 200, 86},
    {"person", 88, 20},       {"piano", 231, 100},     {"plant", 240, 100},       {"radio", 104, 20},
    {"range_hood", 115, 100}, {"sink", 128, 20},       {"sofa", 680, 100},        {"stairs", 124, 20},
    {"stool", 90, 20},        {"table", 392, 100},     {"tent", 163, 20},         {"toilet", 344, 100},
    {"tv_stand", 267, 100},   {"vase", 475, 100},      {"wardrobe", 87, 20},      {"xbox", 103, 20},
};

}  // namespace

std::string modelnet40_listing(bool reference_subset) {
    std::string out;
    for (const auto& c : kModelNet40) {
        std::size_t train = c.train;
        if (reference_subset) {
            // 9,840 training objects instead of 9,843; one of the three
            // missing objects must come from a positive class for the
            // positive total to be 1,496.
            const std::string name = c.name;
            if (name == "airplane" || name == "chair" || name == "sofa") --train;
        }
        const std::size_t n = train + c.test;
        for (std::size_t i = 1; i <= n; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "%04zu", i);
            out += std::string(c.name) + "_" + id + "\n";
        }
    }
    return out;
}

NetSpec tiny_spec() {
    NetSpec s;
    s.input_points = 32;
    s.sa_layers = {{8, {{0.6, 8, {8, 8}}}}};
    s.global_mlp_widths = {8};
    s.head_widths = {4, 2};
    s.dropout_keep = 0.8;
    return s;
}

}  // namespace pedcloud::fixtures
