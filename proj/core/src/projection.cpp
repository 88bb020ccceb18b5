#include "pedcloud/projection.hpp"

#include <cmath>

#include "pedcloud/errors.hpp"

namespace pedcloud {

namespace {

struct ProjectedBox {
    std::vector<std::size_t> members;
};

// Per-point projections plus per-box membership for one frame.
struct FrameAssignment {
    std::vector<std::optional<PixelCoord>> pixels;
    std::vector<ProjectedBox> pbb;
    std::vector<ProjectedBox> npbb;
    std::vector<bool> in_any_box;
};

FrameAssignment assign_points(const PointCloud& cloud, std::span<const Box2D> pbb,
                              std::span<const Box2D> npbb, const CameraProjection& camera) {
    const std::size_t n = cloud.points.size();
    FrameAssignment a;
    a.pixels.reserve(n);
    for (const auto& p : cloud.points) a.pixels.push_back(try_project_point(camera, p));

    std::vector<bool> in_pbb(n, false);
    a.in_any_box.assign(n, false);
    a.pbb.resize(pbb.size());
    for (std::size_t b = 0; b < pbb.size(); ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            if (a.pixels[i] && box_contains(pbb[b], *a.pixels[i])) {
                a.pbb[b].members.push_back(i);
                in_pbb[i] = true;
                a.in_any_box[i] = true;
            }
        }
    }
    a.npbb.resize(npbb.size());
    for (std::size_t b = 0; b < npbb.size(); ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_pbb[i] && a.pixels[i] && box_contains(npbb[b], *a.pixels[i])) {
                a.npbb[b].members.push_back(i);
                a.in_any_box[i] = true;
            }
        }
    }
    return a;
}

}  // namespace

std::optional<PixelCoord> try_project_point(const CameraProjection& camera, const Point3& point,
                                            double min_depth) {
    const auto& p = camera.p;
    const double u = p[0] * point.x + p[1] * point.y + p[2] * point.z + p[3];
    const double v = p[4] * point.x + p[5] * point.y + p[6] * point.z + p[7];
    const double w = p[8] * point.x + p[9] * point.y + p[10] * point.z + p[11];
    if (!(w > min_depth)) return std::nullopt;
    return PixelCoord{u / w, v / w};
}

PixelCoord project_point(const CameraProjection& camera, const Point3& point, double min_depth) {
    if (!std::isfinite(point.x) || !std::isfinite(point.y) || !std::isfinite(point.z)) {
        throw BehindCamera("cannot project a non-finite point");
    }
    auto px = try_project_point(camera, point, min_depth);
    if (!px) throw BehindCamera("point is behind the camera (w <= min_depth)");
    return *px;
}

bool box_contains(const Box2D& box, const PixelCoord& px) {
    return box.x_min <= px.u && px.u < box.x_max && box.y_min <= px.v && px.v < box.y_max;
}

std::vector<LabeledCluster> transfer_labels(const PointCloud& cloud, std::span<const Box2D> pbb,
                                            std::span<const Box2D> npbb,
                                            const CameraProjection& camera, std::size_t min_points) {
    const auto a = assign_points(cloud, pbb, npbb, camera);
    std::vector<LabeledCluster> out;
    auto emit = [&](const Box2D& box, const ProjectedBox& pb, ClusterLabel label) {
        if (pb.members.size() <= min_points) return;
        LabeledCluster c;
        c.points.reserve(pb.members.size());
        for (std::size_t i : pb.members) c.points.push_back(cloud.points[i]);
        c.label = label;
        c.source_box = box;
        c.scene_id = cloud.scene_id;
        c.frame_id = cloud.frame_id;
        out.push_back(std::move(c));
    };
    for (std::size_t b = 0; b < pbb.size(); ++b) emit(pbb[b], a.pbb[b], ClusterLabel::pedestrian);
    for (std::size_t b = 0; b < npbb.size(); ++b) emit(npbb[b], a.npbb[b], ClusterLabel::non_pedestrian);
    return out;
}

CoverageReport coverage_report(std::span<const FrameBoxes> frames, const CameraProjection& camera,
                               std::size_t min_points) {
    CoverageReport r;
    for (const auto& f : frames) {
        const auto a = assign_points(f.cloud, f.pbb, f.npbb, camera);
        r.total_points += f.cloud.points.size();
        for (std::size_t i = 0; i < a.pixels.size(); ++i) {
            if (!a.pixels[i]) {
                ++r.behind_camera;
            } else if (a.in_any_box[i]) {
                ++r.labeled_points;
            } else {
                ++r.unlabeled_points;
            }
        }
        auto record = [&](const std::vector<ProjectedBox>& boxes, ClusterLabel label) {
            for (std::size_t b = 0; b < boxes.size(); ++b) {
                const bool kept = boxes[b].members.size() > min_points;
                r.boxes.push_back({f.cloud.frame_id, label, b, boxes[b].members.size(), kept});
                ++(kept ? r.kept_clusters : r.discarded_clusters);
            }
        };
        record(a.pbb, ClusterLabel::pedestrian);
        record(a.npbb, ClusterLabel::non_pedestrian);
    }
    return r;
}

}  // namespace pedcloud
