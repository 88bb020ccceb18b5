#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

inline constexpr double kDefaultMinDepth = 1e-9;

/// (u, v) = (u'/w', v'/w') with (u', v', w') = P * (x, y, z, 1).
/// Throws BehindCamera when w' <= min_depth.
PixelCoord project_point(const CameraProjection& camera, const Point3& point,
                         double min_depth = kDefaultMinDepth);

/// Non-throwing variant; nullopt for points behind the camera.
std::optional<PixelCoord> try_project_point(const CameraProjection& camera, const Point3& point,
                                            double min_depth = kDefaultMinDepth);

/// Half-open test: x_min <= u < x_max and y_min <= v < y_max.
bool box_contains(const Box2D& box, const PixelCoord& px);

/// Back projection of 2D boxes onto a cloud. Each box collects every point
/// whose projection falls inside it. A point inside a pedestrian box never
/// joins a non-pedestrian cluster; overlapping pedestrian boxes may share
/// points. Clusters with <= min_points points are dropped. Output order is
/// pedestrian boxes in input order, then non-pedestrian boxes.
std::vector<LabeledCluster> transfer_labels(const PointCloud& cloud, std::span<const Box2D> pbb,
                                            std::span<const Box2D> npbb,
                                            const CameraProjection& camera,
                                            std::size_t min_points = kMinClusterPoints);

struct FrameBoxes {
    PointCloud cloud;
    std::vector<Box2D> pbb;
    std::vector<Box2D> npbb;
};

struct BoxCoverage {
    std::string frame_id;
    ClusterLabel label = ClusterLabel::pedestrian;
    std::size_t box_index = 0;  // within its pbb / npbb list
    std::size_t points = 0;
    bool kept = false;
};

struct CoverageReport {
    std::size_t total_points = 0;
    std::size_t labeled_points = 0;    // inside at least one box
    std::size_t unlabeled_points = 0;  // in front of the camera, in no box
    std::size_t behind_camera = 0;
    std::size_t kept_clusters = 0;
    std::size_t discarded_clusters = 0;
    std::vector<BoxCoverage> boxes;
};

CoverageReport coverage_report(std::span<const FrameBoxes> frames, const CameraProjection& camera,
                               std::size_t min_points = kMinClusterPoints);

}  // namespace pedcloud
