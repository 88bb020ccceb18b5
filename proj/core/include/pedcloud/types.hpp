#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pedcloud {

/// A 3D point in meters, sensor frame.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

inline constexpr std::size_t kMaxSensorPoints = 45000;

struct PointCloud {
    std::vector<Point3> points;
    std::string frame_id;
    std::string scene_id;

    friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

inline constexpr std::string_view kPedestrian = "pedestrian";
inline constexpr std::string_view kNonPedestrian = "non_pedestrian";

/// Axis-aligned pixel rectangle given by absolute corner coordinates.
/// The label is free text; "pedestrian" and "non_pedestrian" are the
/// two classes the pipeline cares about.
struct Box2D {
    std::string label{kPedestrian};
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    std::optional<double> score;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool is_pedestrian() const { return label == kPedestrian; }

    friend bool operator==(const Box2D&, const Box2D&) = default;
};

/// Empty string when the box satisfies its invariants, otherwise the
/// first violation found.
std::string box_violation(const Box2D& box);
inline bool is_valid(const Box2D& box) { return box_violation(box).empty(); }

/// 3x4 row-major projection matrix; no distortion model.
struct CameraProjection {
    std::array<double, 12> p{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
    int image_width = 1224;
    int image_height = 1024;

    double at(int row, int col) const { return p[static_cast<std::size_t>(row * 4 + col)]; }

    friend bool operator==(const CameraProjection&, const CameraProjection&) = default;
};

std::string camera_violation(const CameraProjection& camera);

enum class ClusterLabel : int { non_pedestrian = 0, pedestrian = 1 };
enum class ClusterSource { automatic, manual };
enum class ReviewStatus { pending, accepted, rejected };
enum class Split { train, val, test, unassigned };

std::string_view to_string(ClusterLabel v);
std::string_view to_string(ClusterSource v);
std::string_view to_string(ReviewStatus v);
std::string_view to_string(Split v);

std::optional<ClusterLabel> parse_cluster_label(std::string_view s);
std::optional<ClusterSource> parse_cluster_source(std::string_view s);
std::optional<ReviewStatus> parse_review_status(std::string_view s);
std::optional<Split> parse_split(std::string_view s);

inline constexpr std::size_t kMinClusterPoints = 1024;

struct LabeledCluster {
    std::vector<Point3> points;
    ClusterLabel label = ClusterLabel::pedestrian;
    Box2D source_box;
    std::string scene_id;
    std::string frame_id;
    ClusterSource source = ClusterSource::automatic;
    ReviewStatus review = ReviewStatus::pending;

    friend bool operator==(const LabeledCluster&, const LabeledCluster&) = default;
};

/// One row of the dataset index. Points live in the PLY file at `path`,
/// resolved relative to the manifest's directory when not absolute.
struct ManifestEntry {
    std::string cluster_id;
    std::string path;
    ClusterLabel label = ClusterLabel::pedestrian;
    Box2D source_box;
    std::string scene_id;
    std::string frame_id;
    ClusterSource source = ClusterSource::automatic;
    ReviewStatus review = ReviewStatus::pending;
    Split split = Split::unassigned;
    std::size_t point_count = 0;
    std::string image_path;
    std::string reviewer;
    std::int64_t reviewed_at = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

inline constexpr int kManifestSchemaVersion = 1;

struct ClusterManifest {
    int schema_version = kManifestSchemaVersion;
    std::vector<ManifestEntry> entries;

    const ManifestEntry* find(std::string_view cluster_id) const;
    ManifestEntry* find(std::string_view cluster_id);

    friend bool operator==(const ClusterManifest&, const ClusterManifest&) = default;
};

}  // namespace pedcloud
