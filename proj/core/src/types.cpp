#include "pedcloud/types.hpp"

#include <algorithm>
#include <cmath>

namespace pedcloud {

std::string box_violation(const Box2D& box) {
    for (double v : {box.x_min, box.y_min, box.x_max, box.y_max}) {
        if (!std::isfinite(v)) return "non-finite box coordinate";
    }
    if (!(box.x_min < box.x_max)) return "box has x_min >= x_max";
    if (!(box.y_min < box.y_max)) return "box has y_min >= y_max";
    if (box.score && !(*box.score >= 0.0 && *box.score <= 1.0)) return "score outside [0,1]";
    return {};
}

std::string camera_violation(const CameraProjection& camera) {
    if (!std::all_of(camera.p.begin(), camera.p.end(), [](double v) { return std::isfinite(v); })) {
        return "projection matrix has non-finite entries";
    }
    if (camera.p[8] == 0.0 && camera.p[9] == 0.0 && camera.p[10] == 0.0 && camera.p[11] == 0.0) {
        return "projection matrix bottom row is all zero";
    }
    if (camera.image_width <= 0 || camera.image_height <= 0) return "image size must be positive";
    return {};
}

std::string_view to_string(ClusterLabel v) {
    return v == ClusterLabel::pedestrian ? kPedestrian : kNonPedestrian;
}

std::string_view to_string(ClusterSource v) {
    return v == ClusterSource::automatic ? "auto" : "manual";
}

std::string_view to_string(ReviewStatus v) {
    switch (v) {
        case ReviewStatus::pending: return "pending";
        case ReviewStatus::accepted: return "accepted";
        case ReviewStatus::rejected: return "rejected";
    }
    return "pending";
}

std::string_view to_string(Split v) {
    switch (v) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

std::optional<ClusterLabel> parse_cluster_label(std::string_view s) {
    if (s == kPedestrian) return ClusterLabel::pedestrian;
    if (s == kNonPedestrian) return ClusterLabel::non_pedestrian;
    return std::nullopt;
}

std::optional<ClusterSource> parse_cluster_source(std::string_view s) {
    if (s == "auto") return ClusterSource::automatic;
    if (s == "manual") return ClusterSource::manual;
    return std::nullopt;
}

std::optional<ReviewStatus> parse_review_status(std::string_view s) {
    if (s == "pending") return ReviewStatus::pending;
    if (s == "accepted") return ReviewStatus::accepted;
    if (s == "rejected") return ReviewStatus::rejected;
    return std::nullopt;
}

std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    return std::nullopt;
}

const ManifestEntry* ClusterManifest::find(std::string_view cluster_id) const {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ManifestEntry& e) { return e.cluster_id == cluster_id; });
    return it == entries.end() ? nullptr : &*it;
}

ManifestEntry* ClusterManifest::find(std::string_view cluster_id) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const ManifestEntry& e) { return e.cluster_id == cluster_id; });
    return it == entries.end() ? nullptr : &*it;
}

}  // namespace pedcloud
