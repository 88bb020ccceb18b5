#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pedcloud/types.hpp"

namespace pedcloud {

// ASCII PLY point clouds. Coordinates are written in shortest round-trip
// decimal form so parse(write(c)) == c bit-exactly. frame_id and scene_id
// travel as "comment frame_id ..." / "comment scene_id ..." header lines.
PointCloud parse_point_cloud(std::string_view text);
std::string write_point_cloud(const PointCloud& cloud);

PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Detections keyed by frame_id, one JSON object per line:
/// {"frame_id": "...", "boxes": [{"class", "score", "x_min", "y_min", "x_max", "y_max"}]}
using DetectionMap = std::map<std::string, std::vector<Box2D>>;

DetectionMap parse_detections(std::string_view text);
std::string write_detections(const DetectionMap& detections);

DetectionMap load_detections(const std::filesystem::path& path);
void save_detections(const DetectionMap& detections, const std::filesystem::path& path);

/// {"p": [12 numbers, row-major], "image_width": W, "image_height": H}
CameraProjection parse_calibration(std::string_view text);
std::string write_calibration(const CameraProjection& camera);
CameraProjection load_calibration(const std::filesystem::path& path);

ClusterManifest parse_manifest(std::string_view text);
std::string write_manifest(const ClusterManifest& manifest);

ClusterManifest load_manifest(const std::filesystem::path& path);

/// Checks that every entry's file exists, then writes to a sibling temp
/// file and renames it over `path`.
void save_manifest(const ClusterManifest& manifest, const std::filesystem::path& path);

/// Entry paths are relative to the directory holding the manifest.
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         const ManifestEntry& entry);

std::string read_file(const std::filesystem::path& path);

/// Temp-file-then-rename write.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace pedcloud
